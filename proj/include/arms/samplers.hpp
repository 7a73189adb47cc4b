#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "arms/envelope.hpp"
#include "arms/random.hpp"
#include "arms/target.hpp"

namespace arms {

enum class SamplerKind { ars, arms, a2rms, ia2rms };

std::string_view to_string(SamplerKind k);
/// Accepts "ars", "arms", "a2rms", "ia2rms" (case-insensitive).
std::optional<SamplerKind> parse_sampler(std::string_view s);

struct SamplerState;

struct SamplerOptions {
  /// A2RMS adaptation stop time K; the second control runs while k < K.
  /// Negative means "K = N" in run_chain and "never stop" for single steps.
  long adaptation_stop = -1;

  /// Tail inflation l' = l * (1 - beta * exp(-alpha_decay * t)); beta = 0
  /// disables it.
  double tail_beta = 0.0;
  double tail_alpha_decay = 1.0;

  BuildOptions build;

  /// Initial chain state; defaults to the midpoint of the support interval
  /// next to the support point with the largest log-density.
  std::optional<double> initial_state;

  /// Abort when the rejection-sampling test fails this many times in a row.
  long max_consecutive_rejections = 1'000'000;

  /// Called after every proposal rebuild (for diagnostics and dumps).
  std::function<void(const SamplerState&)> on_rebuild;
};

struct SamplerCounters {
  long rs_rejections = 0;             ///< support points added by the RS test
  long second_control_additions = 0;  ///< support points added by the second control
  long mh_rejections = 0;
  long skipped_insertions = 0;        ///< duplicates and zero-density candidates
};

struct SamplerState {
  double x_current = 0.0;
  double log_p_current = 0.0;
  double log_prop_current = 0.0;  ///< W_t(x_current) as of the last step
  long k = 0;                     ///< chain iteration
  long t = 0;                     ///< proposal generation
  SupportSet support;
  PiecewiseProposal base_proposal;  ///< proposal before tail inflation
  PiecewiseProposal proposal;       ///< proposal actually sampled from
  long k_stop = -1;
  SamplerCounters counters;
  std::size_t initial_support = 0;
  /// Chain iteration k at which each support point was added.
  std::vector<long> insertion_iterations;
  SamplerOptions options;
};

/// Builds the initial proposal and chain state.
SamplerState make_state(const TargetDensity& target, Procedure proc, SupportSet support,
                        SamplerOptions options = {});

/// Metropolis-Hastings acceptance probability of the ARMS-type step,
/// min[1, p(x') min(p(x_k), pi(x_k)) / (p(x_k) min(p(x'), pi(x')))],
/// evaluated in the log domain.
double mh_alpha(double log_p_new, double log_p_cur, double log_prop_new, double log_prop_cur);

// Random draws per candidate, in order: piece choice, within-piece draw(s),
// the RS uniform u'. On RS acceptance the MH uniform is drawn only when
// alpha < 1, and the second-control uniform u2 only when pi(y) < p(y), so a
// dominating proposal consumes exactly the same stream as plain ARS.

/// One exact sample by adaptive rejection sampling.
/// Throws DominanceViolation if the proposal falls below the target.
double ars_next(SamplerState& state, const TargetDensity& target, Rng& rng);

/// One ARMS chain step; returns x_{k+1}.
double arms_next(SamplerState& state, const TargetDensity& target, Rng& rng);

/// ARMS step plus the second control on x' while k < K.
double a2rms_next(SamplerState& state, const TargetDensity& target, Rng& rng);

/// ARMS step plus the second control on the point the chain leaves behind,
/// so the support never contains the current state.
double ia2rms_next(SamplerState& state, const TargetDensity& target, Rng& rng);

double step(SamplerKind kind, SamplerState& state, const TargetDensity& target, Rng& rng);

struct ChainResult {
  std::vector<double> chain;
  SamplerState state;
};

/// Runs N steps (N exact samples for ARS). `k_stop` < 0 means K = N.
/// Errors are rethrown nested inside a SamplerError carrying (k, t, m).
ChainResult run_chain(SamplerKind kind, const TargetDensity& target, Procedure proc, const SupportSet& s0,
                      long n, long k_stop, Rng& rng, SamplerOptions options = {});

}  // namespace arms
