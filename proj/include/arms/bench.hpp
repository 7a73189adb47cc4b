#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arms/diagnostics.hpp"
#include "arms/envelope.hpp"
#include "arms/random.hpp"
#include "arms/samplers.hpp"
#include "arms/target.hpp"

namespace arms::bench {

/// S_0 = {lower, upper} plus `interior_count` uniform points in
/// [interior_lo, interior_hi], drawn from the run's own stream.
struct InitialSupportPolicy {
  double lower = -10.0;
  double upper = 10.0;
  long interior_count = 2;
  double interior_lo = -10.0;
  double interior_hi = 10.0;
  /// Interior points are redrawn while the initial tails would not decay.
  long max_redraws = 1000;
};

struct ExperimentConfig {
  std::string target = "benchmark";  ///< benchmark | standard_normal | mixture
  GaussianMixtureSpec mixture = GaussianMixtureSpec::benchmark();
  std::vector<SamplerKind> samplers{SamplerKind::arms, SamplerKind::a2rms, SamplerKind::ia2rms};
  std::vector<Procedure> procedures{Procedure::arms_max_min, Procedure::plain_secant, Procedure::piecewise_flat,
                                    Procedure::trapezoid};
  long n = 5000;
  long runs = 200;
  std::uint64_t base_seed = 1;
  long k_stop = -1;  ///< -1 means K = N
  InitialSupportPolicy s0;
  QuadratureGrid grid;
  double tail_beta = 0.0;
  double tail_alpha = 1.0;
  long workers = 0;  ///< 0 = hardware concurrency
  std::string output_path = "results.csv";

  TargetDensity make_target() const;
  SamplerOptions sampler_options() const;
};

/// Sets one field from its textual value; shared by the config file and the
/// command line. Throws ParseError naming the field.
void set_field(ExperimentConfig& cfg, std::string_view key, std::string_view value, int line = 0);

/// Parses flat `key = value` text (comma-separated lists, '#' comments) on
/// top of the defaults, then validates.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Throws ParseError for out-of-range settings.
void validate(const ExperimentConfig& cfg);

struct CellResult {
  SamplerKind sampler{};
  Procedure procedure{};
  long runs_ok = 0;
  long runs_failed = 0;
  double est_mean = 0.0;
  double std_est = 0.0;  ///< across-run std of per-run means
  double lag1_corr = 0.0;
  double avg_support = 0.0;
  double avg_rs_rej = 0.0;
  double avg_second_ctrl = 0.0;
  double avg_D = 0.0;
  std::vector<RunSummary> summaries;  ///< successful runs, in run order
  std::vector<std::string> failures;

  /// More than 1% of the runs failed.
  bool failed() const;
};

struct ExperimentTable {
  std::vector<CellResult> cells;
  long n = 0;
  std::uint64_t seed = 0;

  bool any_cell_failed() const;
};

/// Draws S_0 for one run. Throws TailSlopeError when no valid draw is found.
SupportSet draw_initial_support(const InitialSupportPolicy& policy, const TargetDensity& target, Procedure proc,
                                Rng& rng);

struct RunOutput {
  ChainResult result;
  RunSummary summary;
};

/// One seeded run: seed = base_seed + run_index, S_0 drawn first.
RunOutput run_single(const ExperimentConfig& cfg, SamplerKind sampler, Procedure proc, long run_index);

/// Aggregates the per-run summaries of one cell.
CellResult aggregate(SamplerKind sampler, Procedure proc, std::vector<RunSummary> summaries,
                     std::vector<std::string> failures);

ExperimentTable run_experiment(const ExperimentConfig& cfg);

/// Formats with 6 significant digits, keeping trailing zeros ("1.64800").
std::string format_sig6(double x);

void write_csv(const ExperimentTable& table, std::ostream& out);
/// Throws Error naming the path on IO failure.
void emit_csv(const ExperimentTable& table, const std::string& path);

/// Runs one chain for `iterations` steps (run index 0) and writes the
/// proposal it ends with as CSV.
void dump_proposal(const ExperimentConfig& cfg, SamplerKind sampler, Procedure proc, long iterations,
                   std::ostream& out);

}  // namespace arms::bench
