#include "arms/samplers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <string>

#include "arms/errors.hpp"

namespace arms {

namespace {

struct Candidate {
  double x;
  double log_p;
  double log_prop;
};

// Rebuilds the sampled proposal from the base one for generation t.
void refresh_proposal(SamplerState& s) {
  if (s.options.tail_beta > 0.0) {
    s.proposal = inflate_tails(s.base_proposal, s.options.tail_beta, s.options.tail_alpha_decay, s.t);
  } else {
    s.proposal = s.base_proposal;
  }
  s.base_proposal.set_generation(s.t);
  s.proposal.set_generation(s.t);
}

void advance_generation(SamplerState& s) {
  ++s.t;
  if (s.options.tail_beta > 0.0) {
    refresh_proposal(s);
  } else {
    s.base_proposal.set_generation(s.t);
    s.proposal.set_generation(s.t);
  }
}

// Adds x to the support. Zero-density points and duplicates are skipped.
bool add_support_point(SamplerState& s, const TargetDensity& target, const Candidate& c) {
  if (!(c.log_p > -kInf)) {
    ++s.counters.skipped_insertions;
    return false;
  }
  try {
    s.base_proposal = insert(s.support, s.base_proposal, c.x, target, s.options.build);
  } catch (const DuplicatePoint&) {
    ++s.counters.skipped_insertions;
    return false;
  }
  s.insertion_iterations.push_back(s.k);
  refresh_proposal(s);
  return true;
}

void notify(const SamplerState& s) {
  if (s.options.on_rebuild) s.options.on_rebuild(s);
}

// RS rejection: the candidate becomes a support point and t advances.
void reject_candidate(SamplerState& s, const TargetDensity& target, const Candidate& c) {
  if (add_support_point(s, target, c)) ++s.counters.rs_rejections;
  advance_generation(s);
  notify(s);
}

void check_rejection_budget(const SamplerState& s, long consecutive) {
  if (consecutive >= s.options.max_consecutive_rejections) {
    throw SamplerError("rejection test failed " + std::to_string(consecutive) +
                       " times in a row; proposal looks degenerate");
  }
}

// Steps 3-4 shared by ARMS-type samplers: draw until the RS test accepts.
Candidate rejection_stage(SamplerState& s, const TargetDensity& target, Rng& rng) {
  for (long consecutive = 0;; ++consecutive) {
    check_rejection_budget(s, consecutive);
    const auto [x, w] = s.proposal.sample(rng);
    const Candidate c{x, target.log_density(x), w};
    const double u = rng.uniform();
    if (std::log(u) <= c.log_p - c.log_prop) return c;
    reject_candidate(s, target, c);
  }
}

struct MhOutcome {
  Candidate proposed;
  Candidate previous;
  bool accepted;
};

MhOutcome metropolis_stage(SamplerState& s, const TargetDensity& target, Rng& rng) {
  const Candidate c = rejection_stage(s, target, rng);
  const Candidate prev{s.x_current, s.log_p_current, s.proposal.log_eval(s.x_current)};
  const double alpha = mh_alpha(c.log_p, prev.log_p, c.log_prop, prev.log_prop);
  bool accepted = true;
  if (alpha < 1.0) accepted = rng.uniform() <= alpha;
  if (accepted) {
    s.x_current = c.x;
    s.log_p_current = c.log_p;
  } else {
    ++s.counters.mh_rejections;
  }
  return {c, prev, accepted};
}

// Second control: add y with probability 1 - pi(y)/p(y) when pi(y) < p(y).
void second_control(SamplerState& s, const TargetDensity& target, Rng& rng, const Candidate& y) {
  if (!(y.log_p > -kInf)) return;
  const double log_ratio = y.log_prop - y.log_p;
  if (!(log_ratio < 0.0)) return;
  const double u2 = rng.uniform();
  if (u2 > std::exp(log_ratio) && add_support_point(s, target, y)) {
    ++s.counters.second_control_additions;
  }
}

double finish_step(SamplerState& s) {
  ++s.k;
  advance_generation(s);
  s.log_prop_current = s.proposal.log_eval(s.x_current);
  notify(s);
  return s.x_current;
}

double default_initial_state(const SupportSet& support) {
  const auto values = support.values();
  const std::size_t j = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  if (j + 1 < support.size()) return 0.5 * (support.point(j) + support.point(j + 1));
  return 0.5 * (support.point(j - 1) + support.point(j));
}

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace

std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::ars: return "ARS";
    case SamplerKind::arms: return "ARMS";
    case SamplerKind::a2rms: return "A2RMS";
    case SamplerKind::ia2rms: return "IA2RMS";
  }
  return "?";
}

std::optional<SamplerKind> parse_sampler(std::string_view s) {
  const std::string l = lower(s);
  if (l == "ars") return SamplerKind::ars;
  if (l == "arms") return SamplerKind::arms;
  if (l == "a2rms") return SamplerKind::a2rms;
  if (l == "ia2rms") return SamplerKind::ia2rms;
  return std::nullopt;
}

SamplerState make_state(const TargetDensity& target, Procedure proc, SupportSet support, SamplerOptions options) {
  SamplerState s;
  s.initial_support = support.size();
  s.base_proposal = build(support, proc, target, options.build);
  s.support = std::move(support);
  s.k_stop = options.adaptation_stop;
  s.options = std::move(options);
  refresh_proposal(s);

  s.x_current = s.options.initial_state.value_or(default_initial_state(s.support));
  s.log_p_current = target.log_density(s.x_current);
  if (!std::isfinite(s.log_p_current)) {
    throw SamplerError("initial state " + std::to_string(s.x_current) + " has zero target density");
  }
  s.log_prop_current = s.proposal.log_eval(s.x_current);
  return s;
}

double mh_alpha(double log_p_new, double log_p_cur, double log_prop_new, double log_prop_cur) {
  if (!(log_p_new > -kInf)) return 0.0;
  const double log_ratio =
      (log_p_new + std::min(log_p_cur, log_prop_cur)) - (log_p_cur + std::min(log_p_new, log_prop_new));
  if (std::isnan(log_ratio)) return 0.0;
  if (log_ratio >= 0.0) return 1.0;
  return std::exp(log_ratio);
}

double ars_next(SamplerState& s, const TargetDensity& target, Rng& rng) {
  static const double slack = std::log1p(1e-10);
  for (long consecutive = 0;; ++consecutive) {
    check_rejection_budget(s, consecutive);
    const auto [x, w] = s.proposal.sample(rng);
    const Candidate c{x, target.log_density(x), w};
    const double u = rng.uniform();
    if (c.log_p > c.log_prop + slack) {
      throw DominanceViolation("p(x') exceeds the envelope at x' = " + std::to_string(x));
    }
    if (std::log(u) <= c.log_p - c.log_prop) {
      s.x_current = c.x;
      s.log_p_current = c.log_p;
      return finish_step(s);
    }
    reject_candidate(s, target, c);
  }
}

double arms_next(SamplerState& s, const TargetDensity& target, Rng& rng) {
  metropolis_stage(s, target, rng);
  return finish_step(s);
}

double a2rms_next(SamplerState& s, const TargetDensity& target, Rng& rng) {
  const MhOutcome o = metropolis_stage(s, target, rng);
  if (s.k_stop < 0 || s.k < s.k_stop) second_control(s, target, rng, o.proposed);
  return finish_step(s);
}

double ia2rms_next(SamplerState& s, const TargetDensity& target, Rng& rng) {
  const MhOutcome o = metropolis_stage(s, target, rng);
  const Candidate& y = o.accepted ? o.previous : o.proposed;
  if (!s.support.contains(y.x)) second_control(s, target, rng, y);
  return finish_step(s);
}

double step(SamplerKind kind, SamplerState& state, const TargetDensity& target, Rng& rng) {
  switch (kind) {
    case SamplerKind::ars: return ars_next(state, target, rng);
    case SamplerKind::arms: return arms_next(state, target, rng);
    case SamplerKind::a2rms: return a2rms_next(state, target, rng);
    case SamplerKind::ia2rms: return ia2rms_next(state, target, rng);
  }
  throw SamplerError("unknown sampler kind");
}

ChainResult run_chain(SamplerKind kind, const TargetDensity& target, Procedure proc, const SupportSet& s0, long n,
                      long k_stop, Rng& rng, SamplerOptions options) {
  if (n < 1) throw SamplerError("chain length N must be at least 1");
  options.adaptation_stop = k_stop < 0 ? n : k_stop;

  ChainResult result;
  try {
    result.state = make_state(target, proc, s0, std::move(options));
  } catch (...) {
    std::throw_with_nested(SamplerError(std::string(to_string(kind)) + "/" + std::string(to_string(proc)) +
                                        ": initial build failed with m = " + std::to_string(s0.size())));
  }

  result.chain.reserve(static_cast<std::size_t>(n));
  SamplerState& s = result.state;
  try {
    for (long i = 0; i < n; ++i) result.chain.push_back(step(kind, s, target, rng));
  } catch (...) {
    std::throw_with_nested(SamplerError(std::string(to_string(kind)) + "/" + std::string(to_string(proc)) +
                                        " failed at k = " + std::to_string(s.k) + ", t = " + std::to_string(s.t) +
                                        ", m = " + std::to_string(s.support.size())));
  }
  return result;
}

}  // namespace arms
