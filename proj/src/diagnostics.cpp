#include "arms/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "arms/errors.hpp"

namespace arms {

namespace {

constexpr double kNegligible = 1e-12;

std::vector<double> evaluate(const LogDensityFn& f, const QuadratureGrid& grid) {
  std::vector<double> out(static_cast<std::size_t>(grid.n_points));
  for (long i = 0; i < grid.n_points; ++i) out[static_cast<std::size_t>(i)] = std::exp(f(grid.node(i)));
  return out;
}

void require_negligible_ends(const std::vector<double>& dens, const char* what) {
  const double peak = *std::max_element(dens.begin(), dens.end());
  if (!(peak > 0.0)) throw GridError(std::string(what) + " density vanishes on the whole grid");
  if (dens.front() > kNegligible * peak || dens.back() > kNegligible * peak) {
    throw GridError(std::string(what) + " density is not negligible at the grid ends");
  }
}

double trapezoid(const std::vector<double>& ys, double h) {
  double s = 0.5 * (ys.front() + ys.back());
  for (std::size_t i = 1; i + 1 < ys.size(); ++i) s += ys[i];
  return s * h;
}

LogDensityFn target_fn(const TargetDensity& target) {
  return [&target](double x) { return target.log_density(x); };
}

LogDensityFn proposal_fn(const PiecewiseProposal& prop) {
  return [&prop](double x) { return prop.log_eval(x); };
}

// Area of the part of p inside [a, b].
double clipped_area(const Piece& p, double a, double b) {
  Piece c{std::max(p.lo, a), std::min(p.hi, b), p.form, 0.0};
  if (!(c.lo < c.hi)) return 0.0;
  if (std::holds_alternative<LinearPdf>(p.form)) {
    c.form = LinearPdf{std::exp(p.log_eval(c.lo)), std::exp(p.log_eval(c.hi))};
  }
  return piece_area(c);
}

// Exact proposal mass on (-inf, lo) and (hi, +inf).
double mass_outside(const PiecewiseProposal& prop, double lo, double hi) {
  double out = 0.0;
  for (const Piece& p : prop.pieces()) {
    if (p.lo < lo) out += clipped_area(p, -kInf, lo);
    if (p.hi > hi) out += clipped_area(p, hi, kInf);
  }
  return out;
}

void check_domain(const PiecewiseProposal& prop, const QuadratureGrid& grid) {
  if (grid.lo < prop.domain().lower || grid.hi > prop.domain().upper) {
    throw GridError("grid extends beyond the proposal domain");
  }
}

}  // namespace

void QuadratureGrid::validate() const {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw GridError("grid needs finite lo < hi");
  if (n_points < 2) throw GridError("grid needs at least 2 points");
}

double target_mass(const TargetDensity& target, const QuadratureGrid& grid) {
  grid.validate();
  const auto p = evaluate(target_fn(target), grid);
  require_negligible_ends(p, "target");
  return trapezoid(p, grid.step());
}

double discrepancy(const LogDensityFn& log_pi, const TargetDensity& target, const QuadratureGrid& grid) {
  grid.validate();
  const auto pi = evaluate(log_pi, grid);
  const auto p = evaluate(target_fn(target), grid);
  require_negligible_ends(pi, "proposal");
  require_negligible_ends(p, "target");
  std::vector<double> diff(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) diff[i] = std::abs(pi[i] - p[i]);
  return trapezoid(diff, grid.step());
}

double discrepancy(const PiecewiseProposal& prop, const TargetDensity& target, const QuadratureGrid& grid) {
  grid.validate();
  check_domain(prop, grid);
  const auto pi = evaluate(proposal_fn(prop), grid);
  const auto p = evaluate(target_fn(target), grid);
  require_negligible_ends(p, "target");
  std::vector<double> diff(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) diff[i] = std::abs(pi[i] - p[i]);
  return trapezoid(diff, grid.step()) + mass_outside(prop, grid.lo, grid.hi);
}

double acceptance_rate(const LogDensityFn& log_pi, const TargetDensity& target, const QuadratureGrid& grid) {
  grid.validate();
  const auto pi = evaluate(log_pi, grid);
  require_negligible_ends(pi, "proposal");
  return target_mass(target, grid) / trapezoid(pi, grid.step());
}

double acceptance_rate(const PiecewiseProposal& prop, const TargetDensity& target, const QuadratureGrid& grid) {
  return target_mass(target, grid) / prop.total_mass();
}

namespace {

// Sums are taken relative to the first value, so a constant sequence has
// exactly zero spread.
double shifted_mean(std::span<const double> xs, double shift) {
  double s = 0.0;
  for (double x : xs) s += x - shift;
  return s / static_cast<double>(xs.size());
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return xs.front() + shifted_mean(xs, xs.front());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double shift = xs.front();
  const double m = shifted_mean(xs, shift);
  double ss = 0.0;
  for (double x : xs) ss += (x - shift - m) * (x - shift - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double lag1_correlation(std::span<const double> chain) {
  if (chain.size() < 3) throw DegenerateChain("lag-1 correlation needs at least 3 samples");
  const std::size_t n = chain.size() - 1;
  const auto head = chain.first(n);
  const auto tail = chain.last(n);
  const double shift = chain.front();
  const double ma = shifted_mean(head, shift);
  const double mb = shifted_mean(tail, shift);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = head[i] - shift - ma;
    const double b = tail[i] - shift - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DegenerateChain("chain has zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

RunSummary summarize(std::span<const double> chain, const SamplerState& state, const TargetDensity& target,
                     const QuadratureGrid& grid) {
  RunSummary r;
  r.est_mean = mean(chain);
  r.chain_std = stddev(chain);
  try {
    r.lag1_corr = lag1_correlation(chain);
  } catch (const DegenerateChain&) {
    r.lag1_corr.reset();
  }
  r.final_m = static_cast<long>(state.support.size());
  r.initial_m = static_cast<long>(state.initial_support);
  r.rs_rejections = state.counters.rs_rejections;
  r.second_control_additions = state.counters.second_control_additions;
  r.mh_rejections = state.counters.mh_rejections;
  r.final_D = discrepancy(state.proposal, target, grid);
  return r;
}

}  // namespace arms
