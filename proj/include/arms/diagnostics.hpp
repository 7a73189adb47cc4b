#pragma once

#include <functional>
#include <optional>
#include <span>

#include "arms/envelope.hpp"
#include "arms/samplers.hpp"
#include "arms/target.hpp"

namespace arms {

/// Uniform quadrature grid with n_points nodes on [lo, hi].
struct QuadratureGrid {
  double lo = -20.0;
  double hi = 22.0;
  long n_points = 20001;

  double step() const { return (hi - lo) / static_cast<double>(n_points - 1); }
  double node(long i) const { return i + 1 == n_points ? hi : lo + static_cast<double>(i) * step(); }
  /// Throws GridError unless lo < hi and n_points >= 2.
  void validate() const;
};

struct RunSummary {
  double est_mean = 0.0;
  double chain_std = 0.0;
  std::optional<double> lag1_corr;  ///< empty for a constant chain
  long final_m = 0;
  long initial_m = 0;
  long rs_rejections = 0;
  long second_control_additions = 0;
  long mh_rejections = 0;
  double final_D = 0.0;
};

using LogDensityFn = std::function<double(double)>;

/// Trapezoid-rule estimate of the L1 distance between exp(log_pi) and p.
/// Throws GridError when either density at a grid end exceeds 1e-12 of its
/// maximum on the grid.
double discrepancy(const LogDensityFn& log_pi, const TargetDensity& target, const QuadratureGrid& grid);

/// Same distance for a piecewise proposal. Proposal mass outside the grid is
/// added exactly from the piece areas, so only the target must be negligible
/// at the grid ends.
double discrepancy(const PiecewiseProposal& prop, const TargetDensity& target, const QuadratureGrid& grid);

/// c_p / c_pi with both masses from the grid.
double acceptance_rate(const LogDensityFn& log_pi, const TargetDensity& target, const QuadratureGrid& grid);

/// c_p / c_pi with c_pi = total_mass(prop). Exceeds 1 when the proposal does
/// not dominate the target.
double acceptance_rate(const PiecewiseProposal& prop, const TargetDensity& target, const QuadratureGrid& grid);

/// Trapezoid-rule integral of exp(V) over the grid.
double target_mass(const TargetDensity& target, const QuadratureGrid& grid);

/// Pearson correlation of consecutive pairs. Throws DegenerateChain on short
/// or constant chains.
double lag1_correlation(std::span<const double> chain);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double stddev(std::span<const double> xs);

RunSummary summarize(std::span<const double> chain, const SamplerState& state, const TargetDensity& target,
                     const QuadratureGrid& grid);

}  // namespace arms
