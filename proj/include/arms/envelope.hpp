#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "arms/random.hpp"
#include "arms/target.hpp"

namespace arms {

/// Minimum separation between support points: 1e-9 * max(1, |s|).
double duplicate_tolerance(double s);

/// Sorted support abscissas with cached log-density values.
class SupportSet {
 public:
  SupportSet() = default;

  /// Sorts the points and evaluates the target at each. Throws DuplicatePoint
  /// for near-equal points, NonFiniteValue when a value is NaN or when every
  /// point has zero density.
  SupportSet(std::vector<double> points, const TargetDensity& target);

  /// Inserts x keeping the order and returns its index.
  /// Throws DuplicatePoint within duplicate_tolerance of an existing point.
  std::size_t insert(double x, const TargetDensity& target);

  /// Membership under the duplicate tolerance.
  bool contains(double x) const;

  /// Index of the first point >= x.
  std::size_t lower_index(double x) const;

  std::span<const double> points() const { return points_; }
  std::span<const double> values() const { return values_; }
  double point(std::size_t i) const { return points_[i]; }
  double value(std::size_t i) const { return values_[i]; }
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<double> points_;
  std::vector<double> values_;
};

enum class Procedure {
  tangent,          ///< T: minimum of tangent lines (needs dV/dx).
  secant,           ///< S: derivative-free secant envelope.
  arms_max_min,     ///< P1: max/min of neighbouring secants.
  plain_secant,     ///< P2: secant of each interval.
  piecewise_flat,   ///< P3: max of endpoint values, secant tails.
  trapezoid,        ///< P4: linear in the pdf domain, exponential tails.
};

std::string_view to_string(Procedure p);
/// Accepts "T", "S", "P1".."P4" (case-insensitive) and the enum names.
std::optional<Procedure> parse_procedure(std::string_view s);
std::size_t minimum_support(Procedure p);

/// Density exp(value + slope * (x - anchor)); equivalent to exp(a + b x)
/// with a = value - slope * anchor, b = slope.
struct ExpLinear {
  double anchor = 0.0;
  double value = 0.0;
  double slope = 0.0;

  static ExpLinear from_coefficients(double a, double b) { return {0.0, a, b}; }
  double intercept() const { return value - slope * anchor; }
  double at(double x) const { return value + slope * (x - anchor); }
};

/// Density exp(level).
struct FlatLog {
  double level = 0.0;
};

/// Density linear between p_lo at the lower end and p_hi at the upper end.
struct LinearPdf {
  double p_lo = 0.0;
  double p_hi = 0.0;
};

using PieceForm = std::variant<ExpLinear, FlatLog, LinearPdf>;

struct Piece {
  double lo = 0.0;
  double hi = 0.0;
  PieceForm form;
  double area = 0.0;

  /// log density of the piece at x (x is not range-checked).
  double log_eval(double x) const;
};

/// Exact integral of a piece's density over [lo, hi].
/// Throws DivergentArea for an unbounded piece whose density does not decay.
double piece_area(const Piece& piece);

/// Makes a piece with its area filled in.
Piece make_piece(double lo, double hi, PieceForm form);

/// Optional bounded variant of P3 for log-concave targets: the interval that
/// contains `mode` is raised to the known upper bound of V.
struct BoundedFlat {
  double bound = 0.0;
  double mode = 0.0;
};

struct BuildOptions {
  std::optional<BoundedFlat> bounded_flat;
};

/// Normalizable piecewise proposal pi_t(x) = exp(W_t(x)).
///
/// Piece intervals are left-open (lo, hi] and tile the target domain. For all
/// procedures except T, pieces are grouped by support interval so that an
/// insertion only rebuilds the intervals whose defining lines change.
class PiecewiseProposal {
 public:
  PiecewiseProposal() = default;

  double log_eval(double x) const;

  /// Draws x from pi_t / c_pi. Consumes one uniform to choose the piece, then
  /// one uniform within an ExpLinear or FlatLog piece, or three (u', v', w')
  /// within a LinearPdf piece.
  std::pair<double, double> sample(Rng& rng) const;

  double total_mass() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  std::span<const Piece> pieces() const { return pieces_; }
  std::span<const double> cumulative_areas() const { return cumulative_; }
  Procedure procedure() const { return procedure_; }
  long generation() const { return generation_; }
  void set_generation(long t) { generation_ = t; }
  const Domain& domain() const { return domain_; }

  /// Index of the piece whose interval holds x.
  std::size_t locate(double x) const;

  /// Piece ranges per support interval; empty for procedure T.
  std::span<const std::size_t> interval_offsets() const { return interval_offsets_; }

  /// Rebuilds the cumulative areas after pieces were replaced.
  void finalize();

 private:
  friend PiecewiseProposal build(const SupportSet&, Procedure, const TargetDensity&, const BuildOptions&);
  friend PiecewiseProposal insert(SupportSet&, const PiecewiseProposal&, double, const TargetDensity&,
                                  const BuildOptions&);
  friend PiecewiseProposal inflate_tails(const PiecewiseProposal&, double, double, long);

  std::vector<Piece> pieces_;
  std::vector<double> cumulative_;
  std::vector<std::size_t> interval_offsets_;
  Procedure procedure_ = Procedure::secant;
  long generation_ = 0;
  Domain domain_;
};

/// Builds the proposal for `proc` from the support set.
///
/// Throws InsufficientSupport, TailSlopeError when an unbounded tail would not
/// decay, and NonFiniteValue when a line passes through a zero-density point.
PiecewiseProposal build(const SupportSet& support, Procedure proc, const TargetDensity& target,
                        const BuildOptions& options = {});

/// Adds x_new to `support` and returns the refined proposal. Only the support
/// intervals within two of the insertion index are rebuilt (T rebuilds fully).
/// Throws DuplicatePoint without modifying the support.
PiecewiseProposal insert(SupportSet& support, const PiecewiseProposal& current, double x_new,
                         const TargetDensity& target, const BuildOptions& options = {});

/// Scales both tail slopes by (1 - beta * exp(-alpha_decay * t)), keeping the
/// tail value at its finite end. Throws TailSlopeError when the factor is 0.
PiecewiseProposal inflate_tails(const PiecewiseProposal& prop, double beta, double alpha_decay, long t);

inline double log_eval(const PiecewiseProposal& prop, double x) { return prop.log_eval(x); }
inline double total_mass(const PiecewiseProposal& prop) { return prop.total_mass(); }

/// CSV rows: piece_index,lo,hi,form,params,area.
void write_proposal_csv(const PiecewiseProposal& prop, std::ostream& out);

}  // namespace arms
