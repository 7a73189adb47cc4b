#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace arms {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lower, upper]; either end may be infinite.
struct Domain {
  double lower = -kInf;
  double upper = kInf;

  bool contains(double x) const { return x >= lower && x <= upper; }
  bool bounded_below() const { return lower > -kInf; }
  bool bounded_above() const { return upper < kInf; }
};

/// Unnormalized log-density V(x) = log p(x) on a single interval.
///
/// Immutable after construction and safe to share between chains.
class TargetDensity {
 public:
  using Fn = std::function<double(double)>;

  TargetDensity(Fn log_density, std::optional<Fn> derivative = std::nullopt, Domain domain = {},
                std::string name = "custom");

  /// V(x). Returns -inf where p(x) = 0; throws DomainError outside the domain.
  double log_density(double x) const;

  /// dV/dx; throws if the target was built without a derivative.
  double log_density_derivative(double x) const;
  bool has_derivative() const { return derivative_.has_value(); }

  const Domain& domain() const { return domain_; }
  const std::string& name() const { return name_; }

 private:
  Fn log_density_;
  std::optional<Fn> derivative_;
  Domain domain_;
  std::string name_;
};

struct GaussianMixtureSpec {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  /// Analytic mean of the normalized mixture.
  double mean() const;

  /// 0.3 N(-5,1) + 0.3 N(1,1) + 0.4 N(7,1).
  static GaussianMixtureSpec benchmark();
};

/// Normalized mixture density with a closed-form derivative.
/// Throws SpecError on mismatched lengths, nonpositive variances or weights
/// that do not sum to one.
TargetDensity gaussian_mixture(const GaussianMixtureSpec& spec);

/// p(x) = exp(-x^2/2), unnormalized.
TargetDensity standard_normal();

}  // namespace arms
