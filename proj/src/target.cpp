#include "arms/target.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <utility>

#include "arms/errors.hpp"

namespace arms {

TargetDensity::TargetDensity(Fn log_density, std::optional<Fn> derivative, Domain domain, std::string name)
    : log_density_(std::move(log_density)),
      derivative_(std::move(derivative)),
      domain_(domain),
      name_(std::move(name)) {
  if (!log_density_) throw SpecError("target log-density function is empty");
  if (!(domain_.lower < domain_.upper)) throw SpecError("target domain must satisfy lower < upper");
}

double TargetDensity::log_density(double x) const {
  if (std::isnan(x) || !domain_.contains(x)) {
    throw DomainError("x = " + std::to_string(x) + " lies outside the target domain");
  }
  return log_density_(x);
}

double TargetDensity::log_density_derivative(double x) const {
  if (!derivative_) throw SpecError("target '" + name_ + "' has no derivative");
  if (std::isnan(x) || !domain_.contains(x)) {
    throw DomainError("x = " + std::to_string(x) + " lies outside the target domain");
  }
  return (*derivative_)(x);
}

double GaussianMixtureSpec::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * means[i];
  return m;
}

GaussianMixtureSpec GaussianMixtureSpec::benchmark() {
  return {{0.3, 0.3, 0.4}, {-5.0, 1.0, 7.0}, {1.0, 1.0, 1.0}};
}

namespace {

struct MixtureTerms {
  std::vector<double> log_coef;  // log w_i - log(2 pi var_i) / 2
  std::vector<double> means;
  std::vector<double> inv_var;
};

}  // namespace

TargetDensity gaussian_mixture(const GaussianMixtureSpec& spec) {
  const std::size_t n = spec.weights.size();
  if (n == 0) throw SpecError("mixture needs at least one component");
  if (spec.means.size() != n || spec.variances.size() != n) {
    throw SpecError("mixture weights, means and variances must have equal length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(spec.weights[i] > 0.0) || !std::isfinite(spec.weights[i])) {
      throw SpecError("mixture weight " + std::to_string(i) + " must be positive");
    }
    if (!(spec.variances[i] > 0.0) || !std::isfinite(spec.variances[i])) {
      throw SpecError("mixture variance " + std::to_string(i) + " must be positive");
    }
    if (!std::isfinite(spec.means[i])) throw SpecError("mixture mean " + std::to_string(i) + " must be finite");
  }
  const double total = std::accumulate(spec.weights.begin(), spec.weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw SpecError("mixture weights must sum to 1");

  auto terms = std::make_shared<MixtureTerms>();
  for (std::size_t i = 0; i < n; ++i) {
    terms->log_coef.push_back(std::log(spec.weights[i]) - 0.5 * std::log(2.0 * M_PI * spec.variances[i]));
    terms->means.push_back(spec.means[i]);
    terms->inv_var.push_back(1.0 / spec.variances[i]);
  }

  // Component log-terms are combined with log-sum-exp; widely separated
  // components underflow a direct sum of densities.
  auto log_terms = [terms](double x, std::vector<double>& out) {
    out.resize(terms->means.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = x - terms->means[i];
      out[i] = terms->log_coef[i] - 0.5 * d * d * terms->inv_var[i];
    }
    return *std::max_element(out.begin(), out.end());
  };

  auto log_density = [terms, log_terms](double x) {
    if (std::isinf(x)) return -kInf;
    thread_local std::vector<double> buf;
    const double top = log_terms(x, buf);
    if (top == -kInf) return -kInf;
    double s = 0.0;
    for (double v : buf) s += std::exp(v - top);
    return top + std::log(s);
  };

  auto derivative = [terms, log_terms](double x) {
    if (std::isinf(x)) return 0.0;
    thread_local std::vector<double> buf;
    const double top = log_terms(x, buf);
    double s = 0.0;
    double ds = 0.0;
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double r = std::exp(buf[i] - top);
      s += r;
      ds -= r * (x - terms->means[i]) * terms->inv_var[i];
    }
    return ds / s;
  };

  return TargetDensity(log_density, TargetDensity::Fn(derivative), Domain{}, "gaussian_mixture");
}

TargetDensity standard_normal() {
  return TargetDensity([](double x) { return -0.5 * x * x; }, TargetDensity::Fn([](double x) { return -x; }),
                       Domain{}, "standard_normal");
}

}  // namespace arms
