#include "arms/envelope.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "arms/errors.hpp"

namespace arms {

namespace {

// Below this |slope * width| an ExpLinear piece is integrated and sampled as
// (nearly) flat.
constexpr double kSmallExponent = 1e-8;
// Two lines whose slopes differ by less than this never intersect.
constexpr double kCollinear = 1e-12;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Line {
  double x0 = 0.0;
  double y0 = 0.0;
  double slope = 0.0;

  double at(double x) const { return y0 + slope * (x - x0); }
};

// Abscissa where a and b cross, or nullopt for (nearly) parallel lines.
std::optional<double> intersection(const Line& a, const Line& b) {
  const double ds = a.slope - b.slope;
  if (std::abs(ds) < kCollinear) return std::nullopt;
  return (b.y0 - a.y0 + a.slope * a.x0 - b.slope * b.x0) / ds;
}

ExpLinear as_form(const Line& l) { return {l.x0, l.y0, l.slope}; }

class Builder {
 public:
  Builder(const SupportSet& support, Procedure proc, const TargetDensity& target, const BuildOptions& options)
      : s_(support), proc_(proc), target_(target), options_(options), m_(support.size()) {}

  std::size_t intervals() const { return m_ + 1; }

  // Appends the pieces of support interval j (0 <= j <= m) to out.
  void interval(std::size_t j, std::vector<Piece>& out) const {
    const double lo = j == 0 ? target_.domain().lower : s_.point(j - 1);
    const double hi = j == m_ ? target_.domain().upper : s_.point(j);
    if (!(lo < hi)) return;

    if (j == 0) {
      tail(lo, hi, line(1), out);
      return;
    }
    if (j == m_) {
      tail(lo, hi, line(m_ - 1), out);
      return;
    }

    switch (proc_) {
      case Procedure::secant: {
        if (j == 1) {
          emit_line(lo, hi, line(2), out);
        } else if (j == m_ - 1) {
          emit_line(lo, hi, line(m_ - 2), out);
        } else {
          const std::array<Line, 2> ls{line(j - 1), line(j + 1)};
          resolve(lo, hi, ls, [](std::span<const double> v) { return std::min(v[0], v[1]); }, out);
        }
        break;
      }
      case Procedure::arms_max_min: {
        if (j == 1 || j == m_ - 1) {
          const std::array<Line, 2> ls{line(j == 1 ? 1 : m_ - 1), line(j == 1 ? 2 : m_ - 2)};
          resolve(lo, hi, ls, [](std::span<const double> v) { return std::max(v[0], v[1]); }, out);
        } else {
          const std::array<Line, 3> ls{line(j), line(j - 1), line(j + 1)};
          resolve(lo, hi, ls, [](std::span<const double> v) { return std::max(v[0], std::min(v[1], v[2])); },
                  out);
        }
        break;
      }
      case Procedure::plain_secant:
        emit_line(lo, hi, line(j), out);
        break;
      case Procedure::piecewise_flat: {
        double level = std::max(s_.value(j - 1), s_.value(j));
        if (options_.bounded_flat && options_.bounded_flat->mode > lo && options_.bounded_flat->mode <= hi) {
          level = options_.bounded_flat->bound;
        }
        out.push_back(make_piece(lo, hi, FlatLog{level}));
        break;
      }
      case Procedure::trapezoid:
        out.push_back(make_piece(lo, hi, LinearPdf{std::exp(s_.value(j - 1)), std::exp(s_.value(j))}));
        break;
      case Procedure::tangent:
        throw Error("tangent envelope is not built per support interval");
    }
  }

  // Minimum of all tangent lines, for concave V: tangent k is active between
  // its crossings with tangents k-1 and k+1.
  void tangent_hull(std::vector<Piece>& out) const {
    std::vector<Line> tangents;
    tangents.reserve(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      const double v = s_.value(k);
      if (!std::isfinite(v)) {
        throw NonFiniteValue("tangent through zero-density support point " + num(s_.point(k)));
      }
      const double d = target_.log_density_derivative(s_.point(k));
      if (!std::isfinite(d)) throw NonFiniteValue("non-finite derivative at " + num(s_.point(k)));
      tangents.push_back({s_.point(k), v, d});
    }
    double lo = target_.domain().lower;
    for (std::size_t k = 0; k < m_; ++k) {
      double hi = target_.domain().upper;
      if (k + 1 < m_) {
        const double a = s_.point(k);
        const double b = s_.point(k + 1);
        hi = intersection(tangents[k], tangents[k + 1]).value_or(0.5 * (a + b));
        hi = std::clamp(hi, a, b);
      }
      hi = std::max(hi, lo);
      if (k == 0 || k + 1 == m_) {
        if (lo < hi) tail(lo, hi, tangents[k], out);
      } else if (lo < hi) {
        out.push_back(make_piece(lo, hi, as_form(tangents[k])));
      }
      lo = hi;
    }
  }

 private:
  // L(i) passes through support points i and i+1 (1-based).
  Line line(std::size_t i) const {
    const double xa = s_.point(i - 1);
    const double xb = s_.point(i);
    const double va = s_.value(i - 1);
    const double vb = s_.value(i);
    if (!std::isfinite(va) || !std::isfinite(vb)) {
      throw NonFiniteValue("secant through zero-density support point in [" + num(xa) + ", " + num(xb) + "]");
    }
    return {xa, va, (vb - va) / (xb - xa)};
  }

  void tail(double lo, double hi, const Line& l, std::vector<Piece>& out) const {
    if (lo == -kInf && !(l.slope > 0.0)) {
      throw TailSlopeError("left tail slope " + num(l.slope) + " must be positive");
    }
    if (hi == kInf && !(l.slope < 0.0)) {
      throw TailSlopeError("right tail slope " + num(l.slope) + " must be negative");
    }
    out.push_back(make_piece(lo, hi, as_form(l)));
  }

  static void emit_line(double lo, double hi, const Line& l, std::vector<Piece>& out) {
    out.push_back(make_piece(lo, hi, as_form(l)));
  }

  // Splits (lo, hi] at every pairwise crossing of `lines`; on each part the
  // expression selects a single line.
  template <std::size_t N, class Expr>
  static void resolve(double lo, double hi, const std::array<Line, N>& lines, Expr expr, std::vector<Piece>& out) {
    std::vector<double> cuts{lo};
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = a + 1; b < N; ++b) {
        if (auto x = intersection(lines[a], lines[b]); x && *x > lo && *x < hi) cuts.push_back(*x);
      }
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::size_t prev = N;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c];
      const double b = cuts[c + 1];
      const double probe = a == -kInf ? b - 1.0 : (b == kInf ? a + 1.0 : 0.5 * (a + b));
      std::array<double, N> vals{};
      for (std::size_t i = 0; i < N; ++i) vals[i] = lines[i].at(probe);
      const double want = expr(std::span<const double>(vals));
      std::size_t pick = 0;
      for (std::size_t i = 1; i < N; ++i) {
        if (std::abs(vals[i] - want) < std::abs(vals[pick] - want)) pick = i;
      }
      if (pick == prev) {
        out.back().hi = b;
        out.back().area = piece_area(out.back());
      } else {
        out.push_back(make_piece(a, b, as_form(lines[pick])));
      }
      prev = pick;
    }
  }

  const SupportSet& s_;
  Procedure proc_;
  const TargetDensity& target_;
  const BuildOptions& options_;
  std::size_t m_;
};

void check_buildable(const SupportSet& support, Procedure proc, const TargetDensity& target) {
  if (support.size() < minimum_support(proc)) {
    throw InsufficientSupport("procedure " + std::string(to_string(proc)) + " needs at least " +
                              std::to_string(minimum_support(proc)) + " support points, got " +
                              std::to_string(support.size()));
  }
  if (proc == Procedure::tangent && !target.has_derivative()) {
    throw SpecError("procedure T requires the target derivative");
  }
}

}  // namespace

double duplicate_tolerance(double s) { return 1e-9 * std::max(1.0, std::abs(s)); }

SupportSet::SupportSet(std::vector<double> points, const TargetDensity& target) : points_(std::move(points)) {
  std::sort(points_.begin(), points_.end());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw NonFiniteValue("support points must be finite");
    if (i > 0 && points_[i] - points_[i - 1] < duplicate_tolerance(points_[i])) {
      throw DuplicatePoint("duplicate support point " + num(points_[i]));
    }
  }
  values_.reserve(points_.size());
  bool any_positive = false;
  for (double x : points_) {
    const double v = target.log_density(x);
    if (std::isnan(v)) throw NonFiniteValue("V(" + num(x) + ") is NaN");
    any_positive = any_positive || v > -kInf;
    values_.push_back(v);
  }
  if (!points_.empty() && !any_positive) {
    throw NonFiniteValue("target density is zero at every initial support point");
  }
}

std::size_t SupportSet::lower_index(double x) const {
  return static_cast<std::size_t>(std::lower_bound(points_.begin(), points_.end(), x) - points_.begin());
}

bool SupportSet::contains(double x) const {
  const std::size_t i = lower_index(x);
  const double tol = duplicate_tolerance(x);
  if (i < points_.size() && points_[i] - x < tol) return true;
  return i > 0 && x - points_[i - 1] < tol;
}

std::size_t SupportSet::insert(double x, const TargetDensity& target) {
  if (!std::isfinite(x)) throw NonFiniteValue("support point must be finite");
  if (contains(x)) throw DuplicatePoint("support point " + num(x) + " already present");
  const double v = target.log_density(x);
  if (std::isnan(v)) throw NonFiniteValue("V(" + num(x) + ") is NaN");
  const std::size_t i = lower_index(x);
  points_.insert(points_.begin() + static_cast<std::ptrdiff_t>(i), x);
  values_.insert(values_.begin() + static_cast<std::ptrdiff_t>(i), v);
  return i;
}

std::string_view to_string(Procedure p) {
  switch (p) {
    case Procedure::tangent: return "T";
    case Procedure::secant: return "S";
    case Procedure::arms_max_min: return "P1";
    case Procedure::plain_secant: return "P2";
    case Procedure::piecewise_flat: return "P3";
    case Procedure::trapezoid: return "P4";
  }
  return "?";
}

std::optional<Procedure> parse_procedure(std::string_view s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "T" || u == "TANGENT") return Procedure::tangent;
  if (u == "S" || u == "SECANT") return Procedure::secant;
  if (u == "P1" || u == "ARMS_MAX_MIN") return Procedure::arms_max_min;
  if (u == "P2" || u == "PLAIN_SECANT") return Procedure::plain_secant;
  if (u == "P3" || u == "PIECEWISE_FLAT") return Procedure::piecewise_flat;
  if (u == "P4" || u == "TRAPEZOID") return Procedure::trapezoid;
  return std::nullopt;
}

std::size_t minimum_support(Procedure p) {
  switch (p) {
    case Procedure::secant: return 4;
    case Procedure::arms_max_min: return 3;
    default: return 2;
  }
}

double Piece::log_eval(double x) const {
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ExpLinear>) {
          return f.at(x);
        } else if constexpr (std::is_same_v<F, FlatLog>) {
          return f.level;
        } else {
          const double frac = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
          return std::log((1.0 - frac) * f.p_lo + frac * f.p_hi);
        }
      },
      form);
}

double piece_area(const Piece& piece) {
  const double lo = piece.lo;
  const double hi = piece.hi;
  const double width = hi - lo;
  const bool unbounded = std::isinf(lo) || std::isinf(hi);
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ExpLinear>) {
          const double b = f.slope;
          if (unbounded) {
            if (std::isinf(lo) && std::isinf(hi)) throw DivergentArea("exponential piece over the whole line");
            if (std::isinf(lo)) {
              if (!(b > 0.0)) throw DivergentArea("left-unbounded piece needs a positive slope");
              return std::exp(f.at(hi)) / b;
            }
            if (!(b < 0.0)) throw DivergentArea("right-unbounded piece needs a negative slope");
            return std::exp(f.at(lo)) / -b;
          }
          const double z = b * width;
          if (std::abs(z) < kSmallExponent) return std::exp(f.at(lo)) * width * (1.0 + 0.5 * z);
          if (b > 0.0) return std::exp(f.at(hi)) * -std::expm1(-z) / b;
          return std::exp(f.at(lo)) * -std::expm1(z) / -b;
        } else if constexpr (std::is_same_v<F, FlatLog>) {
          if (unbounded) throw DivergentArea("flat piece over an unbounded interval");
          return std::exp(f.level) * width;
        } else {
          if (unbounded) throw DivergentArea("linear pdf piece over an unbounded interval");
          if (f.p_lo < 0.0 || f.p_hi < 0.0) throw Error("linear pdf piece with negative endpoint");
          return 0.5 * (f.p_lo + f.p_hi) * width;
        }
      },
      piece.form);
}

Piece make_piece(double lo, double hi, PieceForm form) {
  Piece p{lo, hi, form, 0.0};
  p.area = piece_area(p);
  return p;
}

std::size_t PiecewiseProposal::locate(double x) const {
  if (pieces_.empty() || std::isnan(x) || x < pieces_.front().lo || x > pieces_.back().hi) {
    throw DomainError("x = " + num(x) + " lies outside the proposal domain");
  }
  auto it = std::lower_bound(pieces_.begin(), pieces_.end(), x, [](const Piece& p, double v) { return p.hi < v; });
  if (it == pieces_.end()) --it;
  return static_cast<std::size_t>(it - pieces_.begin());
}

double PiecewiseProposal::log_eval(double x) const { return pieces_[locate(x)].log_eval(x); }

std::pair<double, double> PiecewiseProposal::sample(Rng& rng) const {
  const double pick = rng.uniform() * total_mass();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), pick);
  if (it == cumulative_.end()) --it;
  const Piece& p = pieces_[static_cast<std::size_t>(it - cumulative_.begin())];
  const double lo = p.lo;
  const double hi = p.hi;

  double x = std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ExpLinear>) {
          const double v = rng.uniform();
          const double b = f.slope;
          const double width = hi - lo;
          if (std::isfinite(width) && std::abs(b * width) < kSmallExponent) return lo + v * width;
          // Inverse CDF measured from the end where the density is largest.
          if (b > 0.0) return hi + std::log1p((1.0 - v) * std::expm1(-b * width)) / b;
          return lo + std::log1p(v * std::expm1(b * width)) / b;
        } else if constexpr (std::is_same_v<F, FlatLog>) {
          return lo + rng.uniform() * (hi - lo);
        } else {
          const double u1 = rng.uniform(lo, hi);
          const double u2 = rng.uniform(lo, hi);
          const double w = rng.uniform();
          return w < f.p_lo / (f.p_lo + f.p_hi) ? std::min(u1, u2) : std::max(u1, u2);
        }
      },
      p.form);
  x = std::clamp(x, lo, hi);
  return {x, log_eval(x)};
}

void PiecewiseProposal::finalize() {
  cumulative_.resize(pieces_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    acc += pieces_[i].area;
    cumulative_[i] = acc;
  }
  if (!std::isfinite(acc) || !(acc > 0.0)) {
    throw NonFiniteValue("proposal total mass " + num(acc) + " is not finite and positive");
  }
}

PiecewiseProposal build(const SupportSet& support, Procedure proc, const TargetDensity& target,
                        const BuildOptions& options) {
  check_buildable(support, proc, target);
  PiecewiseProposal prop;
  prop.procedure_ = proc;
  prop.domain_ = target.domain();
  Builder builder(support, proc, target, options);
  if (proc == Procedure::tangent) {
    builder.tangent_hull(prop.pieces_);
  } else {
    prop.interval_offsets_.reserve(builder.intervals() + 1);
    for (std::size_t j = 0; j < builder.intervals(); ++j) {
      prop.interval_offsets_.push_back(prop.pieces_.size());
      builder.interval(j, prop.pieces_);
    }
    prop.interval_offsets_.push_back(prop.pieces_.size());
  }
  prop.finalize();
  return prop;
}

PiecewiseProposal insert(SupportSet& support, const PiecewiseProposal& current, double x_new,
                         const TargetDensity& target, const BuildOptions& options) {
  const Procedure proc = current.procedure();
  const std::size_t old_intervals = current.interval_offsets_.empty() ? 0 : current.interval_offsets_.size() - 1;
  const bool local = proc != Procedure::tangent && old_intervals == support.size() + 1;

  SupportSet candidate = support;
  const std::size_t q = candidate.insert(x_new, target);
  if (!local) {
    PiecewiseProposal full = build(candidate, proc, target, options);
    full.generation_ = current.generation_;
    support = std::move(candidate);
    return full;
  }

  // The new point splits old interval q into new intervals q and q+1. New
  // intervals [q-1, q+2] may change; the rest are copied (shifted by one
  // index after the insertion).
  const std::size_t m = candidate.size();
  const std::size_t first = q == 0 ? 0 : q - 1;
  const std::size_t last = std::min(q + 2, m);

  PiecewiseProposal prop;
  prop.procedure_ = proc;
  prop.domain_ = current.domain_;
  prop.generation_ = current.generation_;
  prop.pieces_.reserve(current.pieces_.size() + 4);
  prop.interval_offsets_.reserve(m + 2);

  const auto& old_off = current.interval_offsets_;
  auto copy_old = [&](std::size_t j_old) {
    prop.interval_offsets_.push_back(prop.pieces_.size());
    prop.pieces_.insert(prop.pieces_.end(), current.pieces_.begin() + static_cast<std::ptrdiff_t>(old_off[j_old]),
                        current.pieces_.begin() + static_cast<std::ptrdiff_t>(old_off[j_old + 1]));
  };

  Builder builder(candidate, proc, target, options);
  for (std::size_t j = 0; j < first; ++j) copy_old(j);
  for (std::size_t j = first; j <= last; ++j) {
    prop.interval_offsets_.push_back(prop.pieces_.size());
    builder.interval(j, prop.pieces_);
  }
  for (std::size_t j_old = last; j_old < old_intervals; ++j_old) copy_old(j_old);
  prop.interval_offsets_.push_back(prop.pieces_.size());
  prop.finalize();
  support = std::move(candidate);
  return prop;
}

PiecewiseProposal inflate_tails(const PiecewiseProposal& prop, double beta, double alpha_decay, long t) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error("tail inflation beta must lie in [0, 1]");
  if (!(alpha_decay > 0.0)) throw Error("tail inflation decay rate must be positive");
  const double factor = 1.0 - beta * std::exp(-alpha_decay * static_cast<double>(t));
  if (!(factor > 0.0)) throw TailSlopeError("tail inflation factor is zero; tails would be improper");

  PiecewiseProposal out = prop;
  if (factor == 1.0 || out.pieces_.empty()) return out;

  auto scale = [factor](Piece& p, double keep_at) {
    auto* f = std::get_if<ExpLinear>(&p.form);
    if (!f) throw Error("tail inflation requires exponential tail pieces");
    *f = ExpLinear{keep_at, f->at(keep_at), f->slope * factor};
    p.area = piece_area(p);
  };
  if (std::isinf(out.pieces_.front().lo)) scale(out.pieces_.front(), out.pieces_.front().hi);
  if (std::isinf(out.pieces_.back().hi)) scale(out.pieces_.back(), out.pieces_.back().lo);
  out.finalize();
  return out;
}

void write_proposal_csv(const PiecewiseProposal& prop, std::ostream& out) {
  out << "piece_index,lo,hi,form,params,area\n";
  const auto pieces = prop.pieces();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    std::string form;
    std::string params;
    if (const auto* e = std::get_if<ExpLinear>(&p.form)) {
      form = "ExpLinear";
      params = num(e->intercept()) + ";" + num(e->slope);
    } else if (const auto* c = std::get_if<FlatLog>(&p.form)) {
      form = "FlatLog";
      params = num(c->level);
    } else {
      const auto& l = std::get<LinearPdf>(p.form);
      form = "LinearPdf";
      params = num(l.p_lo) + ";" + num(l.p_hi);
    }
    out << i << ',' << num(p.lo) << ',' << num(p.hi) << ',' << form << ',' << params << ',' << num(p.area) << '\n';
  }
}

}  // namespace arms
