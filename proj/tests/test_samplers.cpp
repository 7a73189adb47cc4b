#include <doctest.h>

#include <cmath>
#include <exception>

#include "arms/errors.hpp"
#include "arms/samplers.hpp"
#include "support/oracles.hpp"

using namespace arms;

namespace {

// Flat target on [0, 1] whose endpoint values are `edge`, so the flat
// construction through {0, 1} sits at density `edge` while p = 1 inside.
TargetDensity raised_box(double edge) {
  return TargetDensity([edge](double x) { return x == 0.0 || x == 1.0 ? std::log(edge) : 0.0; }, std::nullopt,
                       Domain{0.0, 1.0}, "box");
}

SupportSet benchmark_s0(const TargetDensity& t) { return SupportSet({-10.0, -3.1, 4.2, 10.0}, t); }

bool nested_is_dominance(const SamplerError& e) {
  try {
    std::rethrow_if_nested(e);
  } catch (const DominanceViolation&) {
    return true;
  } catch (...) {
  }
  return false;
}

}  // namespace

TEST_CASE("metropolis acceptance probability") {
  const double l = std::log(1.0);
  CHECK(mh_alpha(std::log(1.0), std::log(2.0), std::log(0.8), std::log(3.0)) == 1.0);
  CHECK(mh_alpha(std::log(1.0), std::log(4.0), std::log(0.5), std::log(8.0)) == 1.0);
  CHECK(mh_alpha(std::log(0.5), std::log(1.0), std::log(1.0), std::log(0.25)) == doctest::Approx(0.25));
  // Proposal above the target at both points: always accept.
  CHECK(mh_alpha(std::log(0.1), std::log(3.0), std::log(0.2), std::log(5.0)) == 1.0);
  CHECK(mh_alpha(-kInf, l, 0.0, 0.0) == 0.0);
  CHECK(mh_alpha(-kInf, l, -kInf, 0.0) == 0.0);
  // Direct formula on a few mixed cases.
  for (auto [pn, pc, qn, qc] : {std::array<double, 4>{0.3, 0.9, 0.1, 2.0}, {2.0, 0.5, 0.7, 0.2},
                                 std::array<double, 4>{0.05, 0.6, 0.02, 0.4}}) {
    const double ref = std::min(1.0, pn * std::min(pc, qc) / (pc * std::min(pn, qn)));
    CHECK(mh_alpha(std::log(pn), std::log(pc), std::log(qn), std::log(qc)) == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("sampler names") {
  for (SamplerKind k : {SamplerKind::ars, SamplerKind::arms, SamplerKind::a2rms, SamplerKind::ia2rms}) {
    CHECK(parse_sampler(to_string(k)) == k);
  }
  CHECK(parse_sampler("IA2rms") == SamplerKind::ia2rms);
  CHECK_FALSE(parse_sampler("gibbs").has_value());
}

TEST_CASE("adaptive rejection sampling is exact on a normal target") {
  const TargetDensity t = standard_normal();
  for (Procedure proc : {Procedure::secant, Procedure::tangent}) {
    Rng rng(2024);
    const SupportSet s0({-2.0, -1.0, 1.0, 2.0}, t);
    const ChainResult r = run_chain(SamplerKind::ars, t, proc, s0, 10000, -1, rng);
    CHECK(oracle::ks_test(r.chain, oracle::normal_cdf) > 0.01);
    CHECK(r.state.support.size() == s0.size() + static_cast<std::size_t>(r.state.counters.rs_rejections));
    CHECK(r.state.counters.mh_rejections == 0);
    CHECK(r.state.k == 10000);
    CHECK(r.state.proposal.generation() == r.state.t);
  }
}

TEST_CASE("adaptive rejection sampling detects a non-envelope") {
  const TargetDensity t = standard_normal();
  Rng rng(1);
  const SupportSet s0({-2.0, -1.0, 1.0, 2.0}, t);
  try {
    run_chain(SamplerKind::ars, t, Procedure::plain_secant, s0, 2000, -1, rng);
    FAIL("expected a dominance violation");
  } catch (const SamplerError& e) {
    CHECK(nested_is_dominance(e));
    CHECK(std::string(e.what()).find("k = ") != std::string::npos);
  }
}

TEST_CASE("samplers reduce to rejection sampling under a dominating envelope") {
  const TargetDensity normal = standard_normal();
  const TargetDensity skewed([](double x) { return x - std::exp(x); }, [](double x) { return 1.0 - std::exp(x); });
  for (const auto* t : {&normal, &skewed}) {
    for (Procedure proc : {Procedure::secant, Procedure::tangent}) {
      const SupportSet s0({-2.0, -1.0, 0.5, 1.5}, *t);
      Rng base(77);
      const ChainResult ars = run_chain(SamplerKind::ars, *t, proc, s0, 3000, -1, base);
      for (SamplerKind kind : {SamplerKind::arms, SamplerKind::a2rms, SamplerKind::ia2rms}) {
        CAPTURE(to_string(kind));
        Rng rng(77);
        const ChainResult r = run_chain(kind, *t, proc, s0, 3000, -1, rng);
        CHECK(r.chain == ars.chain);
        CHECK(r.state.counters.mh_rejections == 0);
        CHECK(r.state.counters.second_control_additions == 0);
        CHECK(r.state.support.size() == ars.state.support.size());
        CHECK(rng.uniform() == Rng(base).uniform());
      }
    }
  }
}

TEST_CASE("adaptation stop at zero turns the second control off") {
  const TargetDensity t = gaussian_mixture(GaussianMixtureSpec::benchmark());
  const SupportSet s0 = benchmark_s0(t);
  Rng a(9);
  Rng b(9);
  const ChainResult arms_run = run_chain(SamplerKind::arms, t, Procedure::arms_max_min, s0, 2000, -1, a);
  const ChainResult stopped = run_chain(SamplerKind::a2rms, t, Procedure::arms_max_min, s0, 2000, 0, b);
  CHECK(stopped.chain == arms_run.chain);
  CHECK(stopped.state.counters.second_control_additions == 0);
}

TEST_CASE("adaptation stop bounds the second control") {
  const TargetDensity t = gaussian_mixture(GaussianMixtureSpec::benchmark());
  Rng rng(4);
  const ChainResult r = run_chain(SamplerKind::a2rms, t, Procedure::plain_secant, benchmark_s0(t), 3000, 25, rng);
  CHECK(r.state.counters.second_control_additions <= 25);
  CHECK(r.state.counters.second_control_additions > 0);
}

TEST_CASE("second control inserts with probability one minus the ratio") {
  const TargetDensity t = raised_box(0.25);
  Rng rng(31);
  int inserted = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    SamplerState s = make_state(t, Procedure::piecewise_flat, SupportSet({0.0, 1.0}, t));
    a2rms_next(s, t, rng);
    CHECK(s.counters.rs_rejections == 0);
    inserted += static_cast<int>(s.counters.second_control_additions);
  }
  CHECK(static_cast<double>(inserted) / trials == doctest::Approx(0.75).epsilon(0.02 / 0.75));
}

TEST_CASE("second control never inserts where the proposal is above the target") {
  // Endpoint density 4 against p = 1 inside.
  const TargetDensity t = raised_box(4.0);
  Rng rng(8);
  SamplerState s = make_state(t, Procedure::piecewise_flat, SupportSet({0.0, 1.0}, t));
  for (int i = 0; i < 5000; ++i) a2rms_next(s, t, rng);
  CHECK(s.counters.second_control_additions == 0);
  CHECK(s.support.size() == 2 + static_cast<std::size_t>(s.counters.rs_rejections));
}

TEST_CASE("independent variant only inserts the point left behind") {
  const TargetDensity t = raised_box(0.25);
  Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    SamplerState s = make_state(t, Procedure::piecewise_flat, SupportSet({0.0, 1.0}, t));
    const double before = s.x_current;
    const double after = ia2rms_next(s, t, rng);
    CHECK(after != before);  // alpha is one here, so the move is taken
    CHECK_FALSE(s.support.contains(after));
    if (s.support.size() == 3) CHECK(s.support.point(1) == before);
  }
}

TEST_CASE("independent variant never holds the current state in its support") {
  const TargetDensity t = gaussian_mixture(GaussianMixtureSpec::benchmark());
  for (Procedure proc : {Procedure::arms_max_min, Procedure::piecewise_flat, Procedure::trapezoid}) {
    Rng rng(55);
    SamplerState s = make_state(t, proc, benchmark_s0(t));
    s.k_stop = 5000;
    for (int k = 0; k < 5000; ++k) {
      ia2rms_next(s, t, rng);
      REQUIRE_FALSE(s.support.contains(s.x_current));
    }
  }
}

TEST_CASE("zero-density candidates are never accepted") {
  // p vanishes on (1, 2] but the flat construction covers it.
  const TargetDensity t([](double x) { return x > 1.0 ? -kInf : -0.5 * x; }, std::nullopt, Domain{0.0, 2.0});
  for (SamplerKind kind : {SamplerKind::arms, SamplerKind::a2rms, SamplerKind::ia2rms}) {
    Rng rng(3);
    const ChainResult r = run_chain(kind, t, Procedure::piecewise_flat, SupportSet({0.0, 0.5, 2.0}, t), 3000, -1, rng);
    for (double x : r.chain) REQUIRE(x <= 1.0);
    CHECK(r.state.counters.skipped_insertions > 0);
    CHECK(r.state.support.size() == 3 + static_cast<std::size_t>(r.state.counters.rs_rejections +
                                                                 r.state.counters.second_control_additions));
  }
}

TEST_CASE("chains are reproducible from the seed") {
  const TargetDensity t = gaussian_mixture(GaussianMixtureSpec::benchmark());
  for (SamplerKind kind : {SamplerKind::arms, SamplerKind::a2rms, SamplerKind::ia2rms}) {
    Rng a(123);
    Rng b(123);
    const auto r1 = run_chain(kind, t, Procedure::trapezoid, benchmark_s0(t), 1500, -1, a);
    const auto r2 = run_chain(kind, t, Procedure::trapezoid, benchmark_s0(t), 1500, -1, b);
    CHECK(r1.chain == r2.chain);
    CHECK(r1.state.support.size() == r2.state.support.size());
  }
}

TEST_CASE("single-step chain") {
  const TargetDensity t = gaussian_mixture(GaussianMixtureSpec::benchmark());
  Rng rng(1);
  const ChainResult r = run_chain(SamplerKind::ia2rms, t, Procedure::arms_max_min, benchmark_s0(t), 1, -1, rng);
  CHECK(r.chain.size() == 1);
  CHECK(r.state.k == 1);
  CHECK(r.state.t >= 1);
  Rng other(1);
  CHECK_THROWS_AS(run_chain(SamplerKind::arms, t, Procedure::arms_max_min, benchmark_s0(t), 0, -1, other),
                  SamplerError);
}

TEST_CASE("support bookkeeping on the benchmark") {
  const TargetDensity t = gaussian_mixture(GaussianMixtureSpec::benchmark());
  for (SamplerKind kind : {SamplerKind::arms, SamplerKind::a2rms, SamplerKind::ia2rms}) {
    for (Procedure proc : {Procedure::arms_max_min, Procedure::plain_secant, Procedure::piecewise_flat,
                           Procedure::trapezoid}) {
      CAPTURE(to_string(kind));
      CAPTURE(to_string(proc));
      Rng rng(2);
      const ChainResult r = run_chain(kind, t, proc, benchmark_s0(t), 5000, -1, rng);
      const auto& c = r.state.counters;
      CHECK(r.state.support.size() == 4 + static_cast<std::size_t>(c.rs_rejections + c.second_control_additions));
      CHECK(r.state.insertion_iterations.size() == r.state.support.size() - 4);
      CHECK(std::is_sorted(r.state.insertion_iterations.begin(), r.state.insertion_iterations.end()));
      CHECK(r.state.proposal.generation() == r.state.t);
      CHECK(r.state.t >= r.state.k);
      if (kind == SamplerKind::arms) CHECK(c.second_control_additions == 0);
    }
  }
}

TEST_CASE("counters never decrease") {
  const TargetDensity t = gaussian_mixture(GaussianMixtureSpec::benchmark());
  Rng rng(6);
  SamplerState s = make_state(t, Procedure::plain_secant, benchmark_s0(t));
  SamplerCounters prev = s.counters;
  long t_prev = s.t;
  for (int k = 0; k < 2000; ++k) {
    a2rms_next(s, t, rng);
    CHECK(s.counters.rs_rejections >= prev.rs_rejections);
    CHECK(s.counters.second_control_additions >= prev.second_control_additions);
    CHECK(s.counters.mh_rejections >= prev.mh_rejections);
    CHECK(s.t > t_prev);
    prev = s.counters;
    t_prev = s.t;
  }
}

TEST_CASE("tail inflation inside a chain") {
  const TargetDensity t = gaussian_mixture(GaussianMixtureSpec::benchmark());
  SamplerOptions opt;
  opt.tail_beta = 0.5;
  opt.tail_alpha_decay = 0.01;
  Rng rng(10);
  SamplerState s = make_state(t, Procedure::arms_max_min, benchmark_s0(t), opt);
  CHECK(s.proposal.total_mass() > s.base_proposal.total_mass());
  for (int k = 0; k < 200; ++k) ia2rms_next(s, t, rng);
  CHECK(s.proposal.generation() == s.t);
  const double factor = 1.0 - 0.5 * std::exp(-0.01 * static_cast<double>(s.t));
  const auto& base_tail = std::get<ExpLinear>(s.base_proposal.pieces().back().form);
  const auto& tail = std::get<ExpLinear>(s.proposal.pieces().back().form);
  CHECK(tail.slope == doctest::Approx(base_tail.slope * factor).epsilon(1e-14));
}

TEST_CASE("initial state must have positive density") {
  const TargetDensity t([](double x) { return x > 1.0 ? -kInf : 0.0; }, std::nullopt, Domain{0.0, 2.0});
  SamplerOptions opt;
  opt.initial_state = 1.5;
  CHECK_THROWS_AS(make_state(t, Procedure::piecewise_flat, SupportSet({0.0, 0.5, 2.0}, t), opt), SamplerError);
}
