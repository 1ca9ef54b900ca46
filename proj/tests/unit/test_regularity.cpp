#include <doctest.h>

#include <cmath>

#include "json.hpp"
#include "spdelab/error.hpp"
#include "spdelab/regularity.hpp"

using namespace spdelab;

namespace {

BasisPtr basis1d(int k = 8, double gamma = 0.0) {
  return SpectralBasis::create({1, Boundary::Dirichlet, gamma, k, 4 * k});
}

std::vector<ProbePair> single_probe(const BasisPtr& b) {
  return {{SpectralField(b), unit_mode(b, 0)}};
}

ProfileOptions opts(double predicted) {
  ProfileOptions o;
  o.predicted = predicted;
  return o;
}

}  // namespace

TEST_CASE("linear target has Hoelder exponent 1") {
  auto b = basis1d();
  const auto scales = dyadic_scales();
  auto probes = single_probe(b);
  auto rep = holder_profile(deterministic_target([](const SpectralField& x) { return x[0]; }),
                            scales, probes, opts(1.0));
  CHECK(rep.verdict == Verdict::Pass);
  CHECK(rep.exponent == doctest::Approx(1.0).epsilon(0.01));
  CHECK(rep.r2 == doctest::Approx(1.0));
  for (const auto& row : rep.scales) CHECK_FALSE(row.masked);
}

TEST_CASE("calibration on power profiles") {
  auto b = basis1d();
  auto probes = single_probe(b);
  const auto scales = dyadic_scales();
  for (double beta : {0.25, 0.5, 0.75, 1.0}) {
    auto target = [beta](const SpectralField& x) {
      return std::min(1.0, std::pow(std::abs(x[0]), beta));
    };
    auto rep = holder_profile(deterministic_target(target), scales, probes, opts(beta));
    CHECK(std::abs(rep.exponent - beta) <= 0.05);
    CHECK(rep.verdict == Verdict::Pass);
  }
}

TEST_CASE("square-root profile over several base points") {
  auto b = basis1d();
  std::vector<ProbePair> probes;
  for (double x0 : {0.0, 0.3, -0.7}) {
    probes.push_back({SpectralField::mode(b, 0, x0), unit_mode(b, 0)});
  }
  auto rep = holder_profile(deterministic_target([](const SpectralField& x) {
                              return std::min(1.0, std::sqrt(std::abs(x[0])));
                            }),
                            dyadic_scales(), probes, opts(0.5));
  CHECK(std::abs(rep.exponent - 0.5) <= 0.05);
  for (const auto& row : rep.scales) CHECK(row.probe == 0);
}

TEST_CASE("affine target has vanishing second differences") {
  auto b = basis1d();
  // Dyadic coordinates keep every stencil point exact.
  std::vector<ProbePair> probes{{SpectralField(b), SpectralField::mode(b, 0)},
                                {SpectralField::mode(b, 2, 0.375), SpectralField::mode(b, 2)}};
  auto affine = [](const SpectralField& x) { return 1.0 + 2.0 * x[0] - x[2]; };
  const auto scales = std::vector<double>{0.5, 0.25, 0.125};
  auto rep = zygmund_profile(deterministic_target(affine), scales, probes, opts(1.0));
  for (const auto& row : rep.scales) {
    CHECK(row.statistic == 0.0);
    CHECK(row.masked);
  }
  CHECK(rep.verdict == Verdict::Inconclusive);
}

TEST_CASE("|x_1| has Zygmund exponent 1") {
  auto b = basis1d();
  auto abs1 = deterministic_target([](const SpectralField& x) { return std::abs(x[0]); });
  const auto scales = dyadic_scales();

  SUBCASE("centered stencil at the kink") {
    auto probes = single_probe(b);
    auto rep = zygmund_profile(abs1, scales, probes, opts(1.0));
    CHECK(std::abs(rep.exponent - 1.0) <= 0.1);
    for (const auto& row : rep.scales) CHECK(row.per_probe_centered[0]);
  }
  SUBCASE("forward stencils from a family of base points") {
    // The forward difference from the kink itself is zero; the sup over
    // base points x_1 = -1.5 r h_1 recovers the linear scaling.
    std::vector<ProbePair> probes;
    const auto h = unit_mode(b, 0);
    for (double r : scales) probes.push_back({-1.5 * r * h, h});
    ProfileOptions o = opts(1.0);
    o.second = SecondDifference::Forward;
    auto rep = zygmund_profile(abs1, scales, probes, o);
    CHECK(std::abs(rep.exponent - 1.0) <= 0.1);
    auto from_kink = zygmund_profile(abs1, scales, single_probe(b), o);
    for (const auto& row : from_kink.scales) CHECK(row.statistic == 0.0);
  }
}

TEST_CASE("odd and even cusps need different second-difference stencils") {
  auto b = basis1d();
  auto probes = single_probe(b);
  const auto scales = dyadic_scales(1, 4);
  // x |x| is odd: centered differences at 0 vanish, forward ones do not.
  auto odd = deterministic_target([](const SpectralField& x) { return x[0] * std::abs(x[0]); });
  ProfileOptions centered = opts(2.0);
  centered.second = SecondDifference::Centered;
  for (const auto& row : zygmund_profile(odd, scales, probes, centered).scales) {
    CHECK(row.statistic == 0.0);
  }
  auto both = zygmund_profile(odd, scales, probes, opts(2.0));
  for (const auto& row : both.scales) {
    CHECK(row.statistic > 0.0);
    CHECK_FALSE(row.per_probe_centered[0]);
  }
}

TEST_CASE("mask excludes exactly the noise-dominated scales") {
  RegularityReport rep;
  rep.predicted = 1.0;
  const double r[] = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  const double stat[] = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  // 4 se vs 0.25 stat: below, equal (kept), above.
  const double se[] = {0.01, 0.25 * 0.25 / 4.0, 0.02, 0.0, 0.01};
  for (int i = 0; i < 5; ++i) {
    ScaleRow row;
    row.r = r[i];
    row.statistic = stat[i];
    row.std_error = se[i];
    rep.scales.push_back(row);
  }
  finalize(rep, 0.25, 3);
  for (const auto& row : rep.scales) {
    CHECK(row.masked == (4.0 * row.std_error > 0.25 * row.statistic));
  }
  CHECK_FALSE(rep.scales[1].masked);
  CHECK(rep.scales[2].masked);
  CHECK(rep.scales[4].masked);
  CHECK(rep.fit.points == 3);
  CHECK(rep.exponent == doctest::Approx(1.0));
  CHECK(rep.verdict == Verdict::Pass);

  for (auto& row : rep.scales) row.std_error = row.statistic;
  finalize(rep, 0.25, 3);
  CHECK(rep.verdict == Verdict::Inconclusive);
  CHECK(rep.fit.points == 0);
}

TEST_CASE("fit quality gates the verdict") {
  RegularityReport rep;
  rep.predicted = 1.0;
  rep.tolerance = 0.15;
  rep.min_r2 = 0.9;
  const double jitter[] = {1.0, 3.0, 0.4, 2.5, 0.5};
  for (int i = 0; i < 5; ++i) {
    ScaleRow row;
    row.r = std::ldexp(1.0, -i - 1);
    row.statistic = row.r * jitter[i];
    rep.scales.push_back(row);
  }
  finalize(rep, 0.25, 3);
  CHECK(rep.r2 < 0.9);
  CHECK(rep.verdict == Verdict::Fail);
  CHECK(rep.ci95 > 0.0);
}

TEST_CASE("Schauder plan selects seminorm and prediction") {
  struct Row {
    double gamma;
    std::optional<double> alpha;
    const char* target;
    int order;
    double predicted;
    double offset;
  };
  const Row table[] = {
      {0.0, std::nullopt, "Du", 2, 1.0, 0.0},
      {1.0 / 3.0, std::nullopt, "Du", 1, 0.5, 0.0},
      {1.0, std::nullopt, "u", 2, 1.0, 0.0},
      {1.0 / 3.0, 0.25, "Du", 1, 0.75, 0.0},
      {0.0, 0.5, "Du", 2, 0.5, 1.0},
      {1.0 / 3.0, 0.5, "Du", 2, 1.0, 0.0},
      {1.0, 0.5, "Du", 1, 0.5, 0.0},
  };
  for (const auto& row : table) {
    auto plan = schauder_plan(row.gamma, row.alpha);
    CAPTURE(row.gamma);
    CHECK(plan.target == row.target);
    CHECK(plan.order == row.order);
    CHECK(plan.predicted == doctest::Approx(row.predicted));
    CHECK(plan.slope_offset == row.offset);
  }
  CHECK_THROWS_AS(schauder_plan(1.5, std::nullopt), DomainError);
  CHECK_THROWS_AS(schauder_plan(0.0, 1.0), DomainError);
}

TEST_CASE("Monte Carlo profile of a smooth resolvent gradient") {
  // F = 0 and f = cos(x_1): Du is smooth, so first differences scale like r.
  Problem p;
  p.basis = basis1d(8, 0.0);
  p.reaction = ReactionSpec::zero();
  p.solver.dt = 1e-2;
  ResolventBudget budget;
  budget.mc.paths = 2000;
  budget.tolerance = 1e-1;
  const auto f = TestFunction::cosine({0});
  StencilEvaluator eval = [&](const std::vector<SpectralField>& pts, const SpectralField& h) {
    StencilRequest req{pts, h, StencilQuantity::Gradient};
    return resolvent_stencil(p, f, req, 1.0, budget);
  };
  std::vector<ProbePair> probes{{SpectralField::mode(p.basis, 0, 0.8), unit_mode(p.basis, 0)}};
  auto rep = holder_profile(eval, dyadic_scales(1, 5), probes, opts(1.0));
  CHECK(rep.verdict == Verdict::Pass);
  CHECK(std::abs(rep.exponent - 1.0) <= 0.1);
  CHECK(rep.samples == 2000 * 6);

  SUBCASE("coincident stencil points give exactly zero difference") {
    auto res = eval({probes[0].x, probes[0].x}, probes[0].h);
    const double w[] = {1.0, -1.0};
    auto st = res.samples.combination(w);
    CHECK(st.mean() == 0.0);
    CHECK(st.stderr_mean() == 0.0);
  }
}

TEST_CASE("verify_schauder is reproducible and serializes") {
  SolverConfig solver;
  solver.dt = 1e-2;
  SchauderBudget budget;
  budget.resolvent.mc.paths = 64;
  budget.resolvent.mc.threads = 2;
  budget.resolvent.tolerance = 1e-1;
  budget.scales = dyadic_scales(1, 4);
  budget.evolution = true;
  const DomainSpec d{1, Boundary::Dirichlet, 1.0 / 3.0, 8, 32};
  auto a = verify_schauder(d, std::nullopt, ReactionSpec::zero(), solver, budget);
  budget.resolvent.mc.threads = 1;
  auto b = verify_schauder(d, std::nullopt, ReactionSpec::zero(), solver, budget);
  REQUIRE(a.reports.size() == 2);
  CHECK(a.reports[0].target == "Du");
  CHECK(a.reports[1].target == "Dv2");
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(to_json(a.reports[i]) == to_json(b.reports[i]));
    CHECK(to_csv(a.reports[i]) == to_csv(b.reports[i]));
  }
  auto j = nlohmann::json::parse(to_json(a.reports[0]));
  CHECK(j["predicted"].get<double>() == doctest::Approx(0.5));
  CHECK(j["scales"].size() == 4);
  CHECK(j["scales"][0]["per_probe"].size() == mode_ladder(*SpectralBasis::create(d)).size());
  CHECK(j["fingerprint"].get<std::string>().size() == 16);
  const auto csv = to_csv(a.reports[0]);
  CHECK(csv.rfind("r,statistic,std_error,probe,masked\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
