#include <doctest.h>

#include <cmath>
#include <random>

#include "spdelab/error.hpp"
#include "spdelab/solver.hpp"
#include "spdelab/stats.hpp"

using namespace spdelab;

namespace {

const ReactionSpec kAllenCahn = ReactionSpec::polynomial({0.0, 1.0, 0.0, -1.0});
const ReactionSpec kLinear = ReactionSpec::polynomial({0.0, -1.0});

BasisPtr basis_1d(int k, double gamma = 0.0) {
  return SpectralBasis::create({1, Boundary::Dirichlet, gamma, k, 4 * k});
}

SolverConfig quiet(double dt, double horizon) {
  SolverConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.noise = false;
  return c;
}

SpectralField smooth_field(const BasisPtr& b, unsigned seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  SpectralField f(b);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = scale * n01(rng) / (1.0 + i * i);
  return f;
}

TrajectoryState run_to(MildSolver& s, TrajectoryState st, double horizon, NoiseStream stream) {
  std::vector<TrajectoryState> v{std::move(st)};
  s.run(std::span(v), TimeGrid::uniform(s.config().dt, horizon), stream,
        [](std::size_t, auto) {});
  return v[0];
}

}  // namespace

TEST_CASE("config validation") {
  auto b = basis_1d(64);
  CHECK_NOTHROW(validate(quiet(1e-3, 1.0), *b));
  CHECK_THROWS_AS(validate(quiet(0.0, 1.0), *b), DomainError);
  CHECK_THROWS_AS(validate(quiet(2.0, 1.0), *b), DomainError);
  CHECK_THROWS_AS(validate(quiet(0.02, 1.0), *b), DomainError);  // 0.02 * 4096 > 50
}

TEST_CASE("pure heat flow") {
  auto b = basis_1d(8);
  MildSolver s(b, ReactionSpec::zero(), quiet(1e-2, 1.0));
  auto st = run_to(s, TrajectoryState::start(SpectralField::mode(b, 0)), 1.0, {1, 0, 0});
  CHECK(st.x[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(st.time == doctest::Approx(1.0));
}

TEST_CASE("tangent equals heat flow of h when F = 0") {
  auto b = basis_1d(8, 0.5);
  SolverConfig cfg;
  cfg.dt = 1e-2;
  MildSolver s(b, ReactionSpec::zero(), cfg);
  auto h = smooth_field(b, 4, 1.0);
  std::vector<SpectralField> dirs{h};
  auto st = run_to(s, TrajectoryState::start(smooth_field(b, 5, 1.0), dirs), 0.5, {3, 1, 0});
  for (std::size_t k = 0; k < h.size(); ++k) {
    CHECK(st.tangents[0][k] == doctest::Approx(h[k] * std::exp(-0.5 * b->eigenvalue(k))).epsilon(1e-12));
  }
}

TEST_CASE("linear reaction converges with order one") {
  auto b = basis_1d(8);
  auto x0 = smooth_field(b, 2, 1.0);
  std::vector<double> errors;
  for (double dt : {0.02, 0.01, 0.005}) {
    MildSolver s(b, kLinear, quiet(dt, 1.0));
    auto st = run_to(s, TrajectoryState::start(x0), 1.0, {1, 0, 0});
    double err = 0.0;
    for (std::size_t k = 0; k < x0.size(); ++k) {
      err = std::max(err, std::abs(st.x[k] - x0[k] * std::exp(-(b->eigenvalue(k) + 1.0))));
    }
    errors.push_back(err);
  }
  CHECK(errors[0] / errors[1] > 1.8);
  CHECK(errors[1] / errors[2] > 1.8);
  CHECK(errors[2] < 1e-2);
}

TEST_CASE("weak consistency of the mean for the linear reaction") {
  auto b = basis_1d(4);
  auto x0 = SpectralField::mode(b, 0, 1.0);
  const double exact = std::exp(-2.0 * 0.5);
  std::vector<double> bias;
  for (double dt : {0.05, 0.025}) {
    SolverConfig cfg;
    cfg.dt = dt;
    MildSolver s(b, kLinear, cfg);
    RunningStats st;
    for (std::uint64_t p = 0; p < 4000; ++p) {
      st.add(run_to(s, TrajectoryState::start(x0), 0.5, {77, p, 0}).x[0]);
    }
    // Deterministic part of the bias is the exponential Euler error; the MC
    // error is measured against it.
    MildSolver det(b, kLinear, quiet(dt, 0.5));
    const double mean_det = run_to(det, TrajectoryState::start(x0), 0.5, {0, 0, 0}).x[0];
    CHECK(std::abs(st.mean() - mean_det) <= 3.0 * st.stderr_mean());
    bias.push_back(mean_det - exact);
  }
  CHECK(std::abs(bias[0] / bias[1] - 2.0) < 0.1);
}

TEST_CASE("tangent matches coupled central differences") {
  auto b = basis_1d(8, 1.0 / 3.0);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  MildSolver s(b, kAllenCahn, cfg);
  for (unsigned trial = 0; trial < 3; ++trial) {
    auto x = smooth_field(b, 10 + trial, 0.8);
    auto h = smooth_field(b, 20 + trial, 1.0);
    const double eps = 1e-4;
    std::vector<SpectralField> dirs{h};
    NoiseStream stream{31, trial, 0};
    auto st = run_to(s, TrajectoryState::start(x, dirs), 0.3, stream);
    auto plus = run_to(s, TrajectoryState::start(x + eps * h), 0.3, stream);
    auto minus = run_to(s, TrajectoryState::start(x - eps * h), 0.3, stream);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double fd = (plus.x[k] - minus.x[k]) / (2 * eps);
      err = std::max(err, std::abs(fd - st.tangents[0][k]));
      scale = std::max(scale, std::abs(st.tangents[0][k]));
    }
    CHECK(err <= 1e-3 * scale);
  }
}

TEST_CASE("BEL accumulator is a martingale") {
  auto b = basis_1d(8, 1.0 / 3.0);
  SolverConfig cfg;
  cfg.dt = 1e-2;
  MildSolver s(b, kAllenCahn, cfg);
  std::vector<SpectralField> dirs{SpectralField::mode(b, 0)};
  RunningStats st;
  for (std::uint64_t p = 0; p < 10000; ++p) {
    st.add(run_to(s, TrajectoryState::start(SpectralField(b), dirs), 0.5, {13, p, 0}).bel[0]);
  }
  CHECK(std::abs(st.mean()) <= 4.0 * st.stderr_mean());
  CHECK(st.stddev() > 0.0);
}

TEST_CASE("BEL weight variance follows the Ito isometry for F = 0") {
  // E M(t)^2 = sum_k int_0^t lambda^gamma xi_k(s)^2 ds with xi = e^{sA} h.
  auto b = basis_1d(4, 1.0);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  MildSolver s(b, ReactionSpec::zero(), cfg);
  std::vector<SpectralField> dirs{SpectralField::mode(b, 1)};
  RunningStats sq;
  for (std::uint64_t p = 0; p < 20000; ++p) {
    const double m = run_to(s, TrajectoryState::start(SpectralField(b), dirs), 0.25, {4, p, 0}).bel[0];
    sq.add(m * m);
  }
  const double lambda = 4.0;
  const double exact = lambda * (1.0 - std::exp(-2.0 * lambda * 0.25)) / (2.0 * lambda);
  CHECK(std::abs(sq.mean() - exact) <= 4.0 * sq.stderr_mean() + 0.01 * exact);
}

TEST_CASE("linearity in h is bitwise") {
  auto b = basis_1d(8);
  SolverConfig cfg;
  cfg.dt = 1e-2;
  MildSolver s(b, kAllenCahn, cfg);
  auto x = smooth_field(b, 1, 0.5);
  auto h = smooth_field(b, 2, 1.0);
  for (double alpha : {0.25, 2.0, -4.0}) {
    std::vector<SpectralField> d1{h}, d2{alpha * h};
    auto a = run_to(s, TrajectoryState::start(x, d1), 0.2, {6, 0, 0});
    auto c = run_to(s, TrajectoryState::start(x, d2), 0.2, {6, 0, 0});
    CHECK(c.bel[0] == alpha * a.bel[0]);
    for (std::size_t k = 0; k < h.size(); ++k) CHECK(c.tangents[0][k] == alpha * a.tangents[0][k]);
  }
}

TEST_CASE("mode restriction reproduces the full run bitwise") {
  auto b = basis_1d(16, 1.0 / 3.0);
  SolverConfig cfg;
  cfg.dt = 1e-2;
  MildSolver full(b, ReactionSpec::zero(), cfg);
  MildSolver sub(b, ReactionSpec::zero(), cfg);
  sub.restrict_modes({0, 5});
  CHECK(sub.restricted());
  std::vector<SpectralField> dirs{SpectralField::mode(b, 0)};
  auto x = smooth_field(b, 3, 1.0);
  auto a = run_to(full, TrajectoryState::start(x, dirs), 0.3, {8, 2, 0});
  auto c = run_to(sub, TrajectoryState::start(x, dirs), 0.3, {8, 2, 0});
  CHECK(a.x[0] == c.x[0]);
  CHECK(a.x[5] == c.x[5]);
  CHECK(a.bel[0] == c.bel[0]);
  MildSolver nonlinear(b, kAllenCahn, cfg);
  CHECK_THROWS_AS(nonlinear.restrict_modes({0}), DomainError);
}

TEST_CASE("run_pair") {
  auto b = basis_1d(8);
  SolverConfig cfg;
  cfg.dt = 1e-2;
  MildSolver s(b, kAllenCahn, cfg);
  auto x = smooth_field(b, 1, 0.5);
  auto [p, q] = run_pair(s, x, x, TimeGrid::uniform(1e-2, 0.5), {9, 0, 0});
  CHECK(p.x == q.x);

  MildSolver lin(b, kLinear, quiet(1e-3, 1.0));
  auto y = x + 0.05 * SpectralField::mode(b, 0);
  auto [u, v] = run_pair(lin, x, y, TimeGrid::uniform(1e-3, 1.0), {9, 0, 0});
  const double dist = sup_norm(v.x - u.x);
  const double d0 = sup_norm(y - x);
  CHECK(dist == doctest::Approx(std::exp(-2.0) * d0).epsilon(2e-3));
}

TEST_CASE("pathwise Lipschitz bound with eta = 1") {
  auto b = basis_1d(16);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  MildSolver s(b, kAllenCahn, cfg);
  for (std::uint64_t p = 0; p < 20; ++p) {
    auto x = smooth_field(b, 100 + p, 1.0);
    auto y = x + smooth_field(b, 200 + p, 0.05);
    auto [u, v] = run_pair(s, x, y, TimeGrid::uniform(1e-3, 1.0), {10, p, 0});
    CHECK(sup_norm(u.x - v.x) <= 1.05 * std::exp(1.0) * sup_norm(x - y));
  }
}

TEST_CASE("blow-up guard") {
  auto b = basis_1d(4);
  SolverConfig cfg = quiet(1e-2, 1.0);
  cfg.blowup_threshold = 10.0;
  MildSolver s(b, ReactionSpec::polynomial({0, 0, 0, 1}), cfg);
  auto st = TrajectoryState::start(SpectralField::mode(b, 0, 5.0));
  try {
    run_to(s, st, 1.0, {0, 0, 0});
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.sup_norm() > 10.0);
    CHECK(e.time() >= 0.0);
  }
}

TEST_CASE("dissipative bound probe") {
  auto b = basis_1d(8);
  SolverConfig cfg = quiet(1e-2, 1.0);
  const auto cubic = ReactionSpec::polynomial({0.0, 0.0, 0.0, -1.0});
  std::vector<double> ts{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  std::vector<SpectralField> probes;
  for (double amp : {1.0, 10.0, 100.0}) {
    probes.push_back(SpectralField::mode(b, 0, amp / std::sqrt(2.0 / 3.14159265358979)));
  }
  auto r = dissipative_bound_probe(b, cubic, cfg, ts, probes, 1);
  REQUIRE(r.rows.size() == ts.size());
  CHECK(r.predicted_exponent == 0.5);
  CHECK(r.fitted_exponent >= 0.45);
  // Saturation: the largest datum is 100x the smallest, the solution is not.
  const auto& early = r.rows.front();
  CHECK(early.sup_norms[2] < 10.0 * early.sup_norms[1]);
  CHECK_THROWS_AS(dissipative_bound_probe(b, ReactionSpec::zero(), cfg, ts, probes, 1),
                  DomainError);
}
