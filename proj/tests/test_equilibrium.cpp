#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ringtrap/equilibrium.hpp"
#include "ringtrap/ring_model.hpp"
#include "support/oracles.hpp"

using namespace ringtrap;

namespace {

RingSpec paper_ring(int n) {
  RingSpec r;
  r.diameter = 90e-6;
  r.ion_count = n;
  return r;
}

} // namespace

TEST_SUITE_BEGIN("equilibrium");

TEST_CASE("two ions sit antipodally at zero field") {
  auto res = find_equilibrium(paper_ring(2), InPlaneField{});
  REQUIRE(res.converged);
  CHECK(std::abs(res.state.angles[1] - res.state.angles[0] - pi) <= 1e-9);
  CHECK(res.state.angles[0] == 0.0); // gauge
}

TEST_CASE("zero field equilibrium is the uniform ring with theta0 gauge") {
  for (int n : {3, 5, 8, 12}) {
    auto res = find_equilibrium(paper_ring(n), InPlaneField{});
    REQUIRE(res.converged);
    CHECK(res.state.angles[0] == 0.0);
    for (int i = 0; i < n; ++i) {
      double gap = (i + 1 < n ? res.state.angles[i + 1] : res.state.angles[0] + two_pi) -
                   res.state.angles[i];
      CHECK(std::abs(gap - two_pi / n) <= 1e-8);
    }
  }
}

TEST_CASE("three pinned ions match the brute-force grid oracle") {
  RingSpec ring = paper_ring(3);
  InPlaneField f{0.0, 2.0};
  auto res = find_equilibrium(ring, f);
  REQUIRE(res.converged);
  auto brute = oracle::brute_force_equilibrium(ring, f, 1e-3);
  CHECK(std::abs(res.energy - brute.energy) <= 1e-12 * std::abs(brute.energy));
  // the solver must never be beaten by the grid
  CHECK(res.energy <= brute.energy + 1e-12 * std::abs(brute.energy));
}

TEST_CASE("two pinned ions match the brute-force grid oracle") {
  RingSpec ring = paper_ring(2);
  InPlaneField f{0.7, 1.9};
  auto res = find_equilibrium(ring, f);
  REQUIRE(res.converged);
  auto brute = oracle::brute_force_equilibrium(ring, f, 2e-3);
  CHECK(std::abs(res.energy - brute.energy) <= 1e-12 * std::abs(brute.energy));
}

TEST_CASE("ten ions compress toward the field-favored pole, mirror symmetric") {
  RingSpec ring = paper_ring(10);
  InPlaneField f{0.0, -2.0}; // pole at theta = pi
  auto res = find_equilibrium(ring, f);
  REQUIRE(res.converged);
  const auto& th = res.state.angles;

  // smallest gap adjacent to the pole, largest opposite
  double min_gap = two_pi, max_gap = 0, min_mid = 0, max_mid = 0;
  for (int i = 0; i < 10; ++i) {
    double next = i + 1 < 10 ? th[i + 1] : th[0] + two_pi;
    double gap = next - th[i];
    double mid = wrap_angle(0.5 * (next + th[i]));
    if (gap < min_gap) {
      min_gap = gap;
      min_mid = mid;
    }
    if (gap > max_gap) {
      max_gap = gap;
      max_mid = mid;
    }
  }
  CHECK(std::abs(circular_distance(min_mid, pi)) < 0.5);
  CHECK(std::abs(circular_distance(max_mid, 0.0)) < 0.5);

  // mirror symmetry about the y axis: the angle set maps to itself under th -> 2pi - th
  for (int i = 0; i < 10; ++i) {
    double reflected = wrap_angle(two_pi - th[i]);
    double best = two_pi;
    for (int j = 0; j < 10; ++j)
      best = std::min(best, std::abs(circular_distance(reflected, th[j])));
    CHECK(best <= 1e-6);
  }
}

TEST_CASE("field rotation rotates the equilibrium") {
  RingSpec ring = paper_ring(6);
  InPlaneField f{0.0, 2.0};
  auto base = find_equilibrium(ring, f);
  REQUIRE(base.converged);
  double alpha = 0.83;
  InPlaneField fr{f.ex * std::cos(alpha) + f.ey * std::sin(alpha),
                  -f.ex * std::sin(alpha) + f.ey * std::cos(alpha)};
  auto rot = find_equilibrium(ring, fr);
  REQUIRE(rot.converged);
  // each rotated ion angle th - alpha must appear in the base solution
  for (int i = 0; i < 6; ++i) {
    double back = wrap_angle(rot.state.angles[i] + alpha);
    double best = two_pi;
    for (int j = 0; j < 6; ++j)
      best = std::min(best, std::abs(circular_distance(back, base.state.angles[j])));
    CHECK(best <= 1e-6);
  }
}

TEST_CASE("converged equilibria have PSD hessians and meet the tolerance") {
  for (int n : {4, 9, 13}) {
    RingSpec ring = paper_ring(n);
    InPlaneField f{0.6, -1.4};
    EquilibriumOptions opts;
    auto res = find_equilibrium(ring, f, opts);
    REQUIRE(res.converged);
    CHECK(res.gradient_norm <= opts.tolerance);
    Eigen::MatrixXd h = detail::ring_hessian_raw(res.state.angles, ring, f);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    CHECK(es.eigenvalues()[0] >= -1e-10 * es.eigenvalues()[n - 1]);
  }
}

TEST_CASE("multistart best energy is non-increasing in start count") {
  RingSpec ring = paper_ring(8);
  InPlaneField f{1.0, 1.0};
  double prev = 0;
  for (int ms : {1, 2, 4, 8}) {
    EquilibriumOptions opts;
    opts.multistart = ms;
    auto res = find_equilibrium(ring, f, opts);
    REQUIRE(res.converged);
    if (ms > 1) CHECK(res.energy <= prev + 1e-12 * std::abs(prev));
    prev = res.energy;
  }
}

TEST_CASE("deterministic for a fixed seed") {
  RingSpec ring = paper_ring(7);
  InPlaneField f{0.4, 1.2};
  EquilibriumOptions opts;
  opts.seed = 777;
  auto a = find_equilibrium(ring, f, opts);
  auto b = find_equilibrium(ring, f, opts);
  CHECK(a.energy == b.energy);
  CHECK((a.state.angles - b.state.angles).norm() == 0.0);
}

TEST_CASE("zero ions rejected") {
  RingSpec ring = paper_ring(0);
  CHECK_THROWS_AS(find_equilibrium(ring, InPlaneField{}), std::invalid_argument);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("equilibrium_planar");

TEST_CASE("symmetric problem gives equal radii at zero field") {
  RingSpec ring = paper_ring(4);
  auto res = find_equilibrium_planar(ring, InPlaneField{}, two_pi * 390e3);
  REQUIRE(res.converged);
  // all radii agree (symmetry); they sit slightly outside r0 where the
  // harmonic pull balances the Coulomb push
  double rbar = res.state.radii.mean();
  for (int i = 0; i < 4; ++i) CHECK(std::abs(res.state.radii[i] - rbar) <= 1e-10);
  CHECK(rbar > ring.radius());

  // single-variable radial balance at uniform angles solves the same problem
  auto radial = [&](const Eigen::VectorXd& r1) {
    Eigen::VectorXd rr = Eigen::VectorXd::Constant(4, r1[0]);
    Eigen::VectorXd th(4);
    for (int i = 0; i < 4; ++i) th[i] = two_pi * i / 4.0;
    return detail::planar_energy_raw(rr, th, two_pi * 390e3, ring.radius(), ring, InPlaneField{});
  };
  Eigen::VectorXd seed(1);
  seed << ring.radius();
  Eigen::VectorXd best = oracle::grid_refine(radial, seed, 2e-6, 8);
  CHECK(rbar == doctest::Approx(best[0]).epsilon(1e-7));
  CHECK_FALSE(res.zigzag);
}

TEST_CASE("stiff radial limit reduces to the 1D solution") {
  RingSpec ring = paper_ring(3);
  InPlaneField f{0.0, 2.0};
  auto res1d = find_equilibrium(ring, f);
  REQUIRE(res1d.converged);
  auto res2d = find_equilibrium_planar(ring, f, 10.0 * two_pi * 390e3);
  REQUIRE(res2d.converged);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(circular_distance(res2d.state.angles[i], res1d.state.angles[i])) <= 1e-4);
}

TEST_CASE("very stiff confinement never buckles") {
  RingSpec ring = paper_ring(2);
  InPlaneField f{0.0, -3.0};
  EquilibriumOptions opts;
  opts.multistart = 2;
  auto scan = zigzag_critical_number(ring, f, 100.0 * two_pi * 390e3, 30, opts);
  CHECK_FALSE(scan.critical_n.has_value());
  CHECK_FALSE(scan.failed_at.has_value());
  CHECK(scan.flags.size() == 29);
}

TEST_CASE("pinning field requirement") {
  CHECK_THROWS_AS(zigzag_critical_number(paper_ring(2), InPlaneField{}, two_pi * 390e3, 10),
                  std::invalid_argument);
}

TEST_SUITE_END();
