#include <doctest.h>

#include <cmath>

#include "ringtrap/langevin.hpp"
#include "support/stats.hpp"

using namespace ringtrap;

namespace {

RingSpec paper_ring(int n) {
  RingSpec r;
  r.diameter = 90e-6;
  r.ion_count = n;
  return r;
}

} // namespace

TEST_SUITE_BEGIN("langevin");

TEST_CASE("zero temperature stays at the fixed point") {
  RingSpec ring = paper_ring(6);
  InPlaneField f{0.0, -2.0};
  LangevinConfig cfg;
  cfg.temperature = 0.0;
  cfg.friction = 1e4;
  cfg.timestep = 1e-7;
  cfg.steps = 50000;
  cfg.burn_in = 0;
  auto out = simulate(ring, f, cfg);
  CHECK_FALSE(out.aborted);
  CHECK(out.kinetic_temperature <= 1e-12);
  CHECK(out.hop_count == 0);
  CHECK(out.max_excursion <= 1e-9);
  CHECK_FALSE(out.delocalized);
}

TEST_CASE("seed determinism is bit exact") {
  RingSpec ring = paper_ring(4);
  InPlaneField f{0.0, -1.5};
  LangevinConfig cfg;
  cfg.temperature = 2e-3;
  cfg.steps = 20000;
  cfg.burn_in = 1000;
  cfg.seed = 99;
  auto a = simulate(ring, f, cfg);
  auto b = simulate(ring, f, cfg);
  CHECK(a.kinetic_temperature == b.kinetic_temperature);
  CHECK(a.winding == b.winding);
  CHECK(a.energy_mean == b.energy_mean);
  CHECK(a.hop_count == b.hop_count);
  cfg.seed = 100;
  auto c = simulate(ring, f, cfg);
  CHECK(a.kinetic_temperature != c.kinetic_temperature);
}

TEST_CASE("equipartition in a pinned well") {
  RingSpec ring = paper_ring(10);
  InPlaneField f{0.0, -2.0}; // V_B ~ 10x kB T at 1 mK
  LangevinConfig cfg;
  cfg.temperature = 1e-3;
  cfg.friction = 1e4;
  cfg.timestep = 1e-7;
  cfg.steps = 2000000;
  cfg.burn_in = 200000;
  cfg.seed = 7;
  auto out = simulate(ring, f, cfg);
  CHECK_FALSE(out.aborted);
  CHECK(out.kinetic_temperature == doctest::Approx(1e-3).epsilon(0.05));
  CHECK(out.hop_count == 0);
}

TEST_CASE("integrator weak accuracy: halving dt moves the temperature by under 1 percent") {
  RingSpec ring = paper_ring(5);
  InPlaneField f{0.0, -2.0};
  LangevinConfig cfg;
  cfg.temperature = 3e-3;
  cfg.friction = 2e4;
  cfg.timestep = 1e-7;
  cfg.steps = 3000000;
  cfg.burn_in = 100000;
  cfg.seed = 21;
  auto a = simulate(ring, f, cfg);
  cfg.timestep = 5e-8;
  cfg.steps = 6000000;
  cfg.burn_in = 200000;
  auto b = simulate(ring, f, cfg);
  CHECK(std::abs(a.kinetic_temperature - b.kinetic_temperature) <=
        0.01 * cfg.temperature + 2e-5); // 1% systematic allowance plus noise floor
}

TEST_CASE("free rotation delocalizes at any temperature") {
  RingSpec ring = paper_ring(3);
  LangevinConfig cfg;
  cfg.temperature = 3e-3;
  cfg.friction = 1e4;
  cfg.timestep = 2e-7;
  cfg.steps = 3000000;
  cfg.burn_in = 0;
  cfg.seed = 3;
  auto out = simulate(ring, InPlaneField{}, cfg);
  CHECK(out.delocalized);
  CHECK(out.max_excursion > two_pi);
}

TEST_CASE("hop statistics: pinned runs have none, free runs have many") {
  RingSpec ring = paper_ring(6);
  InPlaneField f{0.0, -2.5};
  BarrierOptions bopts;
  bopts.grid_points = 61;
  auto prof = barrier_profile(ring, f, bopts);
  REQUIRE(prof.complete);

  LangevinConfig cfg;
  cfg.temperature = 1e-3; // far below the ~100 mK barrier at N=6
  cfg.friction = 1e4;
  cfg.timestep = 1e-7;
  cfg.steps = 500000;
  cfg.burn_in = 50000;
  cfg.sample_stride = 20;
  auto pinned = simulate(ring, f, cfg);
  auto hs = hop_statistics(pinned.collective_series, pinned.series_dt, prof, 6);
  CHECK(hs.count == 0);

  auto free_run = simulate(ring, InPlaneField{}, cfg);
  auto hs_free = hop_statistics(free_run.collective_series, free_run.series_dt, prof, 6);
  CHECK(hs_free.count > 0);
  CHECK(hs_free.rate > 0);
}

TEST_CASE("hop rate rises with temperature") {
  RingSpec ring = paper_ring(10);
  InPlaneField f{0.0, -1.95}; // V_B ~ 8 mK
  double mean_rate[3] = {0, 0, 0};
  double temps[3] = {2e-3, 4e-3, 8e-3};
  for (int ti = 0; ti < 3; ++ti) {
    for (int seed = 0; seed < 8; ++seed) {
      LangevinConfig cfg;
      cfg.temperature = temps[ti];
      cfg.friction = 1e4;
      cfg.timestep = 1e-7;
      cfg.steps = 300000;
      cfg.burn_in = 30000;
      cfg.seed = 1000 + seed;
      auto out = simulate(ring, f, cfg);
      mean_rate[ti] += static_cast<double>(out.hop_count);
    }
  }
  CHECK(mean_rate[0] <= mean_rate[1]);
  CHECK(mean_rate[1] <= mean_rate[2]);
  CHECK(mean_rate[2] > 0);
}

TEST_CASE("single ion position histogram is Boltzmann") {
  RingSpec ring = paper_ring(1);
  InPlaneField f{0.0, 2.0};
  LangevinConfig cfg;
  cfg.temperature = 3e-3;
  cfg.friction = 2e4;
  cfg.timestep = 2.5e-7;
  cfg.steps = 8000000;
  cfg.burn_in = 400000;
  cfg.seed = 12;
  cfg.sample_stride = 1600; // 0.4 ms between samples, past the velocity correlation time

  std::vector<double> samples;
  // collective series for N = 1 is the (unwrapped) ion angle relative to start
  auto out = simulate(ring, f, cfg);
  REQUIRE_FALSE(out.aborted);
  double start = 0.0; // equilibrium pole for Ey > 0 is theta = 0
  for (double w : out.collective_series) samples.push_back(wrap_angle(start + w));

  const int bins = 24;
  std::vector<double> observed(bins, 0.0), expected(bins, 0.0);
  for (double s : samples) {
    int b = std::min<int>(bins - 1, static_cast<int>(s / two_pi * bins));
    observed[b] += 1.0;
  }
  // Boltzmann weights integrated per bin
  double kT = consts.boltzmann * cfg.temperature;
  double vmax = 0.5 * f.ey * consts.elementary_charge * ring.diameter;
  double norm = 0.0;
  for (int b = 0; b < bins; ++b) {
    double acc = 0.0;
    for (int k = 0; k < 64; ++k) {
      double th = two_pi * (b + (k + 0.5) / 64.0) / bins;
      acc += std::exp(-(-vmax * std::cos(th)) / kT);
    }
    expected[b] = acc;
    norm += acc;
  }
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    double e = expected[b] / norm * samples.size();
    chi2 += (observed[b] - e) * (observed[b] - e) / e;
  }
  double p = oracle::chi2_pvalue(chi2, bins - 1);
  INFO("chi2 = " << chi2 << ", p = " << p << ", samples = " << samples.size());
  CHECK(p > 0.01);
}

TEST_CASE("delocalization scan finds a threshold and handles T = 0") {
  RingSpec ring = paper_ring(10);
  LangevinConfig base;
  base.friction = 1e4;
  base.timestep = 1e-7;
  base.steps = 400000;
  base.burn_in = 40000;
  base.seed = 5;

  std::vector<double> fields{1.2, 1.5, 1.8, 2.1, 2.4};
  auto scan = delocalization_scan(ring, 3e-3, fields, base, 4);
  REQUIRE(scan.fields.size() == 5);
  // delocalized at weak pinning, pinned at strong pinning
  CHECK(scan.delocalized_fraction.front() >= 0.5);
  CHECK(scan.delocalized_fraction.back() <= 0.5);
  CHECK(scan.threshold_field >= fields.front());
  CHECK(scan.threshold_field <= fields.back());

  auto frozen = delocalization_scan(ring, 0.0, fields, base, 2);
  CHECK(frozen.threshold_field == 0.0);
}

TEST_CASE("unstable timestep is rejected up front") {
  RingSpec ring = paper_ring(10);
  InPlaneField f{0.0, -2.0};
  LangevinConfig cfg;
  cfg.timestep = 1e-5; // dt * omega_max far above 0.1
  CHECK_THROWS_AS(simulate(ring, f, cfg), std::invalid_argument);
}

TEST_SUITE_END();
