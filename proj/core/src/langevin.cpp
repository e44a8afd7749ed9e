#include "ringtrap/langevin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "ringtrap/modes.hpp"
#include "minimize.hpp"

namespace ringtrap {

namespace {

// hop bookkeeping on the collective angle: count a transition only once the
// angle has settled within a quarter well of the new center
struct HopCounter {
  double well_width;
  double settle;
  long long hops = 0;
  long long well = 0;

  explicit HopCounter(double width) : well_width(width), settle(0.25 * width) {}
  void update(double w) {
    long long cur = std::llround(w / well_width);
    if (cur != well && std::abs(w - cur * well_width) < settle) {
      hops += std::llabs(cur - well);
      well = cur;
    }
  }
};

} // namespace

TrajectorySummary simulate(const RingSpec& ring, const InPlaneField& field,
                           const LangevinConfig& cfg, const TrajectorySink& sink) {
  ring.validate();
  field.validate();
  if (!(cfg.temperature >= 0)) throw std::invalid_argument("LangevinConfig: T must be >= 0");
  if (!(cfg.friction > 0)) throw std::invalid_argument("LangevinConfig: friction must be > 0");
  if (!(cfg.timestep > 0)) throw std::invalid_argument("LangevinConfig: timestep must be > 0");
  if (cfg.steps < 1 || cfg.burn_in < 0) throw std::invalid_argument("LangevinConfig: bad step counts");

  const int n = ring.ion_count;
  const double m = ring.ion_mass;
  const double r0 = ring.radius();
  const double kb = consts.boltzmann;

  Eigen::VectorXd theta;
  if (cfg.initial) {
    if (cfg.initial->size() != n)
      throw std::invalid_argument("LangevinConfig: initial state size mismatch");
    cfg.initial->validate();
    theta = cfg.initial->angles;
  } else {
    EquilibriumResult eq = find_equilibrium(ring, field);
    if (!eq.converged) throw std::runtime_error("simulate: no equilibrium to start from");
    theta = eq.state.angles;
  }

  // stability precondition dt * omega_max < 0.1, from the initial spectrum
  {
    CrystalState1D st{theta};
    ModeSpectrum spec = tangential_modes(st, ring, field);
    double wmax = spec.frequencies.size() ? spec.frequencies.maxCoeff() : 0.0;
    if (wmax > 0 && cfg.timestep * wmax >= 0.1)
      throw std::invalid_argument("LangevinConfig: dt * omega_max = " +
                                  std::to_string(cfg.timestep * wmax) + " >= 0.1 (unstable)");
  }

  detail::Rng rng(cfg.seed);
  const double dt = cfg.timestep;
  const double c1 = std::exp(-cfg.friction * dt);
  const double c2 = std::sqrt(kb * cfg.temperature / m * (1.0 - c1 * c1));

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n); // arc velocity, m/s
  Eigen::VectorXd force(n), grad(n);

  auto eval_force = [&](const Eigen::VectorXd& th, Eigen::VectorXd& f) {
    detail::ring_gradient_into(th, ring, field, grad);
    f = -grad / r0; // dV/ds = dV/dtheta / r0
  };
  eval_force(theta, force);

  const double theta0_mean = theta.mean();
  const double e_init = detail::ring_energy_raw(theta, ring, field);
  const double abort_margin = 10.0 * std::max(n * kb * cfg.temperature, n * kb * 1e-3);

  TrajectorySummary out;
  out.series_dt = dt * cfg.sample_stride;
  HopCounter hops(two_pi / n);

  double t_sum_v2 = 0;
  double coll_sum = 0, coll_sq = 0;
  double e_sum = 0, e_sq = 0;
  long long n_coll = 0, n_e = 0;
  double coll_ref = 0; // collective offset at measurement start
  bool measuring = cfg.burn_in == 0;

  const long long total = cfg.burn_in + cfg.steps;
  for (long long step = 0; step < total; ++step) {
    // BAOAB
    v += (0.5 * dt / m) * force;
    theta += (0.5 * dt / r0) * v;
    for (int i = 0; i < n; ++i) v[i] = c1 * v[i] + c2 * rng.normal();
    theta += (0.5 * dt / r0) * v;
    eval_force(theta, force);
    v += (0.5 * dt / m) * force;

    double coll = theta.mean() - theta0_mean;

    if (step + 1 == cfg.burn_in) {
      measuring = true;
      coll_ref = coll;
      hops = HopCounter(two_pi / n);
      continue;
    }
    if (!measuring) continue;

    double w = coll - coll_ref;
    hops.update(w);
    double aw = std::abs(w);
    if (aw > out.max_excursion) out.max_excursion = aw;
    out.winding = w;

    t_sum_v2 += v.squaredNorm();
    coll_sum += w;
    coll_sq += w * w;
    ++n_coll;

    if ((step - cfg.burn_in) % cfg.sample_stride == 0) {
      double pot = detail::ring_energy_raw(theta, ring, field);
      double kin = 0.5 * m * v.squaredNorm();
      e_sum += pot + kin;
      e_sq += (pot + kin) * (pot + kin);
      ++n_e;
      out.collective_series.push_back(w);
      if (sink) sink((step - cfg.burn_in) * dt, theta, w);

      if (pot + kin > e_init + abort_margin) {
        out.aborted = true;
        out.abort_reason = "energy " + std::to_string(pot + kin) + " J exceeded initial " +
                           std::to_string(e_init) + " J by more than 10x the thermal scale at step " +
                           std::to_string(step);
        break;
      }
    }
  }

  long long nsteps = std::max<long long>(n_coll, 1);
  out.kinetic_temperature = m * t_sum_v2 / (static_cast<double>(nsteps) * n * kb);
  out.collective_mean = coll_sum / nsteps;
  out.collective_variance = coll_sq / nsteps - out.collective_mean * out.collective_mean;
  if (n_e > 0) {
    out.energy_mean = e_sum / n_e;
    out.energy_variance = e_sq / n_e - out.energy_mean * out.energy_mean;
  }
  out.hop_count = hops.hops;
  out.delocalized = out.max_excursion > two_pi;
  return out;
}

HopStats hop_statistics(const std::vector<double>& collective_series, double series_dt,
                        const BarrierProfile& profile, int ion_count) {
  if (ion_count < 1) throw std::invalid_argument("hop_statistics: ion_count must be >= 1");
  if (!(series_dt > 0)) throw std::invalid_argument("hop_statistics: series_dt must be > 0");
  if (profile.probe_angles.size() > 0 && profile.energies.size() != profile.probe_angles.size())
    throw std::invalid_argument("hop_statistics: malformed profile");

  HopStats st;
  if (collective_series.empty()) return st;

  // wells are one lattice spacing apart; the profile locates the barrier top
  // within the well-to-well span, which fixes the crossing threshold
  const double width = two_pi / ion_count;
  double barrier_frac = 0.5;
  if (profile.probe_angles.size() > 0) {
    double span = profile.min_angle_c - profile.min_angle_a;
    if (span > 0) barrier_frac = std::clamp((profile.max_angle - profile.min_angle_a) / span, 0.1, 0.9);
  }

  long long well = 0;
  long long hops = 0;
  const double settle = 0.25 * width;
  for (double w : collective_series) {
    long long cur = std::llround(w / width);
    if (cur != well) {
      // must actually have passed the barrier location and settled
      double rel = w - well * width;
      bool crossed = (cur > well) ? rel > barrier_frac * width : rel < -(1.0 - barrier_frac) * width;
      if (crossed && std::abs(w - cur * width) < settle) {
        hops += std::llabs(cur - well);
        well = cur;
      }
    }
  }
  st.count = hops;
  st.rate = hops / (series_dt * static_cast<double>(collective_series.size()));
  return st;
}

DelocalizationScan delocalization_scan(const RingSpec& ring, double temperature,
                                       const std::vector<double>& field_magnitudes,
                                       const LangevinConfig& base_cfg, int n_seeds,
                                       int max_threads) {
  if (field_magnitudes.empty())
    throw std::invalid_argument("delocalization_scan: empty field grid");
  if (n_seeds < 1) throw std::invalid_argument("delocalization_scan: n_seeds must be >= 1");

  DelocalizationScan scan;
  scan.fields = field_magnitudes;
  const int nf = static_cast<int>(field_magnitudes.size());
  scan.runs.resize(static_cast<size_t>(nf) * n_seeds);

  unsigned hw = max_threads > 0 ? static_cast<unsigned>(max_threads)
                                : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<int> next{0};
  const int jobs = nf * n_seeds;
  auto worker = [&]() {
    for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) {
      int fi = j / n_seeds, si = j % n_seeds;
      LangevinConfig cfg = base_cfg;
      cfg.temperature = temperature;
      cfg.seed = base_cfg.seed + static_cast<std::uint64_t>(si) * 7919u;
      InPlaneField f{0.0, -field_magnitudes[fi]};
      scan.runs[j] = simulate(ring, f, cfg);
    }
  };
  std::vector<std::thread> pool;
  unsigned nthreads = std::min<unsigned>(hw, static_cast<unsigned>(jobs));
  pool.reserve(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  scan.delocalized_fraction.resize(nf);
  for (int fi = 0; fi < nf; ++fi) {
    int cnt = 0;
    for (int si = 0; si < n_seeds; ++si)
      if (scan.runs[static_cast<size_t>(fi) * n_seeds + si].delocalized) ++cnt;
    scan.delocalized_fraction[fi] = static_cast<double>(cnt) / n_seeds;
  }

  // fields assumed ascending: delocalized at low field, pinned at high field;
  // find the 50% crossing by linear interpolation
  scan.threshold_field = 0;
  bool any_above = false;
  for (int fi = 0; fi < nf; ++fi)
    if (scan.delocalized_fraction[fi] >= 0.5) any_above = true;
  if (!any_above) return scan; // never delocalizes (e.g. T = 0): threshold 0

  if (scan.delocalized_fraction[nf - 1] >= 0.5) {
    scan.threshold_field = field_magnitudes[nf - 1];
    scan.saturated = true;
    return scan;
  }
  for (int fi = nf - 1; fi > 0; --fi) {
    double hi_frac = scan.delocalized_fraction[fi];
    double lo_frac = scan.delocalized_fraction[fi - 1];
    if (lo_frac >= 0.5 && hi_frac < 0.5) {
      double t = (lo_frac - 0.5) / std::max(lo_frac - hi_frac, 1e-12);
      scan.threshold_field =
          field_magnitudes[fi - 1] + t * (field_magnitudes[fi] - field_magnitudes[fi - 1]);
      return scan;
    }
  }
  scan.threshold_field = field_magnitudes[0];
  return scan;
}

} // namespace ringtrap
