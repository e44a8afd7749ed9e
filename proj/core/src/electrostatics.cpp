#include "ringtrap/electrostatics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "ringtrap/types.hpp"

namespace ringtrap {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

void PlanarElectrode::validate() const {
  if (!(r_outer > 0) || r_inner < 0 || !(r_inner < r_outer))
    throw std::invalid_argument("PlanarElectrode '" + name + "': radii must satisfy 0 <= r_inner < r_outer");
  if (shape == ElectrodeShape::Disc && r_inner != 0)
    throw std::invalid_argument("PlanarElectrode '" + name + "': disc must have r_inner = 0");
  double span = phi_end - phi_start;
  if (shape == ElectrodeShape::Sector) {
    if (!(span > 0) || span >= two_pi)
      throw std::invalid_argument("PlanarElectrode '" + name + "': sector span must be in (0, 2pi)");
    if (phi_start < 0 || phi_start >= two_pi)
      throw std::invalid_argument("PlanarElectrode '" + name + "': phi_start must be in [0, 2pi)");
  }
}

namespace {

struct Arc {
  double start, span; // span in (0, 2pi]
};

Arc electrode_arc(const PlanarElectrode& e) {
  if (e.shape == ElectrodeShape::Sector) return {wrap_angle(e.phi_start), e.phi_end - e.phi_start};
  return {0.0, two_pi};
}

bool arcs_overlap(const Arc& a, const Arc& b) {
  if (a.span >= two_pi - 1e-12 || b.span >= two_pi - 1e-12) return true;
  // relative start of b in a's frame
  double rel = wrap_angle(b.start - a.start);
  if (rel < a.span - 1e-12) return true;
  double rel2 = wrap_angle(a.start - b.start);
  return rel2 < b.span - 1e-12;
}

} // namespace

void TrapGeometry::validate() const {
  for (const auto& e : electrodes) e.validate();
  for (size_t i = 0; i < electrodes.size(); ++i)
    for (size_t j = i + 1; j < electrodes.size(); ++j) {
      const auto& a = electrodes[i];
      const auto& b = electrodes[j];
      bool radial = std::max(a.r_inner, b.r_inner) < std::min(a.r_outer, b.r_outer) - 1e-15;
      if (radial && arcs_overlap(electrode_arc(a), electrode_arc(b)))
        throw std::invalid_argument("TrapGeometry: electrodes '" + a.name + "' and '" + b.name +
                                    "' overlap");
    }
}

TrapGeometry TrapGeometry::paper_default() {
  auto um = [](double v) { return v * 1e-6; };
  TrapGeometry g;
  g.electrodes.push_back({"center_ground", ElectrodeShape::Disc, 0, um(64.35), 0, two_pi,
                          VoltageRole::Dc, 0.0});
  g.electrodes.push_back({"rf_inner", ElectrodeShape::Annulus, um(64.35), um(132.5), 0, two_pi,
                          VoltageRole::Rf, 0.0});
  g.electrodes.push_back({"dc_middle", ElectrodeShape::Annulus, um(132.5), um(612.5), 0, two_pi,
                          VoltageRole::Dc, 0.0});
  g.electrodes.push_back({"rf_outer", ElectrodeShape::Annulus, um(612.5), um(1112.5), 0, two_pi,
                          VoltageRole::Rf, 0.0});
  for (int k = 0; k < 8; ++k) {
    double a0 = k * pi / 4;
    g.electrodes.push_back({"comp_" + std::to_string(k), ElectrodeShape::Sector, um(1125), um(3000),
                            a0, a0 + pi / 4, VoltageRole::Dc, 0.0});
  }
  return g;
}

std::vector<const PlanarElectrode*> TrapGeometry::compensation_sectors() const {
  std::vector<const PlanarElectrode*> out;
  for (const auto& e : electrodes)
    if (e.shape == ElectrodeShape::Sector) out.push_back(&e);
  std::sort(out.begin(), out.end(),
            [](const PlanarElectrode* a, const PlanarElectrode* b) { return a->phi_start < b->phi_start; });
  return out;
}

void TrapDrive::validate() const {
  if (!(rf_amplitude > 0) || !(rf_frequency > 0))
    throw std::invalid_argument("TrapDrive: amplitude and frequency must be > 0");
}

// ---------------------------------------------------------------------------
// geometry file io: one electrode per line, comma-separated key=value pairs

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

} // namespace

TrapGeometry TrapGeometry::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("TrapGeometry::load: cannot open " + file.string());
  TrapGeometry g;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    PlanarElectrode e;
    bool saw_shape = false, saw_router = false, saw_role = false;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("geometry line " + std::to_string(line_no) +
                                    ": expected key=value, got '" + tok + "'");
      std::string key = trim(tok.substr(0, eq));
      std::string val = trim(tok.substr(eq + 1));
      if (key == "name") {
        e.name = val;
      } else if (key == "shape") {
        saw_shape = true;
        if (val == "disc") e.shape = ElectrodeShape::Disc;
        else if (val == "annulus") e.shape = ElectrodeShape::Annulus;
        else if (val == "sector") e.shape = ElectrodeShape::Sector;
        else throw std::invalid_argument("geometry line " + std::to_string(line_no) +
                                         ": unknown shape '" + val + "'");
      } else if (key == "r_inner_um") {
        e.r_inner = std::stod(val) * 1e-6;
      } else if (key == "r_outer_um") {
        saw_router = true;
        e.r_outer = std::stod(val) * 1e-6;
      } else if (key == "phi_start_deg") {
        e.phi_start = std::stod(val) * pi / 180.0;
      } else if (key == "phi_end_deg") {
        e.phi_end = std::stod(val) * pi / 180.0;
      } else if (key == "role") {
        saw_role = true;
        if (val == "rf") e.role = VoltageRole::Rf;
        else if (val == "dc") e.role = VoltageRole::Dc;
        else throw std::invalid_argument("geometry line " + std::to_string(line_no) +
                                         ": unknown role '" + val + "'");
      } else if (key == "dc_voltage_V") {
        e.dc_voltage = std::stod(val);
      } else {
        throw std::invalid_argument("geometry line " + std::to_string(line_no) + ": unknown key '" +
                                    key + "'");
      }
    }
    if (!saw_shape || !saw_router || !saw_role)
      throw std::invalid_argument("geometry line " + std::to_string(line_no) +
                                  ": shape, r_outer_um and role are required");
    g.electrodes.push_back(e);
  }
  g.validate();
  return g;
}

void TrapGeometry::save(const std::filesystem::path& file) const {
  validate();
  std::ofstream out(file);
  if (!out) throw std::runtime_error("TrapGeometry::save: cannot open " + file.string());
  out << "# planar trap geometry: radii in um, angles in deg, z=0 plane grounded elsewhere\n";
  char buf[512];
  for (const auto& e : electrodes) {
    const char* shape = e.shape == ElectrodeShape::Disc      ? "disc"
                        : e.shape == ElectrodeShape::Annulus ? "annulus"
                                                             : "sector";
    std::snprintf(buf, sizeof buf,
                  "name=%s, shape=%s, r_inner_um=%.17g, r_outer_um=%.17g, "
                  "phi_start_deg=%.17g, phi_end_deg=%.17g, role=%s, dc_voltage_V=%.17g\n",
                  e.name.c_str(), shape, e.r_inner * 1e6, e.r_outer * 1e6,
                  e.phi_start * 180.0 / pi, e.phi_end * 180.0 / pi,
                  e.role == VoltageRole::Rf ? "rf" : "dc", e.dc_voltage);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// analytic disc solution

double disc_potential(double r, double z, double a) {
  if (!(z > 0)) throw std::invalid_argument("disc_potential: z must be > 0");
  if (!(a > 0)) throw std::invalid_argument("disc_potential: a must be > 0");
  double r1 = std::hypot(r - a, z);
  double r2 = std::hypot(r + a, z);
  return (2.0 / pi) * std::asin(2.0 * a / (r1 + r2));
}

void disc_field(double r, double z, double a, double& er, double& ez) {
  if (!(z > 0)) throw std::invalid_argument("disc_field: z must be > 0");
  double r1 = std::hypot(r - a, z);
  double r2 = std::hypot(r + a, z);
  double s = r1 + r2;
  // sqrt(1 - k^2) with k = 2a/s, computed without cancellation near the plane
  double w1 = z * z / (r1 + std::abs(r - a));
  double w2 = z * z / (r2 + r + a);
  double s_m_2a = w1 + w2 + (r > a ? 2.0 * (r - a) : 0.0);
  double root = std::sqrt(s_m_2a * (s + 2.0 * a)) / s;

  double pref = (2.0 / pi) / root;
  double dk_dr = -(2.0 * a / (s * s)) * ((r - a) / r1 + (r + a) / r2);
  double dk_dz = -(2.0 * a / (s * s)) * z * (1.0 / r1 + 1.0 / r2);
  er = -pref * dk_dr;
  ez = -pref * dk_dz;
}

// ---------------------------------------------------------------------------
// adaptive polar quadrature of the gapless-plane kernel over one electrode

namespace {

// tensor Gauss-Legendre 4x4 with embedded 2x2 error estimate
constexpr double gl4_x[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                             0.8611363115940526};
constexpr double gl4_w[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                             0.3478548451374538};
constexpr double gl2_x[2] = {-0.5773502691896257, 0.5773502691896257};
constexpr double gl2_w[2] = {1.0, 1.0};

template <int COMP>
using Comp = Eigen::Array<double, COMP, 1>;

// kernel values for the potential (COMP=1) or field (COMP=3) of a unit patch
template <int COMP>
Comp<COMP> kernel(const Vec3& p, double rp, double phip) {
  double xs = rp * std::sin(phip), ys = rp * std::cos(phip);
  double dx = p.x - xs, dy = p.y - ys;
  double rho2 = dx * dx + dy * dy + p.z * p.z;
  double rho = std::sqrt(rho2);
  double inv3 = 1.0 / (rho2 * rho);
  Comp<COMP> out;
  if constexpr (COMP == 1) {
    out[0] = p.z * inv3 / two_pi;
  } else {
    double inv5 = inv3 / rho2;
    out[0] = 3.0 * p.z * dx * inv5 / two_pi;
    out[1] = 3.0 * p.z * dy * inv5 / two_pi;
    out[2] = (3.0 * p.z * p.z * inv5 - inv3) / two_pi;
  }
  return out;
}

template <int COMP>
struct Cell {
  double r0, r1, p0, p1;
  Comp<COMP> integral;
  double err;
};

template <int COMP>
void cell_eval(const Vec3& p, Cell<COMP>& c) {
  double rc = 0.5 * (c.r0 + c.r1), rh = 0.5 * (c.r1 - c.r0);
  double pc = 0.5 * (c.p0 + c.p1), ph = 0.5 * (c.p1 - c.p0);
  Comp<COMP> i4 = Comp<COMP>::Zero(), i2 = Comp<COMP>::Zero();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double r = rc + rh * gl4_x[a], phi = pc + ph * gl4_x[b];
      i4 += gl4_w[a] * gl4_w[b] * r * kernel<COMP>(p, r, phi);
    }
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double r = rc + rh * gl2_x[a], phi = pc + ph * gl2_x[b];
      i2 += gl2_w[a] * gl2_w[b] * r * kernel<COMP>(p, r, phi);
    }
  double jac = rh * ph;
  c.integral = i4 * jac;
  c.err = ((i4 - i2) * jac).abs().maxCoeff();
}

template <int COMP>
Comp<COMP> integrate_patch(const Vec3& p, const PlanarElectrode& e, const QuadratureOptions& opts,
                           double tol) {
  if (!(p.z > 0)) throw std::invalid_argument("patch quadrature: z must be > 0");
  double p0 = e.shape == ElectrodeShape::Sector ? e.phi_start : 0.0;
  double p1 = e.shape == ElectrodeShape::Sector ? e.phi_end : two_pi;

  auto cmp = [](const Cell<COMP>& a, const Cell<COMP>& b) { return a.err < b.err; };
  std::priority_queue<Cell<COMP>, std::vector<Cell<COMP>>, decltype(cmp)> heap(cmp);

  Cell<COMP> root{e.r_inner, e.r_outer, p0, p1, Comp<COMP>::Zero(), 0};
  cell_eval(p, root);
  Comp<COMP> total = root.integral;
  double total_err = root.err;
  heap.push(root);
  int cells = 1;

  while (total_err > tol && cells < opts.max_cells && !heap.empty()) {
    Cell<COMP> c = heap.top();
    heap.pop();
    total -= c.integral;
    total_err -= c.err;

    double rmid = 0.5 * (c.r0 + c.r1);
    double pmid = 0.5 * (c.p0 + c.p1);
    double radial_extent = c.r1 - c.r0;
    double arc_extent = rmid * (c.p1 - c.p0);
    Cell<COMP> a = c, b = c;
    if (radial_extent >= arc_extent) {
      a.r1 = rmid;
      b.r0 = rmid;
    } else {
      a.p1 = pmid;
      b.p0 = pmid;
    }
    cell_eval(p, a);
    cell_eval(p, b);
    total += a.integral + b.integral;
    total_err += a.err + b.err;
    heap.push(a);
    heap.push(b);
    cells += 2;
  }
  if (total_err > tol) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "patch quadrature did not converge: achieved error %.3e (tolerance %.3e, %d cells)",
                  total_err, tol, cells);
    throw std::runtime_error(msg);
  }
  return total;
}

} // namespace

double patch_potential(const Vec3& point, const PlanarElectrode& electrode,
                       const QuadratureOptions& opts) {
  electrode.validate();
  return integrate_patch<1>(point, electrode, opts, opts.abs_tol)[0];
}

Vec3 patch_field(const Vec3& point, const PlanarElectrode& electrode, const QuadratureOptions& opts) {
  electrode.validate();
  // field scales as 1/length; keep the tolerance relative to that scale
  double tol = opts.abs_tol / point.z;
  Comp<3> grad_phi = integrate_patch<3>(point, electrode, opts, tol);
  return {-grad_phi[0], -grad_phi[1], -grad_phi[2]};
}

Vec3 rf_field(const Vec3& point, const TrapGeometry& geometry, const TrapDrive& drive,
              const QuadratureOptions& opts) {
  drive.validate();
  if (!(point.z > 0)) throw std::invalid_argument("rf_field: z must be > 0");
  double r = std::hypot(point.x, point.y);
  double ux = r > 1e-300 ? point.x / r : 0.0;
  double uy = r > 1e-300 ? point.y / r : 0.0;

  Vec3 total{0, 0, 0};
  for (const auto& e : geometry.electrodes) {
    if (e.role != VoltageRole::Rf) continue;
    if (e.shape == ElectrodeShape::Sector) {
      Vec3 f = patch_field(point, e, opts);
      total.x += f.x;
      total.y += f.y;
      total.z += f.z;
    } else {
      double er = 0, ez = 0, er_i = 0, ez_i = 0;
      disc_field(r, point.z, e.r_outer, er, ez);
      if (e.r_inner > 0) {
        disc_field(r, point.z, e.r_inner, er_i, ez_i);
        er -= er_i;
        ez -= ez_i;
      }
      total.x += er * ux;
      total.y += er * uy;
      total.z += ez;
    }
  }
  total.x *= drive.rf_amplitude;
  total.y *= drive.rf_amplitude;
  total.z *= drive.rf_amplitude;
  return total;
}

double pseudopotential(const Vec3& point, const TrapGeometry& geometry, const TrapDrive& drive,
                       double mass, const QuadratureOptions& opts) {
  if (!(mass > 0)) throw std::invalid_argument("pseudopotential: mass must be > 0");
  Vec3 e = rf_field(point, geometry, drive, opts);
  double e2 = e.x * e.x + e.y * e.y + e.z * e.z;
  double q = consts.elementary_charge;
  return q * q * e2 / (4.0 * mass * drive.rf_frequency * drive.rf_frequency);
}

RingMinimum find_ring_minimum(const TrapGeometry& geometry, const TrapDrive& drive, double mass,
                              const QuadratureOptions& opts) {
  geometry.validate();
  drive.validate();

  double r_rf_max = 0;
  for (const auto& e : geometry.electrodes)
    if (e.role == VoltageRole::Rf) r_rf_max = std::max(r_rf_max, e.r_outer);
  if (r_rf_max == 0) throw std::invalid_argument("find_ring_minimum: geometry has no rf electrodes");

  auto psi = [&](double r, double z) {
    return pseudopotential({r, 0.0, z}, geometry, drive, mass, opts);
  };

  // coarse scan over the region the rf structure can form a ring in
  const double r_lo = 0.0, r_hi = 0.6 * r_rf_max;
  const double z_lo = 0.03 * r_rf_max, z_hi = 1.0 * r_rf_max;
  const int nr = 96, nz = 96;
  double best_r = 0, best_z = 0, best_v = std::numeric_limits<double>::infinity();
  int best_i = 0, best_j = 0;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nz; ++j) {
      double r = r_lo + (r_hi - r_lo) * i / (nr - 1);
      double z = z_lo + (z_hi - z_lo) * j / (nz - 1);
      double v = psi(r, z);
      if (v < best_v) {
        best_v = v;
        best_r = r;
        best_z = z;
        best_i = i;
        best_j = j;
      }
    }

  RingMinimum out;
  if (best_j == 0 || best_j == nz - 1 || best_i == nr - 1) {
    out.found = false; // no interior bracket above the plane
    return out;
  }

  // nested grid refinement, deterministic
  double hr = (r_hi - r_lo) / (nr - 1), hz = (z_hi - z_lo) / (nz - 1);
  for (int level = 0; level < 9; ++level) {
    const int k = 8;
    double nbr = best_r, nbz = best_z, nbv = best_v;
    for (int i = -k; i <= k; ++i)
      for (int j = -k; j <= k; ++j) {
        double r = best_r + hr * i / k;
        double z = best_z + hz * j / k;
        if (r < 0 || z <= 0) continue;
        double v = psi(r, z);
        if (v < nbv) {
          nbv = v;
          nbr = r;
          nbz = z;
        }
      }
    best_r = nbr;
    best_z = nbz;
    best_v = nbv;
    hr /= k * 0.5;
    hz /= k * 0.5;
  }

  out.ring_radius = best_r;
  out.height = best_z;
  out.found = true;

  Vec3 e = rf_field({best_r, 0.0, best_z}, geometry, drive, opts);
  out.residual_rf_field = e.norm();

  // secular frequencies from the finite-difference curvature of Psi
  double h = std::max(2e-4 * best_z, 1e-8);
  double p0 = psi(best_r, best_z);
  double prr = (psi(best_r + h, best_z) - 2 * p0 + psi(best_r - h, best_z)) / (h * h);
  double pzz = (psi(best_r, best_z + h) - 2 * p0 + psi(best_r, best_z - h)) / (h * h);
  double prz = (psi(best_r + h, best_z + h) - psi(best_r + h, best_z - h) -
                psi(best_r - h, best_z + h) + psi(best_r - h, best_z - h)) /
               (4 * h * h);
  Eigen::Matrix2d m2;
  m2 << prr, prz, prz, pzz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m2);
  double l0 = es.eigenvalues()[0], l1 = es.eigenvalues()[1];
  Eigen::Vector2d v0 = es.eigenvectors().col(0);
  double w0 = std::sqrt(std::max(l0, 0.0) / mass);
  double w1 = std::sqrt(std::max(l1, 0.0) / mass);
  if (std::abs(v0[0]) >= std::abs(v0[1])) { // first eigenvector is mostly radial
    out.omega_r = w0;
    out.omega_z = w1;
  } else {
    out.omega_r = w1;
    out.omega_z = w0;
  }
  return out;
}

Eigen::Matrix<double, 3, 8> compensation_response(const TrapGeometry& geometry, double z0,
                                                  const QuadratureOptions& opts) {
  if (!(z0 > 0)) throw std::invalid_argument("compensation_response: z0 must be > 0");
  auto sectors = geometry.compensation_sectors();
  if (sectors.size() != 8)
    throw std::invalid_argument("compensation_response: geometry must contain exactly 8 compensation sectors, found " +
                                std::to_string(sectors.size()));
  Eigen::Matrix<double, 3, 8> resp;
  Vec3 p{0, 0, z0};
  for (int k = 0; k < 8; ++k) {
    Vec3 f = patch_field(p, *sectors[k], opts);
    resp(0, k) = f.x;
    resp(1, k) = f.y;
    resp(2, k) = f.z;
  }
  return resp;
}

CompensationSolution solve_compensation(const Vec3& stray_field, const TrapGeometry& geometry,
                                        double z0, const QuadratureOptions& opts) {
  Eigen::Matrix<double, 3, 8> resp = compensation_response(geometry, z0, opts);

  CompensationSolution sol;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(resp);
  cod.setThreshold(1e-9);
  sol.rank = static_cast<int>(cod.rank());
  if (sol.rank < 3) {
    sol.error = "compensation response rank " + std::to_string(sol.rank) +
                " < 3: rank deficiency beyond the expected null space";
    return sol;
  }
  Eigen::Vector3d target(-stray_field.x, -stray_field.y, -stray_field.z);
  sol.voltages = cod.solve(target);
  Eigen::Vector3d achieved = resp * sol.voltages;
  sol.residual_in_plane = std::hypot(achieved[0] + stray_field.x, achieved[1] + stray_field.y);
  sol.ok = true;
  return sol;
}

} // namespace ringtrap
