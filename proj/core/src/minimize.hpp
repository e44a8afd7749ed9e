#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <random>

namespace ringtrap::detail {

// objective callback: returns f(x), fills *grad when non-null
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct MinimizeOptions {
  double grad_tol = 1e-10;     // in the objective's own units
  int max_iterations = 2000;
  double first_step = 0.05;    // length of the first trial step
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0;
  double grad_norm = 0;
  bool converged = false;
  int iterations = 0;
};

// Dense BFGS with Armijo backtracking; falls back to a steepest-descent
// backtracking step (and resets the curvature estimate) when the
// quasi-Newton line search fails.
MinimizeResult bfgs(const Objective& f, Eigen::VectorXd x0, const MinimizeOptions& opts);

// Order-preserving chart for ion angles: theta_i = base + 2pi * prefix_i,
// prefix_i = sum_{k<i} softmax(w)_k. Gaps stay positive and sum to 2pi, so
// the cyclic ion order can never change during optimization.
struct GapChart {
  // w (size n) -> thetas (size n), thetas[0] == base
  static Eigen::VectorXd thetas(double base, const Eigen::VectorXd& w);
  // pull back dV/dtheta to dV/dw; optionally also dV/dbase
  static Eigen::VectorXd pullback(const Eigen::VectorXd& w, const Eigen::VectorXd& grad_theta,
                                  double* grad_base = nullptr);
  // inverse-ish: log of the normalized gaps of a cyclically sorted state
  static Eigen::VectorXd weights(const Eigen::VectorXd& sorted_thetas);
};

// small deterministic RNG used for multistart jitter and the thermostat
struct Rng {
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform() { // [0, 1)
    return (eng() >> 11) * (1.0 / 9007199254740992.0);
  }
  double normal() { // Box-Muller, cached pair
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 1e-300);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare = r * std::sin(a);
    have_spare = true;
    return r * std::cos(a);
  }
  std::mt19937_64 eng;
  double spare = 0;
  bool have_spare = false;
};

} // namespace ringtrap::detail
