#ifndef AIROPT_CORE_HPP
#define AIROPT_CORE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "airopt/errors.hpp"

namespace airopt {

// Agent state / model coefficients. Finiteness is enforced by the harness at
// every iteration rather than on each arithmetic op.
using ParameterVector = Eigen::VectorXd;

// Closed box [lower, upper]^dim, the constraint set all iterates are kept in.
struct BoxSet {
  double lower = 0.0;
  double upper = 1.0;
  int dim = 1;

  BoxSet() = default;
  BoxSet(double lower, double upper, int dim) : lower(lower), upper(upper), dim(dim) {
    if (!(lower < upper)) throw ConfigError("BoxSet: lower must be < upper");
    if (dim < 1) throw ConfigError("BoxSet: dim must be >= 1");
  }

  double side() const { return upper - lower; }
  double diameter() const { return std::sqrt(static_cast<double>(dim)) * side(); }

  bool contains(const ParameterVector& x, double tol = 0.0) const {
    if (x.size() != dim) return false;
    return (x.array() >= lower - tol).all() && (x.array() <= upper + tol).all();
  }

  ParameterVector project(const ParameterVector& x) const {
    if (x.size() != dim) throw ConfigError("BoxSet::project: dimension mismatch");
    return x.array().max(lower).min(upper).matrix();
  }
};

inline ParameterVector project_box(const ParameterVector& x, const BoxSet& box) {
  return box.project(x);
}

// Combination step size beta_i. Two decay laws share the exponent constraint
// alpha in (0.5, 1]: the plain power law (i+1)^-alpha and a staircase variant
// (floor(i/block)+1)^-alpha that holds beta constant over blocks.
struct StepSchedule {
  enum class Kind { power_law, staircase_power_law };

  Kind kind = Kind::power_law;
  double alpha = 0.51;
  long block = 1;

  static StepSchedule power_law(double alpha) {
    check_alpha(alpha);
    return StepSchedule{Kind::power_law, alpha, 1};
  }

  static StepSchedule staircase(long block, double alpha) {
    check_alpha(alpha);
    if (block < 1) throw ConfigError("StepSchedule: block must be >= 1");
    return StepSchedule{Kind::staircase_power_law, alpha, block};
  }

  double value(long i) const {
    if (i < 0) throw ConfigError("StepSchedule::value: iteration must be >= 0");
    const double n = (kind == Kind::power_law) ? static_cast<double>(i + 1)
                                               : static_cast<double>(i / block + 1);
    return std::pow(n, -alpha);
  }

 private:
  static void check_alpha(double alpha) {
    if (!(alpha > 0.5) || !(alpha <= 1.0))
      throw ConfigError("StepSchedule: alpha must lie in (0.5, 1]");
  }
};

// Perturbation magnitude zeta_i = scale0 * (floor(i/block)+1)^-exponent.
// exponent = 1 reproduces the reference experiment; exponents > 1 make the
// sequence summable, which the convergence guarantees formally require.
struct PerturbationSchedule {
  double scale0 = 1e-6;
  long block = 100;
  double exponent = 1.0;

  PerturbationSchedule() = default;
  PerturbationSchedule(double scale0, long block, double exponent = 1.0)
      : scale0(scale0), block(block), exponent(exponent) {
    if (!(scale0 >= 0.0)) throw ConfigError("PerturbationSchedule: scale0 must be >= 0");
    if (block < 1) throw ConfigError("PerturbationSchedule: block must be >= 1");
    if (!(exponent >= 1.0)) throw ConfigError("PerturbationSchedule: exponent must be >= 1");
  }

  double value(long i) const {
    if (i < 0) throw ConfigError("PerturbationSchedule::value: iteration must be >= 0");
    return scale0 * std::pow(static_cast<double>(i / block + 1), -exponent);
  }
};

}  // namespace airopt

#endif
