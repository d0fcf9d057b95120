#include "airopt/operators.hpp"

#include <cmath>

#include "airopt/errors.hpp"

namespace airopt::ops {

ParameterVector deflect(const CostFunctional& cost, double mu, const ParameterVector& x) {
  if (!(mu > 0.0) || !(mu < 2.0)) throw ConfigError("deflect: mu must lie in (0, 2)");
  if (!cost.evaluate || !cost.subgradient) throw ConfigError("deflect: incomplete cost");

  const ParameterVector g = cost.subgradient(x);
  if (g.size() != x.size()) throw ConfigError("deflect: subgradient dimension mismatch");
  const double gnorm2 = g.squaredNorm();
  // Relative threshold: directions this small are numerically indistinguishable
  // from the zero subgradient that marks a minimizer.
  const double tau = 1e-12 * (1.0 + x.norm());
  if (std::sqrt(gnorm2) <= tau) return ParameterVector::Zero(x.size());
  return (mu * cost.evaluate(x) / gnorm2) * g;
}

ParameterVector sapsm_step(const CostFunctional& cost, double mu,
                           const ParameterVector& perturbation, const BoxSet& box,
                           const ParameterVector& x) {
  if (x.size() != box.dim) throw ConfigError("sapsm_step: state dimension mismatch");
  if (perturbation.size() != x.size())
    throw ConfigError("sapsm_step: perturbation dimension mismatch");
  return box.project(x - deflect(cost, mu, x) + perturbation);
}

SparsityPerturbation::SparsityPerturbation(PerturbationSchedule schedule, double varsigma)
    : schedule_(schedule), varsigma_(varsigma) {
  if (!(varsigma > 0.0)) throw ConfigError("SparsityPerturbation: varsigma must be > 0");
}

ParameterVector SparsityPerturbation::displacement(long i, const ParameterVector& y) {
  const double zeta = schedule_.value(i);
  const Eigen::ArrayXd abs_y = y.array().abs();
  if (!previous_abs_ || previous_abs_->size() != y.size()) previous_abs_ = abs_y;

  const Eigen::ArrayXd threshold = zeta / (*previous_abs_ + varsigma_);
  const Eigen::ArrayXd shrunk = (abs_y - threshold).max(0.0) * y.array().sign();
  previous_abs_ = abs_y;
  return (shrunk - y.array()).matrix();
}

double SparsityPerturbation::displacement_radius(int dim) const {
  return std::sqrt(static_cast<double>(dim)) / varsigma_;
}

}  // namespace airopt::ops
