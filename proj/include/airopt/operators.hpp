#ifndef AIROPT_OPERATORS_HPP
#define AIROPT_OPERATORS_HPP

#include <functional>
#include <optional>

#include "airopt/core.hpp"

namespace airopt::ops {

// Convex cost with a subgradient oracle. zero_set_projection, when present,
// projects onto {x : evaluate(x) = 0} and enables closed-form checks.
struct CostFunctional {
  std::function<double(const ParameterVector&)> evaluate;
  std::function<ParameterVector(const ParameterVector&)> subgradient;
  std::function<ParameterVector(const ParameterVector&)> zero_set_projection;
};

// One step of an iteration-indexed quasi-Fejer monotone process. slack_budget
// bounds the admissible growth of the squared distance to any fixed target at
// iteration i; zero means the step is exactly Fejer monotone.
class QfmsOperator {
 public:
  virtual ~QfmsOperator() = default;
  virtual ParameterVector apply(long i, const ParameterVector& x) = 0;
  virtual double slack_budget(long /*i*/) const { return 0.0; }
};

// Subgradient deflection Phi(x) = mu * cost(x) / |g|^2 * g with g a
// subgradient at x, or zero when the subgradient (effectively) vanishes.
ParameterVector deflect(const CostFunctional& cost, double mu, const ParameterVector& x);

// Superiorized projected subgradient update: project x - Phi(x) + perturbation
// onto the box. The perturbation is the already-scaled displacement zeta*z.
ParameterVector sapsm_step(const CostFunctional& cost, double mu,
                           const ParameterVector& perturbation, const BoxSet& box,
                           const ParameterVector& x);

// Reweighted soft-threshold displacement W(y) - y. Thresholds adapt per
// coordinate to the previous deflected iterate: small coordinates get squeezed
// harder, which steers the iterate toward sparse solutions while the decaying
// zeta keeps the displacement square-summable in total.
class SparsityPerturbation {
 public:
  SparsityPerturbation(PerturbationSchedule schedule, double varsigma);

  // Displacement for iteration i given the current deflected iterate y.
  // Records |y| as the reference for the next call; the first call uses the
  // current y as its own reference.
  ParameterVector displacement(long i, const ParameterVector& y);

  // Upper bound on |displacement| / zeta_i, i.e. the radius of the z ball.
  double displacement_radius(int dim) const;
  const PerturbationSchedule& schedule() const { return schedule_; }

  void reset() { previous_abs_.reset(); }

 private:
  PerturbationSchedule schedule_;
  double varsigma_;
  std::optional<Eigen::ArrayXd> previous_abs_;
};

}  // namespace airopt::ops

#endif
