#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "airopt/errors.hpp"
#include "airopt/learning.hpp"
#include "airopt/operators.hpp"
#include "airopt/rng.hpp"
#include "oracles.hpp"

using airopt::BoxSet;
using airopt::ConfigError;
using airopt::ParameterVector;
using airopt::PerturbationSchedule;
using airopt::Rng;
namespace ops = airopt::ops;
namespace learn = airopt::learning;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
  ParameterVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

// Distance-times-constant cost for a half space {x : x(0) <= b}: value is
// c * dist(x, H), subgradient c * e_0 outside.
ops::CostFunctional halfspace_cost(double b, double c) {
  ops::CostFunctional cost;
  cost.evaluate = [b, c](const ParameterVector& x) { return c * std::max(0.0, x(0) - b); };
  cost.subgradient = [b, c](const ParameterVector& x) {
    ParameterVector g = ParameterVector::Zero(x.size());
    if (x(0) > b) g(0) = c;
    return g;
  };
  cost.zero_set_projection = [b](const ParameterVector& x) {
    ParameterVector p = x;
    p(0) = std::min(p(0), b);
    return p;
  };
  return cost;
}

ops::CostFunctional slab_cost_at(const learn::Hyperslab& slab, const ParameterVector& anchor) {
  ops::CostFunctional cost;
  cost.evaluate = [slab, anchor](const ParameterVector& x) {
    return learn::apsm_cost(x, anchor, slab).first;
  };
  cost.subgradient = [slab, anchor](const ParameterVector& x) {
    return learn::apsm_cost(x, anchor, slab).second;
  };
  cost.zero_set_projection = [slab](const ParameterVector& x) {
    return learn::project_hyperslab(x, slab);
  };
  return cost;
}

}  // namespace

TEST_CASE("deflect returns zero where the cost vanishes") {
  const auto cost = halfspace_cost(1.0, 2.0);
  const ParameterVector x = vec({0.5, 3.0});
  CHECK(cost.evaluate(x) == 0.0);
  CHECK(ops::deflect(cost, 0.7, x).norm() == 0.0);
}

TEST_CASE("deflect with mu=1 and distance-equal weight lands on the boundary") {
  // cost = c * dist(x, H) with c chosen equal to the distance: the mu=1
  // deflected point must coincide with the projection onto H.
  const double b = 1.0;
  const ParameterVector x = vec({2.5, -0.7});
  const double dist = x(0) - b;
  const auto cost = halfspace_cost(b, dist);
  const ParameterVector moved = x - ops::deflect(cost, 1.0, x);
  CHECK(moved(0) == doctest::Approx(b).epsilon(1e-12));
  CHECK(moved(1) == x(1));
}

TEST_CASE("deflect with mu=2 reflects: distance to the projection is preserved") {
  Rng rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    ParameterVector kappa(4), h(4);
    for (int m = 0; m < 4; ++m) {
      kappa(m) = g(rng);
      h(m) = g(rng);
    }
    if (kappa.norm() < 0.3) continue;
    const learn::Hyperslab slab{kappa, g(rng), 0.2};
    if (learn::apsm_cost(h, h, slab).first == 0.0) continue;
    const auto cost = slab_cost_at(slab, h);
    // mu = 2 - eps in the open interval; at the limit the step is the
    // reflection through P(h). Use the identity ||x - Phi - p|| = ||x - p||.
    const double mu = 2.0 - 1e-9;
    const ParameterVector p = learn::project_hyperslab(h, slab);
    const ParameterVector moved = h - ops::deflect(cost, mu, h);
    CHECK((moved - p).norm() == doctest::Approx((h - p).norm()).epsilon(1e-6));
  }
}

TEST_CASE("deflect validates mu") {
  const auto cost = halfspace_cost(0.0, 1.0);
  const ParameterVector x = vec({1.0});
  CHECK_THROWS_AS(ops::deflect(cost, 0.0, x), ConfigError);
  CHECK_THROWS_AS(ops::deflect(cost, 2.0, x), ConfigError);
}

TEST_CASE("deflect satisfies the descent inequality toward zero-set points") {
  Rng rng(4711);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int dim = 3 + int(unit(rng) * 5);
    ParameterVector kappa(dim), x(dim);
    for (int m = 0; m < dim; ++m) {
      kappa(m) = g(rng);
      x(m) = 2.0 * g(rng);
    }
    if (kappa.norm() < 0.3) continue;
    const learn::Hyperslab slab{kappa, g(rng), 0.15};
    const auto value = learn::apsm_cost(x, x, slab);
    if (value.first <= 0.0) continue;
    const double mu = 0.05 + 1.9 * unit(rng);
    const auto cost = slab_cost_at(slab, x);
    const ParameterVector phi = ops::deflect(cost, mu, x);
    // any zero-set point q: use the slab projection of a random probe
    ParameterVector probe(dim);
    for (int m = 0; m < dim; ++m) probe(m) = 3.0 * g(rng);
    const ParameterVector q = learn::project_hyperslab(probe, slab);
    const double lhs = (x - phi - q).squaredNorm();
    const double gnorm2 = value.second.squaredNorm();
    const double rhs =
        (x - q).squaredNorm() - mu * (2.0 - mu) * value.first * value.first / gnorm2;
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("sapsm step reduces to box projection when the cost vanishes") {
  const auto cost = halfspace_cost(10.0, 1.0);
  const BoxSet box(0.0, 1.0, 2);
  const ParameterVector psi = vec({1.7, -0.3});
  const ParameterVector zero = ParameterVector::Zero(2);
  CHECK(ops::sapsm_step(cost, 0.5, zero, box, psi).isApprox(vec({1.0, 0.0}), 0.0));
}

TEST_CASE("sapsm step with mu=1 equals slab projection then box clamp") {
  Rng rng(88);
  std::normal_distribution<double> g(0.0, 1.0);
  const BoxSet box(-1.0, 1.0, 5);
  for (int t = 0; t < 100; ++t) {
    ParameterVector kappa(5), psi(5);
    for (int m = 0; m < 5; ++m) {
      kappa(m) = g(rng);
      psi(m) = 0.9 * g(rng);
    }
    if (kappa.norm() < 0.3) continue;
    const learn::Hyperslab slab{kappa, g(rng), 0.25};
    const auto cost = slab_cost_at(slab, psi);
    const ParameterVector zero = ParameterVector::Zero(5);
    const ParameterVector got = ops::sapsm_step(cost, 1.0, zero, box, psi);
    const ParameterVector want = box.project(learn::project_hyperslab(psi, slab));
    CHECK((got - want).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("sapsm step output stays in the box under large perturbations") {
  const auto cost = halfspace_cost(10.0, 1.0);
  const BoxSet box(0.0, 1.0, 3);
  const ParameterVector psi = vec({0.5, 0.5, 0.5});
  const ParameterVector pert = vec({100.0, -100.0, 3.0});
  const ParameterVector out = ops::sapsm_step(cost, 0.5, pert, box, psi);
  CHECK(box.contains(out));
}

TEST_CASE("sparsity perturbation: zero schedule emits zero displacement") {
  ops::SparsityPerturbation gen(PerturbationSchedule(0.0, 100), 0.01);
  const ParameterVector y = vec({0.4, -0.2, 0.0});
  CHECK(gen.displacement(0, y).norm() == 0.0);
  CHECK(gen.displacement(5, y).norm() == 0.0);
}

TEST_CASE("sparsity perturbation: scalar soft-threshold arithmetic") {
  // y = 0.5 with previous reference 0.5, zeta = 0.1, varsigma = 0.1:
  // threshold = 0.1 / 0.6 = 1/6, displacement = -1/6.
  ops::SparsityPerturbation gen(PerturbationSchedule(0.1, 1000000), 0.1);
  const ParameterVector y = vec({0.5});
  gen.displacement(0, y);  // first call pins the reference to |y| = 0.5
  const ParameterVector d = gen.displacement(1, y);
  CHECK(d(0) == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("sparsity perturbation zeroes coordinates inside the dead zone") {
  ops::SparsityPerturbation gen(PerturbationSchedule(0.1, 1000000), 0.1);
  // reference |y| = 0.01 -> threshold 0.1/(0.01+0.1) = 0.909...; y well inside
  const ParameterVector y = vec({0.01, -0.008});
  const ParameterVector d = gen.displacement(0, y);
  CHECK(d(0) == -y(0));
  CHECK(d(1) == -y(1));
}

TEST_CASE("sparsity perturbation norm bound zeta * sqrt(M) / varsigma") {
  const double varsigma = 0.01;
  const PerturbationSchedule sched(1e-3, 10);
  ops::SparsityPerturbation gen(sched, varsigma);
  Rng rng(3141);
  std::normal_distribution<double> g(0.0, 0.3);
  const int dim = 24;
  CHECK(gen.displacement_radius(dim) == doctest::Approx(std::sqrt(24.0) / varsigma));
  for (long i = 0; i < 200; ++i) {
    ParameterVector y(dim);
    for (int m = 0; m < dim; ++m) y(m) = g(rng);
    const ParameterVector d = gen.displacement(i, y);
    CHECK(d.norm() <= sched.value(i) * gen.displacement_radius(dim) + 1e-15);
  }
}

TEST_CASE("composed sapsm trajectory is quasi-Fejer within the analytic budget") {
  //

  // Stationary hyperslabs all containing x*; trajectory distance to x* may
  // grow only by the perturbation slack 2 zeta r D + zeta^2 r^2 per step.
  Rng rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int dim = 12;
  const BoxSet box(0.0, 1.0, dim);
  ParameterVector xstar(dim);
  for (int m = 0; m < dim; ++m) xstar(m) = 0.2 + 0.6 * unit(rng);

  std::vector<learn::Hyperslab> slabs;
  for (int s = 0; s < 8; ++s) {
    ParameterVector kappa(dim);
    for (int m = 0; m < dim; ++m) kappa(m) = g(rng);
    slabs.push_back(learn::Hyperslab{kappa, kappa.dot(xstar), 0.05});
  }

  const double varsigma = 0.01;
  const PerturbationSchedule sched(1e-4, 10);
  ops::SparsityPerturbation gen(sched, varsigma);
  const double r = gen.displacement_radius(dim);
  const double D = box.diameter();

  ParameterVector x(dim);
  for (int m = 0; m < dim; ++m) x(m) = unit(rng);

  double cumulative_slack = 0.0, budget = 0.0;
  double dist2 = (x - xstar).squaredNorm();
  for (long i = 0; i < 400; ++i) {
    const auto& slab = slabs[size_t(i) % slabs.size()];
    const auto cost = slab_cost_at(slab, x);
    const ParameterVector y = x - ops::deflect(cost, 0.5, x);
    const ParameterVector pert = gen.displacement(i, y);
    x = box.project(y + pert);
    const double next = (x - xstar).squaredNorm();
    cumulative_slack += std::max(0.0, next - dist2);
    const double zeta = sched.value(i);
    budget += 2.0 * zeta * r * D + zeta * zeta * r * r;
    dist2 = next;
  }
  CHECK(cumulative_slack <= budget + 1e-12);
}

TEST_CASE("cost functional subgradient inequality on sampled pairs") {
  Rng rng(1618);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 120; ++t) {
    ParameterVector kappa(6), x(6), y(6), anchor(6);
    for (int m = 0; m < 6; ++m) {
      kappa(m) = g(rng);
      x(m) = 2.0 * g(rng);
      y(m) = 2.0 * g(rng);
      anchor(m) = 2.0 * g(rng);
    }
    if (kappa.norm() < 0.3) continue;
    const learn::Hyperslab slab{kappa, g(rng), 0.3};
    const auto fx = learn::apsm_cost(x, anchor, slab);
    const auto fy = learn::apsm_cost(y, anchor, slab);
    CHECK(fy.first >= fx.first + fx.second.dot(y - x) - 1e-9);
  }
}
