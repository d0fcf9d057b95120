#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "airopt/consensus.hpp"
#include "airopt/errors.hpp"
#include "airopt/learning.hpp"
#include "airopt/network.hpp"
#include "airopt/operators.hpp"
#include "airopt/rng.hpp"

using airopt::BoxSet;
using airopt::ConfigError;
using airopt::ParameterVector;
using airopt::Rng;
namespace consensus = airopt::consensus;
namespace net = airopt::net;
namespace learn = airopt::learning;
namespace ops = airopt::ops;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
  ParameterVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

std::vector<ParameterVector> random_states(int n, int dim, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ParameterVector> s(n);
  for (auto& x : s) {
    x.resize(dim);
    for (int m = 0; m < dim; ++m) x(m) = unit(rng);
  }
  return s;
}

net::NetworkSnapshot full_duplex_snapshot(int n, double power, std::vector<Eigen::Vector3d> pos,
                                          Rng& rng) {
  net::GeometricNetworkModel model;
  model.transmit_powers.assign(n, power);
  model.duplex = net::GeometricNetworkModel::Duplex::full;
  return net::sample_snapshot(model, pos, rng);
}

double row_sum(const consensus::CommunicationRealization& real, int r) {
  double s = 0.0;
  for (const auto& [src, w] : real.rows[r]) s += w;
  return s;
}

double disagreement(const std::vector<ParameterVector>& s) {
  double d = 0.0;
  for (size_t p = 0; p < s.size(); ++p)
    for (size_t q = p + 1; q < s.size(); ++q) d = std::max(d, (s[p] - s[q]).norm());
  return d;
}

}  // namespace

TEST_CASE("CEN is exact averaging") {
  Rng rng(5);
  auto lambda = random_states(4, 3, rng);
  ParameterVector mean = ParameterVector::Zero(3);
  for (const auto& l : lambda) mean += l / 4.0;
  const double beta = 0.4;
  net::NetworkSnapshot snap;  // CEN ignores the topology
  snap.n_agents = 4;
  const auto psi = consensus::mix(consensus::Scheme::cen, snap, lambda, beta, rng);
  for (int k = 0; k < 4; ++k)
    CHECK((psi[k] - ((1 - beta) * lambda[k] + beta * mean)).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("NOC leaves states untouched") {
  Rng rng(6);
  auto lambda = random_states(5, 4, rng);
  net::NetworkSnapshot snap;
  snap.n_agents = 5;
  const auto psi = consensus::mix(consensus::Scheme::noc, snap, lambda, 0.77, rng);
  for (int k = 0; k < 5; ++k) CHECK((psi[k] - lambda[k]).norm() == 0.0);
}

TEST_CASE("consensus state is a fixed point of every channel-free scheme") {
  Rng rng(7);
  const ParameterVector v = vec({0.2, 0.9, 0.5});
  std::vector<ParameterVector> lambda(6, v);
  std::vector<Eigen::Vector3d> pos;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 6; ++k)
    pos.push_back({300 * unit(rng), 300 * unit(rng), 300 * unit(rng)});
  const auto snap = full_duplex_snapshot(6, 2000.0, pos, rng);
  for (auto scheme :
       {consensus::Scheme::cen, consensus::Scheme::noc, consensus::Scheme::bdc}) {
    const auto psi = consensus::mix(scheme, snap, lambda, 0.6, rng);
    for (const auto& p : psi) CHECK((p - v).lpNorm<Eigen::Infinity>() < 1e-15);
  }
}

TEST_CASE("mix with beta = 0 is the identity for every scheme") {
  Rng rng(8);
  auto lambda = random_states(5, 3, rng);
  std::vector<Eigen::Vector3d> pos;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 5; ++k)
    pos.push_back({400 * unit(rng), 400 * unit(rng), 400 * unit(rng)});
  const auto snap = full_duplex_snapshot(5, 2000.0, pos, rng);
  for (auto scheme :
       {consensus::Scheme::cen, consensus::Scheme::noc, consensus::Scheme::bdc}) {
    const auto psi = consensus::mix(scheme, snap, lambda, 0.0, rng);
    for (int k = 0; k < 5; ++k) CHECK((psi[k] - lambda[k]).norm() == 0.0);
  }
}

TEST_CASE("mix rejects the channel-level scheme") {
  Rng rng(9);
  auto lambda = random_states(2, 2, rng);
  net::NetworkSnapshot snap;
  snap.n_agents = 2;
  CHECK_THROWS_AS(consensus::mix(consensus::Scheme::otac, snap, lambda, 0.5, rng), ConfigError);
}

TEST_CASE("outage law is calibrated to 20% at the reference distance") {
  const consensus::OutageModel outage;
  CHECK(outage.probability(500.0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(outage.probability(0.0) == 0.0);
  // frozen oracle value: 1 - exp(-(250/500)^2 ln(1/0.8)) = 0.05425839099682417
  CHECK(outage.probability(250.0) == doctest::Approx(0.05425839099682417).epsilon(1e-12));
  // monotone in distance, saturates toward 1
  double prev = 0.0;
  for (double d = 0.0; d <= 5000.0; d += 100.0) {
    const double p = outage.probability(d);
    CHECK(p >= prev);
    CHECK(p <= 1.0);
    prev = p;
  }
}

TEST_CASE("BDC with all edges in outage degenerates to NOC") {
  Rng rng(10);
  std::vector<Eigen::Vector3d> pos{{0, 0, 0}, {800, 0, 0}, {0, 800, 0}};
  const auto snap = full_duplex_snapshot(3, 1000.0, pos, rng);
  consensus::OutageModel always;
  always.ref_distance = 1e-3;             // any realistic link saturates to p = 1
  always.ref_probability = 1.0 - 1e-12;
  const auto real = consensus::bdc_realize(snap, always, rng);
  for (int r = 0; r < 3; ++r) {
    REQUIRE(real.rows[r].size() == 1);
    CHECK(real.rows[r][0].first == r);
    CHECK(real.rows[r][0].second == 1.0);
  }
}

TEST_CASE("BDC with no outage averages uniformly over self and in-neighbors") {
  Rng rng(11);
  std::vector<Eigen::Vector3d> pos{{0, 0, 0}, {100, 0, 0}, {0, 100, 0}};
  const auto snap = full_duplex_snapshot(3, 1000.0, pos, rng);
  consensus::OutageModel never;
  never.ref_probability = 1e-300;  // 1 - p rounds to 1, so outage is exactly 0
  const auto real = consensus::bdc_realize(snap, never, rng);
  for (int r = 0; r < 3; ++r) {
    CHECK(real.rows[r].size() == 3);  // self + two neighbors
    for (const auto& [src, w] : real.rows[r]) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
}

TEST_CASE("realized rows are nonnegative and sum to one exactly") {
  Rng rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 60; ++t) {
    const int n = 2 + int(unit(rng) * 7);
    std::vector<Eigen::Vector3d> pos;
    for (int k = 0; k < n; ++k)
      pos.push_back({1000 * unit(rng), 1000 * unit(rng), 1000 * unit(rng)});
    net::GeometricNetworkModel model;
    model.transmit_powers.assign(n, 50.0 + 5000.0 * unit(rng));
    model.duplex = (t % 2 == 0) ? net::GeometricNetworkModel::Duplex::full
                                : net::GeometricNetworkModel::Duplex::half;
    const auto snap = net::sample_snapshot(model, pos, rng);

    const auto cen = consensus::cen_realize(n);
    const auto noc = consensus::noc_realize(n);
    const auto bdc = consensus::bdc_realize(snap, consensus::OutageModel{}, rng);
    for (const auto* real : {&cen, &noc, &bdc}) {
      for (int r = 0; r < n; ++r) {
        CHECK(std::abs(row_sum(*real, r) - 1.0) <= 1e-12);
        for (const auto& [src, w] : real->rows[r]) {
          CHECK(w >= 0.0);
          CHECK(src >= 0);
          CHECK(src < n);
        }
      }
    }
  }
}

TEST_CASE("BDC noise is conditionally centered: zero by construction") {
  Rng rng(13);
  std::vector<Eigen::Vector3d> pos{{0, 0, 0}, {120, 0, 0}};
  const auto snap = full_duplex_snapshot(2, 1000.0, pos, rng);
  const auto real = consensus::bdc_realize(snap, consensus::OutageModel{}, rng);
  CHECK(real.noise.empty());  // exact packets: no additive noise term
}

TEST_CASE("CEN disagreement is non-increasing with a common stationary slab") {
  Rng rng(2718);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 6, dim = 8;
  const BoxSet box(0.0, 1.0, dim);

  ParameterVector kappa(dim);
  for (int m = 0; m < dim; ++m) kappa(m) = g(rng);
  const learn::Hyperslab slab{kappa, 0.3, 0.1};

  auto psi = random_states(n, dim, rng);
  net::NetworkSnapshot snap;
  snap.n_agents = n;
  airopt::StepSchedule step = airopt::StepSchedule::staircase(10, 0.51);

  double prev = disagreement(psi);
  for (long i = 0; i < 120; ++i) {
    std::vector<ParameterVector> lambda(n);
    for (int k = 0; k < n; ++k) {
      ops::CostFunctional cost;
      const ParameterVector anchor = psi[k];
      cost.evaluate = [&slab, anchor](const ParameterVector& x) {
        return learn::apsm_cost(x, anchor, slab).first;
      };
      cost.subgradient = [&slab, anchor](const ParameterVector& x) {
        return learn::apsm_cost(x, anchor, slab).second;
      };
      lambda[k] = ops::sapsm_step(cost, 0.5, ParameterVector::Zero(dim), box, psi[k]);
    }
    psi = consensus::mix(consensus::Scheme::cen, snap, lambda, step.value(i), rng);
    const double cur = disagreement(psi);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}
