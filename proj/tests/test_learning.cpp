#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "airopt/errors.hpp"
#include "airopt/learning.hpp"
#include "airopt/rng.hpp"
#include "oracles.hpp"

using airopt::ConfigError;
using airopt::ParameterVector;
using airopt::Rng;
namespace learn = airopt::learning;

namespace {
ParameterVector vec(std::initializer_list<double> v) {
  ParameterVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}
}  // namespace

TEST_CASE("hyperslab projection: interior point is fixed") {
  const learn::Hyperslab slab{vec({1.0, 0.0}), 0.0, 0.5};
  const ParameterVector h = vec({0.2, 5.0});
  CHECK(learn::project_hyperslab(h, slab) == h);
  CHECK(slab.contains(h));
}

TEST_CASE("hyperslab projection: axis-aligned hand example") {
  const learn::Hyperslab slab{vec({1.0, 0.0}), 0.0, 0.5};
  const ParameterVector h = vec({2.0, 3.0});
  const ParameterVector p = learn::project_hyperslab(h, slab);
  CHECK(p.isApprox(vec({0.5, 3.0}), 1e-15));
  // independent numeric oracle
  const ParameterVector q = oracle::numeric_slab_projection(h, slab.direction, 0.0, 0.5);
  CHECK((p - q).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("hyperslab with zero halfwidth projects onto the hyperplane") {
  const learn::Hyperslab slab{vec({0.0, 2.0}), 1.0, 0.0};
  const ParameterVector p = learn::project_hyperslab(vec({7.0, 3.0}), slab);
  CHECK(std::abs(p.dot(slab.direction) - 1.0) < 1e-12);
  CHECK(p(0) == 7.0);  // movement is along the direction only
}

TEST_CASE("hyperslab projection matches the numeric oracle on random instances") {
  Rng rng(90210);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const int dim = 2 + int(unit(rng) * 10);
    ParameterVector kappa(dim), h(dim);
    for (int m = 0; m < dim; ++m) {
      kappa(m) = g(rng);
      h(m) = 3.0 * g(rng);
    }
    if (kappa.norm() < 1e-2) continue;
    const learn::Hyperslab slab{kappa, g(rng), 0.4 * unit(rng)};
    const ParameterVector p = learn::project_hyperslab(h, slab);
    const ParameterVector q =
        oracle::numeric_slab_projection(h, kappa, slab.center, slab.halfwidth);
    CHECK((p - q).lpNorm<Eigen::Infinity>() < 1e-8);
    // idempotence and membership
    CHECK((learn::project_hyperslab(p, slab) - p).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(slab.contains(p, 1e-9));
  }
}

TEST_CASE("hyperslab projection is non-expansive") {
  Rng rng(777);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    ParameterVector kappa(5), a(5), b(5);
    for (int m = 0; m < 5; ++m) {
      kappa(m) = g(rng);
      a(m) = 2.0 * g(rng);
      b(m) = 2.0 * g(rng);
    }
    if (kappa.norm() < 1e-2) continue;
    const learn::Hyperslab slab{kappa, g(rng), 0.3};
    const double lhs =
        (learn::project_hyperslab(a, slab) - learn::project_hyperslab(b, slab)).norm();
    CHECK(lhs <= (a - b).norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("apsm cost: anchor inside the slab kills the cost everywhere") {
  const learn::Hyperslab slab{vec({1.0, 0.0}), 0.0, 0.5};
  const ParameterVector anchor = vec({0.1, -4.0});
  for (const auto& x : {vec({3.0, 0.0}), vec({-9.0, 2.0}), vec({0.0, 0.0})}) {
    const auto [value, sub] = learn::apsm_cost(x, anchor, slab);
    CHECK(value == 0.0);
    CHECK(sub.norm() == 0.0);
  }
}

TEST_CASE("apsm cost at the anchor is the squared distance") {
  Rng rng(555);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    ParameterVector kappa(4), h(4);
    for (int m = 0; m < 4; ++m) {
      kappa(m) = g(rng);
      h(m) = 2.0 * g(rng);
    }
    if (kappa.norm() < 1e-2) continue;
    const learn::Hyperslab slab{kappa, g(rng), 0.2};
    const ParameterVector p = learn::project_hyperslab(h, slab);
    const double dist = (h - p).norm();
    const auto [value, sub] = learn::apsm_cost(h, h, slab);
    CHECK(value == doctest::Approx(dist * dist).epsilon(1e-12));
    if (dist > 1e-9) {
      // mu=1 deflection from h lands exactly on the projection
      const ParameterVector moved = h - (value / sub.squaredNorm()) * sub;
      CHECK((moved - p).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }
}

TEST_CASE("apsm cost: point inside slab, anchor outside gives zero value") {
  const learn::Hyperslab slab{vec({1.0, 0.0}), 0.0, 0.5};
  const auto [value, sub] = learn::apsm_cost(vec({0.2, 1.0}), vec({4.0, 0.0}), slab);
  CHECK(value == 0.0);
  CHECK(sub.norm() == 0.0);
}

TEST_CASE("feature map is deterministic in the seed and respects sign splitting") {
  const auto f1 = learn::FeatureMap::gaussian_rff(10, 300.0, true, 42);
  const auto f2 = learn::FeatureMap::gaussian_rff(10, 300.0, true, 42);
  const auto f3 = learn::FeatureMap::gaussian_rff(10, 300.0, true, 43);
  CHECK(f1.frequencies == f2.frequencies);
  CHECK(f1.phases == f2.phases);
  CHECK(f1.frequencies != f3.frequencies);
  CHECK(f1.dim() == 10);

  const Eigen::Vector3d x(123.0, 456.0, 789.0);
  const ParameterVector phi = f1(x);
  REQUIRE(phi.size() == 10);
  for (int m = 0; m < 5; ++m) CHECK(phi(5 + m) == -phi(m));

  const auto plain = learn::FeatureMap::gaussian_rff(10, 300.0, false, 42);
  CHECK(plain.dim() == 10);
  CHECK(plain(x).size() == 10);
  CHECK_THROWS_AS(learn::FeatureMap::gaussian_rff(9, 300.0, true, 42), ConfigError);
}

TEST_CASE("feature values stay within the RFF amplitude bound") {
  const auto f = learn::FeatureMap::gaussian_rff(16, 250.0, true, 7);
  Rng rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double amp = std::sqrt(2.0 / 8.0);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Vector3d x(1000 * unit(rng), 1000 * unit(rng), 1000 * unit(rng));
    CHECK(f(x).lpNorm<Eigen::Infinity>() <= amp + 1e-12);
  }
}

TEST_CASE("ground-truth field: determinism and range") {
  const auto field1 = learn::GroundTruthField::synthesize(2026);
  const auto field2 = learn::GroundTruthField::synthesize(2026);
  Rng rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double lo = 1e9, hi = -1e9;
  for (int t = 0; t < 10000; ++t) {
    const Eigen::Vector3d x(1000 * unit(rng), 1000 * unit(rng), 1000 * unit(rng));
    const double v = field1(x);
    CHECK(v == field2(x));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= 0.0);
  CHECK(hi <= 1.0);
  CHECK(hi > lo);  // not a constant field
}

TEST_CASE("single-bump field peaks near its center") {
  const auto field = learn::GroundTruthField::synthesize(99, {1000, 1000, 1000}, 1);
  // dense-grid argmax oracle
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_v = -1.0;
  const int grid = 41;
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b)
      for (int c = 0; c < grid; ++c) {
        const Eigen::Vector3d x(1000.0 * a / (grid - 1), 1000.0 * b / (grid - 1),
                                1000.0 * c / (grid - 1));
        const double v = field(x);
        if (v > best_v) {
          best_v = v;
          best = x;
        }
      }
  CHECK(best_v == doctest::Approx(1.0).epsilon(0.02));
  // gradient-free confirmation: values decay away from the argmax
  const double off = field(best + Eigen::Vector3d(220, 190, -240));
  CHECK(off < best_v);
}

TEST_CASE("nmse arithmetic") {
  const auto features = learn::FeatureMap::gaussian_rff(8, 300.0, false, 5);
  SUBCASE("single agent, single point") {
    // model chosen so f_hat = 0.5 at the probe, truth 1.0 -> nmse 0.25
    const Eigen::Vector3d x(100, 200, 300);
    const ParameterVector phi = features(x);
    ParameterVector h = 0.5 * phi / phi.squaredNorm();
    const std::vector<learn::Sample> testset{{x, 1.0}};
    const double e = learn::evaluate_nmse({h}, testset, features);
    CHECK(e == doctest::Approx(0.25).epsilon(1e-12));
    // doubling the error quadruples the metric: f_hat = 0 gives e = 1
    const double e0 = learn::evaluate_nmse({ParameterVector::Zero(8)}, testset, features);
    CHECK(e0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e0 == doctest::Approx(4.0 * e).epsilon(1e-12));
  }
  SUBCASE("exact model reports the dB floor") {
    const Eigen::Vector3d x(10, 20, 30);
    const ParameterVector phi = features(x);
    ParameterVector h = 0.7 * phi / phi.squaredNorm();
    const std::vector<learn::Sample> testset{{x, 0.7}};
    const double e = learn::evaluate_nmse({h}, testset, features);
    CHECK(e <= 1e-25);
    CHECK(learn::nmse_db(e) == -80.0);
  }
  SUBCASE("empty testset and zero truth are rejected") {
    CHECK_THROWS_AS(learn::evaluate_nmse({ParameterVector::Zero(8)}, {}, features),
                    ConfigError);
    const std::vector<learn::Sample> bad{{Eigen::Vector3d(0, 0, 0), 0.0}};
    CHECK_THROWS_AS(learn::evaluate_nmse({ParameterVector::Zero(8)}, bad, features),
                    ConfigError);
  }
}

TEST_CASE("nmse dB conversion") {
  CHECK(learn::nmse_db(1.0) == 0.0);
  CHECK(learn::nmse_db(0.1) == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(learn::nmse_db(0.0) == -80.0);
  CHECK(learn::nmse_db(1e-30, -60.0) == -60.0);
}

TEST_CASE("csv ingestion round trip and validation") {
  std::istringstream good(
      "x1,x2,x3,value\n"
      "0,0,0,0.5\n"
      "100.5,200,300,0.25\n");
  const auto rows = learn::read_samples_csv(good);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].location == Eigen::Vector3d(100.5, 200, 300));
  CHECK(rows[1].value == 0.25);

  std::istringstream bad_header("a,b,c,d\n0,0,0,0.5\n");
  CHECK_THROWS_AS(learn::read_samples_csv(bad_header), ConfigError);
  std::istringstream bad_value("x1,x2,x3,value\n0,0,0,1.5\n");
  CHECK_THROWS_AS(learn::read_samples_csv(bad_value), ConfigError);
  std::istringstream bad_columns("x1,x2,x3,value\n0,0,0\n");
  CHECK_THROWS_AS(learn::read_samples_csv(bad_columns), ConfigError);
  std::istringstream empty("x1,x2,x3,value\n");
  CHECK_THROWS_AS(learn::read_samples_csv(empty), ConfigError);
}

TEST_CASE("csv dataset sampling and testset filtering") {
  std::vector<learn::Sample> rows;
  for (int i = 0; i < 50; ++i)
    rows.push_back({Eigen::Vector3d(i, 2.0 * i, 3.0 * i), (i % 5 == 0) ? 0.01 : 0.5});
  learn::CsvDataset ds(rows);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto s = ds.sample(rng);
    CHECK(s.location(1) == doctest::Approx(2.0 * s.location(0)));
  }
  const auto testset = ds.testset(30, 0.05, rng);
  CHECK(int(testset.size()) == 30);
  for (const auto& s : testset) CHECK(std::abs(s.value) >= 0.05);
}

TEST_CASE("synthetic dataset testset respects the magnitude filter") {
  learn::SyntheticDataset ds(learn::GroundTruthField::synthesize(31));
  Rng rng(4);
  const auto testset = ds.testset(100, 0.05, rng);
  REQUIRE(int(testset.size()) == 100);
  for (const auto& s : testset) {
    CHECK(std::abs(s.value) >= 0.05);
    CHECK(s.value == doctest::Approx(ds.field()(s.location)).epsilon(1e-15));
  }
}

TEST_CASE("testset export format") {
  const auto features = learn::FeatureMap::gaussian_rff(6, 300.0, false, 11);
  const std::vector<learn::Sample> testset{{Eigen::Vector3d(1, 2, 3), 0.5},
                                           {Eigen::Vector3d(4, 5, 6), 0.25}};
  std::vector<ParameterVector> models{ParameterVector::Zero(6), ParameterVector::Zero(6)};
  std::ostringstream out;
  learn::write_testset_csv(out, testset, models, features);
  const std::string text = out.str();
  CHECK(text.rfind("x1,x2,x3,f,f_hat_mean\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("subgradient norm along trajectories is bounded by the slab distance") {
  // the subgradient of the anchored cost at psi has norm dist(psi, Q)
  Rng rng(808);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 60; ++t) {
    ParameterVector kappa(6), psi(6);
    for (int m = 0; m < 6; ++m) {
      kappa(m) = g(rng);
      psi(m) = g(rng);
    }
    if (kappa.norm() < 1e-2) continue;
    const learn::Hyperslab slab{kappa, g(rng), 0.25};
    const auto [value, sub] = learn::apsm_cost(psi, psi, slab);
    const double dist = (psi - learn::project_hyperslab(psi, slab)).norm();
    CHECK(sub.norm() == doctest::Approx(dist).epsilon(1e-10));
  }
}
