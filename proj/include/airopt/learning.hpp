#ifndef AIROPT_LEARNING_HPP
#define AIROPT_LEARNING_HPP

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "airopt/core.hpp"
#include "airopt/operators.hpp"
#include "airopt/rng.hpp"

namespace airopt::learning {

// Random Fourier feature map for a Gaussian kernel, shared by every agent.
// With sign_split the base features are duplicated with flipped sign so that
// nonnegative coefficients in [0,1] can realize signed weights; total_dim
// counts the coordinates after duplication.
struct FeatureMap {
  Eigen::MatrixXd frequencies;  // 3 x base_dim
  Eigen::VectorXd phases;       // base_dim
  bool sign_split = false;

  static FeatureMap gaussian_rff(int total_dim, double bandwidth, bool sign_split,
                                 std::uint64_t seed);

  int dim() const {
    return static_cast<int>(phases.size()) * (sign_split ? 2 : 1);
  }
  ParameterVector operator()(const Eigen::Vector3d& x) const;
};

// Closed slab {h : |<direction, h> - center| <= halfwidth}, the confidence
// region one noisy measurement induces on the coefficient vector.
struct Hyperslab {
  ParameterVector direction;
  double center = 0.0;
  double halfwidth = 0.0;

  bool contains(const ParameterVector& h, double tol = 0.0) const;
};

ParameterVector project_hyperslab(const ParameterVector& h, const Hyperslab& slab);

// Scaled distance cost Theta(x) = dist(x, slab) * dist(anchor, slab) with a
// subgradient at x. The anchor factor freezes the scale at the current state
// so the deflection step length matches the plain projection step there.
std::pair<double, ParameterVector> apsm_cost(const ParameterVector& x,
                                             const ParameterVector& anchor,
                                             const Hyperslab& slab);

ops::CostFunctional make_slab_cost(Hyperslab slab, ParameterVector anchor);

// Smooth synthetic ground truth on the box domain: a mixture of Gaussian
// bumps, affinely normalized into [0, 1] against a fixed probe grid.
class GroundTruthField {
 public:
  static GroundTruthField synthesize(std::uint64_t seed,
                                     const std::array<double, 3>& domain = {1000.0, 1000.0,
                                                                            1000.0},
                                     int n_bumps = 3);

  double operator()(const Eigen::Vector3d& x) const;
  const std::array<double, 3>& domain() const { return domain_; }

 private:
  std::array<double, 3> domain_{};
  std::vector<Eigen::Vector3d> centers_;
  std::vector<double> widths_;
  std::vector<double> weights_;
  double offset_ = 0.0;
  double scale_ = 1.0;

  double raw(const Eigen::Vector3d& x) const;
};

struct Sample {
  Eigen::Vector3d location;
  double value = 0.0;  // noiseless ground truth
};

// Source of (location, value) pairs: a synthetic field or an ingested CSV.
class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual Sample sample(Rng& rng) const = 0;
  // Held-out evaluation points with |value| >= min_abs_value.
  virtual std::vector<Sample> testset(int size, double min_abs_value, Rng& rng) const = 0;
};

class SyntheticDataset final : public Dataset {
 public:
  SyntheticDataset(GroundTruthField field);
  Sample sample(Rng& rng) const override;
  std::vector<Sample> testset(int size, double min_abs_value, Rng& rng) const override;
  const GroundTruthField& field() const { return field_; }

 private:
  GroundTruthField field_;
};

class CsvDataset final : public Dataset {
 public:
  explicit CsvDataset(std::vector<Sample> rows);
  Sample sample(Rng& rng) const override;
  std::vector<Sample> testset(int size, double min_abs_value, Rng& rng) const override;
  const std::vector<Sample>& rows() const { return rows_; }

 private:
  std::vector<Sample> rows_;
};

// Reads rows "x1,x2,x3,value" with a mandatory header; values must lie in
// [0, 1].
std::vector<Sample> read_samples_csv(std::istream& in);
std::vector<Sample> read_samples_csv_file(const std::string& path);

// Writes "x1,x2,x3,f,f_hat_mean" where f_hat_mean averages the per-agent
// predictions at each test point.
void write_testset_csv(std::ostream& out, const std::vector<Sample>& testset,
                       const std::vector<ParameterVector>& models, const FeatureMap& features);

// Network-averaged normalized squared error over the testset (linear scale).
double evaluate_nmse(const std::vector<ParameterVector>& models,
                     const std::vector<Sample>& testset, const FeatureMap& features);

// Fast path: rows of feature_matrix are the mapped test locations.
double evaluate_nmse(const std::vector<ParameterVector>& models,
                     const Eigen::MatrixXd& feature_matrix, const Eigen::VectorXd& values);

double nmse_db(double nmse_linear, double floor_db = -80.0);

}  // namespace airopt::learning

#endif
