#include "airopt/learning.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "airopt/errors.hpp"

namespace airopt::learning {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

FeatureMap FeatureMap::gaussian_rff(int total_dim, double bandwidth, bool sign_split,
                                    std::uint64_t seed) {
  if (total_dim < 1) throw ConfigError("FeatureMap: total_dim must be >= 1");
  if (sign_split && total_dim % 2 != 0)
    throw ConfigError("FeatureMap: sign_split needs an even total_dim");
  if (!(bandwidth > 0.0)) throw ConfigError("FeatureMap: bandwidth must be > 0");

  const int base = sign_split ? total_dim / 2 : total_dim;
  FeatureMap map;
  map.sign_split = sign_split;
  map.frequencies.resize(3, base);
  map.phases.resize(base);

  Rng rng = substream(seed, {key(StreamTag::features)});
  std::normal_distribution<double> freq(0.0, 1.0 / bandwidth);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  for (int j = 0; j < base; ++j) {
    for (int d = 0; d < 3; ++d) map.frequencies(d, j) = freq(rng);
    map.phases(j) = phase(rng);
  }
  return map;
}

ParameterVector FeatureMap::operator()(const Eigen::Vector3d& x) const {
  const int base = static_cast<int>(phases.size());
  const Eigen::VectorXd args = frequencies.transpose() * x + phases;
  const double scale = std::sqrt(2.0 / base);
  ParameterVector out(dim());
  for (int j = 0; j < base; ++j) out(j) = scale * std::cos(args(j));
  if (sign_split) out.tail(base) = -out.head(base);
  return out;
}

bool Hyperslab::contains(const ParameterVector& h, double tol) const {
  return std::abs(direction.dot(h) - center) <= halfwidth + tol;
}

ParameterVector project_hyperslab(const ParameterVector& h, const Hyperslab& slab) {
  if (slab.direction.size() != h.size())
    throw ConfigError("project_hyperslab: dimension mismatch");
  if (!(slab.halfwidth >= 0.0)) throw ConfigError("project_hyperslab: negative halfwidth");
  const double norm2 = slab.direction.squaredNorm();
  if (!(norm2 > 0.0)) throw ConfigError("project_hyperslab: zero direction");

  const double residual = slab.direction.dot(h) - slab.center;
  if (std::abs(residual) <= slab.halfwidth) return h;
  const double overshoot = residual > 0.0 ? residual - slab.halfwidth : residual + slab.halfwidth;
  return h - (overshoot / norm2) * slab.direction;
}

std::pair<double, ParameterVector> apsm_cost(const ParameterVector& x,
                                             const ParameterVector& anchor,
                                             const Hyperslab& slab) {
  const ParameterVector px = project_hyperslab(x, slab);
  const double dist_x = (x - px).norm();
  const double dist_anchor = (anchor - project_hyperslab(anchor, slab)).norm();
  const double value = dist_x * dist_anchor;
  if (dist_x <= 0.0) return {value, ParameterVector::Zero(x.size())};
  return {value, (dist_anchor / dist_x) * (x - px)};
}

ops::CostFunctional make_slab_cost(Hyperslab slab, ParameterVector anchor) {
  ops::CostFunctional cost;
  auto slab_ptr = std::make_shared<Hyperslab>(std::move(slab));
  auto anchor_ptr = std::make_shared<ParameterVector>(std::move(anchor));
  cost.evaluate = [slab_ptr, anchor_ptr](const ParameterVector& x) {
    return apsm_cost(x, *anchor_ptr, *slab_ptr).first;
  };
  cost.subgradient = [slab_ptr, anchor_ptr](const ParameterVector& x) {
    return apsm_cost(x, *anchor_ptr, *slab_ptr).second;
  };
  cost.zero_set_projection = [slab_ptr](const ParameterVector& x) {
    return project_hyperslab(x, *slab_ptr);
  };
  return cost;
}

GroundTruthField GroundTruthField::synthesize(std::uint64_t seed,
                                              const std::array<double, 3>& domain, int n_bumps) {
  if (n_bumps < 1) throw ConfigError("GroundTruthField: n_bumps must be >= 1");
  for (double side : domain)
    if (!(side > 0.0)) throw ConfigError("GroundTruthField: domain sides must be > 0");

  GroundTruthField field;
  field.domain_ = domain;
  Rng rng = substream(seed, {key(StreamTag::field)});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double min_side = *std::min_element(domain.begin(), domain.end());
  for (int j = 0; j < n_bumps; ++j) {
    Eigen::Vector3d c;
    for (int d = 0; d < 3; ++d) c(d) = (0.15 + 0.7 * unit(rng)) * domain[d];
    field.centers_.push_back(c);
    field.widths_.push_back((0.15 + 0.2 * unit(rng)) * min_side);
    field.weights_.push_back(0.5 + 0.5 * unit(rng));
  }

  // Normalize against a fixed probe grid; clamping in operator() absorbs the
  // residual excursions between grid points.
  const int grid = 17;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b)
      for (int c = 0; c < grid; ++c) {
        const Eigen::Vector3d x(domain[0] * a / (grid - 1.0), domain[1] * b / (grid - 1.0),
                                domain[2] * c / (grid - 1.0));
        const double v = field.raw(x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!(hi > lo)) throw ConfigError("GroundTruthField: degenerate field");
  field.offset_ = lo;
  field.scale_ = 1.0 / (hi - lo);
  return field;
}

double GroundTruthField::raw(const Eigen::Vector3d& x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    const double r2 = (x - centers_[j]).squaredNorm();
    v += weights_[j] * std::exp(-r2 / (2.0 * widths_[j] * widths_[j]));
  }
  return v;
}

double GroundTruthField::operator()(const Eigen::Vector3d& x) const {
  return std::clamp((raw(x) - offset_) * scale_, 0.0, 1.0);
}

SyntheticDataset::SyntheticDataset(GroundTruthField field) : field_(std::move(field)) {}

Sample SyntheticDataset::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::Vector3d x;
  for (int d = 0; d < 3; ++d) x(d) = unit(rng) * field_.domain()[d];
  return {x, field_(x)};
}

std::vector<Sample> SyntheticDataset::testset(int size, double min_abs_value, Rng& rng) const {
  if (size < 1) throw ConfigError("testset: size must be >= 1");
  std::vector<Sample> out;
  out.reserve(size);
  long attempts = 0;
  const long max_attempts = 10000L * size;
  while (static_cast<int>(out.size()) < size) {
    if (++attempts > max_attempts)
      throw ConfigError("testset: field too flat to find evaluation points");
    Sample s = sample(rng);
    if (std::abs(s.value) >= min_abs_value) out.push_back(s);
  }
  return out;
}

CsvDataset::CsvDataset(std::vector<Sample> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw ConfigError("CsvDataset: no rows");
}

Sample CsvDataset::sample(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, rows_.size() - 1);
  return rows_[pick(rng)];
}

std::vector<Sample> CsvDataset::testset(int size, double min_abs_value, Rng& rng) const {
  if (size < 1) throw ConfigError("testset: size must be >= 1");
  std::vector<Sample> eligible;
  for (const auto& row : rows_)
    if (std::abs(row.value) >= min_abs_value) eligible.push_back(row);
  if (eligible.empty()) throw ConfigError("testset: no rows clear the magnitude filter");
  std::shuffle(eligible.begin(), eligible.end(), rng);
  if (static_cast<int>(eligible.size()) > size) eligible.resize(size);
  return eligible;
}

std::vector<Sample> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("samples csv: empty input");
  auto strip = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
            s.end());
    return s;
  };
  if (strip(line) != "x1,x2,x3,value")
    throw ConfigError("samples csv: expected header x1,x2,x3,value");

  std::vector<Sample> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double vals[4];
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(ss, cell, ','))
        throw ConfigError("samples csv: line " + std::to_string(line_no) + " has too few columns");
      try {
        vals[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw ConfigError("samples csv: line " + std::to_string(line_no) + " is not numeric");
      }
    }
    if (std::getline(ss, cell, ','))
      throw ConfigError("samples csv: line " + std::to_string(line_no) + " has too many columns");
    if (vals[3] < 0.0 || vals[3] > 1.0)
      throw ConfigError("samples csv: line " + std::to_string(line_no) +
                        " value outside [0, 1]");
    rows.push_back({Eigen::Vector3d(vals[0], vals[1], vals[2]), vals[3]});
  }
  if (rows.empty()) throw ConfigError("samples csv: no data rows");
  return rows;
}

std::vector<Sample> read_samples_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("samples csv: cannot open " + path);
  return read_samples_csv(in);
}

void write_testset_csv(std::ostream& out, const std::vector<Sample>& testset,
                       const std::vector<ParameterVector>& models, const FeatureMap& features) {
  out << "x1,x2,x3,f,f_hat_mean\n";
  char buf[160];
  for (const auto& s : testset) {
    const ParameterVector k = features(s.location);
    double mean_pred = 0.0;
    for (const auto& h : models) mean_pred += h.dot(k);
    mean_pred /= static_cast<double>(models.size());
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g\n", s.location(0),
                  s.location(1), s.location(2), s.value, mean_pred);
    out << buf;
  }
}

double evaluate_nmse(const std::vector<ParameterVector>& models,
                     const std::vector<Sample>& testset, const FeatureMap& features) {
  if (testset.empty()) throw ConfigError("evaluate_nmse: empty testset");
  Eigen::MatrixXd K(testset.size(), features.dim());
  Eigen::VectorXd f(testset.size());
  for (std::size_t i = 0; i < testset.size(); ++i) {
    K.row(i) = features(testset[i].location).transpose();
    f(i) = testset[i].value;
  }
  return evaluate_nmse(models, K, f);
}

double evaluate_nmse(const std::vector<ParameterVector>& models,
                     const Eigen::MatrixXd& feature_matrix, const Eigen::VectorXd& values) {
  if (models.empty()) throw ConfigError("evaluate_nmse: no models");
  if (feature_matrix.rows() != values.size())
    throw ConfigError("evaluate_nmse: feature/value size mismatch");
  if ((values.array().abs() <= 0.0).any())
    throw ConfigError("evaluate_nmse: zero ground-truth value in testset");

  double total = 0.0;
  for (const auto& h : models) {
    if (h.size() != feature_matrix.cols())
      throw ConfigError("evaluate_nmse: model dimension mismatch");
    const Eigen::VectorXd pred = feature_matrix * h;
    total += ((pred - values).array() / values.array()).square().mean();
  }
  return total / static_cast<double>(models.size());
}

double nmse_db(double nmse_linear, double floor_db) {
  if (nmse_linear <= 0.0) return floor_db;
  return std::max(10.0 * std::log10(nmse_linear), floor_db);
}

}  // namespace airopt::learning
