#include "airopt/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "airopt/errors.hpp"

namespace airopt::net {

namespace {

constexpr double kRowSumTol = 1e-12;

// Square boolean matrix with bit-packed rows, large enough for reachability
// closures on a few hundred agents.
class BitMatrix {
 public:
  explicit BitMatrix(int n) : n_(n), words_((n + 63) / 64), rows_(n * words_, 0) {}

  void set(int i, int j) { rows_[i * words_ + j / 64] |= 1ULL << (j % 64); }

  bool all() const {
    for (int i = 0; i < n_; ++i) {
      for (int w = 0; w < words_; ++w) {
        std::uint64_t expect = ~0ULL;
        if (w == words_ - 1 && n_ % 64 != 0) expect = (1ULL << (n_ % 64)) - 1;
        if ((rows_[i * words_ + w] & expect) != expect) return false;
      }
    }
    return true;
  }

  // this <- this * other over the boolean semiring.
  void multiply(const BitMatrix& other) {
    std::vector<std::uint64_t> out(rows_.size(), 0);
    for (int i = 0; i < n_; ++i) {
      for (int k = 0; k < n_; ++k) {
        if (rows_[i * words_ + k / 64] & (1ULL << (k % 64))) {
          for (int w = 0; w < words_; ++w) out[i * words_ + w] |= other.rows_[k * words_ + w];
        }
      }
    }
    rows_.swap(out);
  }

 private:
  int n_;
  int words_;
  std::vector<std::uint64_t> rows_;
};

}  // namespace

void NetworkSnapshot::validate() const {
  if (n_agents < 1) throw ConfigError("NetworkSnapshot: n_agents must be >= 1");
  if (expected_weights.rows() != n_agents || expected_weights.cols() != n_agents)
    throw ConfigError("NetworkSnapshot: expected_weights must be n_agents x n_agents");
  if (!(min_weight > 0.0)) throw ConfigError("NetworkSnapshot: min_weight must be > 0");

  Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(n_agents, n_agents);
  for (const auto& [from, to] : edges) {
    if (from < 0 || from >= n_agents || to < 0 || to >= n_agents || from == to)
      throw ConfigError("NetworkSnapshot: edge endpoints out of range");
    adjacency(to, from) = 1.0;
  }

  for (int r = 0; r < n_agents; ++r) {
    double row_sum = expected_weights.row(r).sum();
    if (std::abs(row_sum - 1.0) > kRowSumTol)
      throw ConfigError("NetworkSnapshot: expected_weights row does not sum to 1");
    if (expected_weights(r, r) < min_weight)
      throw ConfigError("NetworkSnapshot: diagonal weight below floor");
    for (int k = 0; k < n_agents; ++k) {
      const double w = expected_weights(r, k);
      if (w < 0.0) throw ConfigError("NetworkSnapshot: negative weight");
      if (k == r) continue;
      const bool has_edge = adjacency(r, k) > 0.0;
      if (has_edge && w < min_weight)
        throw ConfigError("NetworkSnapshot: edge weight below floor");
      if (!has_edge && w != 0.0)
        throw ConfigError("NetworkSnapshot: weight on a missing edge");
    }
  }
}

NetworkSnapshot sample_snapshot(const GeometricNetworkModel& model,
                                const std::vector<Eigen::Vector3d>& positions, Rng& rng) {
  const int n = static_cast<int>(positions.size());
  if (n < 1) throw ConfigError("sample_snapshot: need at least one agent");
  if (static_cast<int>(model.transmit_powers.size()) != n)
    throw ConfigError("sample_snapshot: transmit_powers size mismatch");
  if (!(model.rx_threshold > 0.0)) throw ConfigError("sample_snapshot: rx_threshold must be > 0");

  NetworkSnapshot snap;
  snap.n_agents = n;
  snap.distances = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = (positions[i] - positions[j]).norm();
      snap.distances(i, j) = d;
      snap.distances(j, i) = d;
    }

  snap.full_duplex = model.duplex == GeometricNetworkModel::Duplex::full;
  snap.is_transmitter.assign(n, 1);
  if (model.duplex == GeometricNetworkModel::Duplex::half) {
    std::bernoulli_distribution coin(0.5);
    for (int k = 0; k < n; ++k) snap.is_transmitter[k] = coin(rng) ? 1 : 0;
  }

  snap.in_neighbors.assign(n, {});
  for (int k = 0; k < n; ++k) {
    if (!snap.is_transmitter[k]) continue;
    for (int r = 0; r < n; ++r) {
      if (r == k) continue;
      if (model.duplex == GeometricNetworkModel::Duplex::half && snap.is_transmitter[r]) continue;
      const double d = snap.distances(k, r);
      if (d <= 0.0) continue;  // co-located agents cannot be told apart
      if (model.transmit_powers[k] / (d * d) >= model.rx_threshold) {
        snap.edges.emplace_back(k, r);
        snap.in_neighbors[r].push_back(k);
      }
    }
  }

  // Row-normalized received powers, then a convex mix with the uniform vector
  // on the row support so that every retained weight clears the floor.
  snap.expected_weights = Eigen::MatrixXd::Zero(n, n);
  double guaranteed = std::min(model.min_weight, 1.0);
  for (int r = 0; r < n; ++r) {
    const auto& nbrs = snap.in_neighbors[r];
    if (nbrs.empty()) {
      snap.expected_weights(r, r) = 1.0;
      continue;
    }
    const int support = static_cast<int>(nbrs.size()) + 1;
    double best = 0.0;
    double total = 0.0;
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(n);
    for (int k : nbrs) {
      const double d = snap.distances(k, r);
      raw(k) = model.transmit_powers[k] / (d * d);
      best = std::max(best, raw(k));
      total += raw(k);
    }
    raw(r) = best;  // the agent weighs itself like its strongest neighbor
    total += best;

    const double eps = std::min(model.min_weight, 1.0 / support);
    const double theta = eps * support;
    for (int k : nbrs) snap.expected_weights(r, k) = (1.0 - theta) * raw(k) / total + eps;
    snap.expected_weights(r, r) = (1.0 - theta) * raw(r) / total + eps;
    guaranteed = std::min(guaranteed, eps);
  }
  snap.min_weight = guaranteed;
  return snap;
}

std::optional<int> check_strong_connectivity(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  if (n < 1 || A.cols() != n) throw ConfigError("check_strong_connectivity: A must be square");
  BitMatrix pattern(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (A(i, j) > 0.0) pattern.set(i, j);

  BitMatrix power = pattern;
  for (int exp = 1; exp <= n; ++exp) {
    if (power.all()) return exp;
    power.multiply(pattern);
  }
  return std::nullopt;
}

Eigen::MatrixXd lifted_mixing_matrix(const Eigen::MatrixXd& A, double beta) {
  if (A.rows() != A.cols()) throw ConfigError("lifted_mixing_matrix: A must be square");
  if (!(beta >= 0.0) || !(beta <= 1.0))
    throw ConfigError("lifted_mixing_matrix: beta must lie in [0, 1]");
  const int n = static_cast<int>(A.rows());
  return (1.0 - beta) * Eigen::MatrixXd::Identity(n, n) + beta * A;
}

Eigen::MatrixXd lifted_mixing_matrix(const NetworkSnapshot& snapshot, double beta) {
  return lifted_mixing_matrix(snapshot.expected_weights, beta);
}

std::vector<AbsoluteProbabilityVector> absolute_probability_sequence(
    const std::vector<Eigen::MatrixXd>& transitions) {
  if (transitions.empty()) throw ConfigError("absolute_probability_sequence: empty input");
  const int n = static_cast<int>(transitions.front().rows());
  for (const auto& D : transitions) {
    if (D.rows() != n || D.cols() != n)
      throw ConfigError("absolute_probability_sequence: inconsistent dimensions");
    for (int r = 0; r < n; ++r) {
      if (std::abs(D.row(r).sum() - 1.0) > kRowSumTol)
        throw ConfigError("absolute_probability_sequence: transition row does not sum to 1");
      if ((D.row(r).array() < 0.0).any())
        throw ConfigError("absolute_probability_sequence: negative transition entry");
    }
  }

  const long T = static_cast<long>(transitions.size());
  std::vector<AbsoluteProbabilityVector> pis(T + 1);
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  pis[T] = {pi, pi.minCoeff()};
  for (long i = T - 1; i >= 0; --i) {
    pi = transitions[i].transpose() * pi;
    pis[i] = {pi, pi.minCoeff()};
  }
  return pis;
}

void dump_snapshot_csv(const NetworkSnapshot& snapshot, std::ostream& out) {
  out << "from,to,expected_weight\n";
  char buf[64];
  for (const auto& [from, to] : snapshot.edges) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.12g\n", from, to,
                  snapshot.expected_weights(to, from));
    out << buf;
  }
}

}  // namespace airopt::net
