#ifndef AIROPT_NETWORK_HPP
#define AIROPT_NETWORK_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "airopt/core.hpp"
#include "airopt/rng.hpp"

namespace airopt::net {

// One realization of the random communication topology at a single iteration.
// Edges are directed (from, to): "to" can hear "from" this round. The
// expected-weight matrix A is row stochastic, keeps a positive floor on the
// diagonal and on every edge, and its sparsity pattern matches the edge list.
struct NetworkSnapshot {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;
  Eigen::MatrixXd expected_weights;            // A, n x n, row stochastic
  double min_weight = 0.0;                     // guaranteed floor on diagonal/edges
  Eigen::MatrixXd distances;                   // pairwise agent distances
  bool full_duplex = false;                    // half duplex splits roles per round
  std::vector<std::uint8_t> is_transmitter;    // role flags (all set under full duplex)
  std::vector<std::vector<int>> in_neighbors;  // in_neighbors[r] = {k : (k,r) in edges}

  void validate() const;  // throws ConfigError when an invariant fails
};

// Geometric broadcast model: agent k reaches agent r when the mean received
// power transmit_powers[k] / dist(k,r)^2 clears rx_threshold. Under half
// duplex every agent flips a fair coin each round and edges only run from
// transmitters to receivers.
struct GeometricNetworkModel {
  enum class Duplex { full, half };

  std::array<double, 3> domain{1000.0, 1000.0, 1000.0};
  std::vector<double> transmit_powers;
  double rx_threshold = 1.26e-3;
  Duplex duplex = Duplex::half;
  double min_weight = 1e-3;
};

NetworkSnapshot sample_snapshot(const GeometricNetworkModel& model,
                                const std::vector<Eigen::Vector3d>& positions, Rng& rng);

// Smallest n <= N such that the boolean n-th power of the positive pattern of
// A is all-true, i.e. every ordered pair is joined by a length-n walk.
// Empty when no such n exists.
std::optional<int> check_strong_connectivity(const Eigen::MatrixXd& A);

// D_i = (1 - beta) I + beta A, the one-iteration state transition of the
// combine step in expectation.
Eigen::MatrixXd lifted_mixing_matrix(const Eigen::MatrixXd& A, double beta);
Eigen::MatrixXd lifted_mixing_matrix(const NetworkSnapshot& snapshot, double beta);

struct AbsoluteProbabilityVector {
  Eigen::VectorXd weights;  // nonnegative, sums to 1
  double floor = 0.0;       // smallest entry
};

// Backward recursion pi_i^T = pi_{i+1}^T D_i started from the uniform vector
// at the horizon. Input is D_0 .. D_{T-1}; output is pi_0 .. pi_T.
std::vector<AbsoluteProbabilityVector> absolute_probability_sequence(
    const std::vector<Eigen::MatrixXd>& transitions);

// CSV rows "from,to,expected_weight" for offline inspection of a snapshot.
void dump_snapshot_csv(const NetworkSnapshot& snapshot, std::ostream& out);

}  // namespace airopt::net

#endif
