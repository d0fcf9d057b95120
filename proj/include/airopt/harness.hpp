#ifndef AIROPT_HARNESS_HPP
#define AIROPT_HARNESS_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <vector>

#include "airopt/config.hpp"
#include "airopt/core.hpp"
#include "airopt/operators.hpp"
#include "airopt/rng.hpp"

namespace airopt::harness {

// Largest pairwise distance between agent states.
double disagreement(const std::vector<ParameterVector>& states);

// Fraction of coordinates with magnitude above tol, averaged over agents.
double sparsity_fraction(const std::vector<ParameterVector>& states, double tol);

// V = sum_k pi_k ||psi_k - target||^2. An empty pi means uniform weights.
double lyapunov_diagnostic(const std::vector<ParameterVector>& states, const Eigen::VectorXd& pi,
                           const ParameterVector& target);

// Per-run task description: where the agents are, what they measure, and the
// convex cost each agent minimizes at the current iteration.
class LocalProblem {
 public:
  virtual ~LocalProblem() = default;

  // Runs at the top of iteration i, before any local step: relocates agents
  // and refreshes their measurements. rng is the only randomness source.
  virtual void begin_iteration(long i, std::vector<Eigen::Vector3d>& positions, Rng& rng) = 0;

  // Cost for this agent at the current iteration, anchored at its state.
  virtual ops::CostFunctional cost(int agent, const ParameterVector& anchor) const = 0;

  // Distance from x to the agent's current constraint set.
  virtual double set_distance(int agent, const ParameterVector& x) const = 0;

  // Known consensus target, when the problem has one.
  virtual const ParameterVector* target() const { return nullptr; }

  virtual double nmse(const std::vector<ParameterVector>& models) const = 0;

  virtual void export_testset(std::ostream& /*out*/,
                              const std::vector<ParameterVector>& /*models*/) const {}
};

std::unique_ptr<LocalProblem> make_problem(const ExperimentConfig& config);

// Per-iteration traces of one run. Row i describes the states after iteration
// i completed; cost is evaluated at the pre-step states of iteration i.
struct RunMetrics {
  double initial_disagreement = 0.0;
  double initial_lyapunov = 0.0;
  std::vector<double> nmse_db;
  std::vector<double> disagreement;
  std::vector<double> cost;
  std::vector<double> sparsity;
  std::vector<double> lyapunov;  // zero when the problem has no target
  std::vector<double> qf_slack;  // cumulative positive Lyapunov increments
  Eigen::MatrixXd per_agent_set_distance;  // horizon x n_agents when recorded
  std::vector<ParameterVector> final_lambda;
  std::vector<ParameterVector> final_psi;
};

struct ExperimentResult {
  std::vector<RunMetrics> runs;
  RunMetrics aggregate;
};

RunMetrics run_single(const ExperimentConfig& config, int run_index);
ExperimentResult run_experiment(const ExperimentConfig& config);

RunMetrics aggregate_metrics(const std::vector<RunMetrics>& runs);
void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);

}  // namespace airopt::harness

#endif
