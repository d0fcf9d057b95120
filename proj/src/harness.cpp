#include "airopt/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "airopt/errors.hpp"
#include "airopt/learning.hpp"

namespace airopt::harness {

namespace fs = std::filesystem;

namespace {

// A coordinate counts as active only when its magnitude exceeds 0.5% of the
// unit coefficient box; smaller values contribute less to a prediction than
// the channel-noise floor and would otherwise flip the count at random.
constexpr double kSparsityTol = 5e-3;

std::uint64_t tag(StreamTag t) { return key(t); }

// Shared relocation clock: always fires on the first iteration; afterwards a
// mean gap of g > 1 iterations fires with probability 1/g, and g <= 1 fires
// every iteration.
bool relocation_due(long i, double mean_gap, Rng& rng) {
  if (i == 0 || mean_gap <= 1.0) return true;
  std::bernoulli_distribution coin(1.0 / mean_gap);
  return coin(rng);
}

// Learning task: every agent carries the shared feature map and fits the
// scalar field from its own noisy local measurements. The slab of agent k is
// rebuilt whenever the shared relocation clock fires.
class LearningProblem final : public LocalProblem {
 public:
  explicit LearningProblem(const ExperimentConfig& cfg)
      : n_(cfg.experiment.n_agents),
        halfwidth_(cfg.problem.slab_halfwidth),
        noise_std_(cfg.problem.noise_std),
        relocation_gap_(cfg.problem.relocation_mean_gap),
        features_(learning::FeatureMap::gaussian_rff(cfg.resolved_state_dim(),
                                                     cfg.problem.kernel_bandwidth,
                                                     cfg.resolved_sign_split(),
                                                     cfg.problem.dataset_seed)) {
    if (cfg.problem.dataset_kind == "csv") {
      dataset_ = std::make_unique<learning::CsvDataset>(
          learning::read_samples_csv_file(cfg.problem.dataset_path));
    } else {
      dataset_ = std::make_unique<learning::SyntheticDataset>(learning::GroundTruthField::synthesize(
          cfg.problem.dataset_seed, cfg.network.domain, cfg.problem.field_bumps));
    }

    Rng test_rng = substream(cfg.problem.dataset_seed, {tag(StreamTag::testset)});
    testset_ = dataset_->testset(cfg.problem.testset_size, cfg.problem.nmse_min_abs, test_rng);
    test_features_.resize(testset_.size(), features_.dim());
    test_values_.resize(testset_.size());
    for (std::size_t i = 0; i < testset_.size(); ++i) {
      test_features_.row(i) = features_(testset_[i].location).transpose();
      test_values_(i) = testset_[i].value;
    }
    slabs_.resize(n_);
  }

  void begin_iteration(long i, std::vector<Eigen::Vector3d>& positions, Rng& rng) override {
    if (!relocation_due(i, relocation_gap_, rng)) return;

    std::normal_distribution<double> noise(0.0, noise_std_);
    for (int k = 0; k < n_; ++k) {
      const learning::Sample s = dataset_->sample(rng);
      positions[k] = s.location;
      slabs_[k] = {features_(s.location), s.value + noise(rng), halfwidth_};
    }
  }

  ops::CostFunctional cost(int agent, const ParameterVector& anchor) const override {
    return learning::make_slab_cost(slabs_[agent], anchor);
  }

  double set_distance(int agent, const ParameterVector& x) const override {
    return (x - learning::project_hyperslab(x, slabs_[agent])).norm();
  }

  double nmse(const std::vector<ParameterVector>& models) const override {
    return learning::evaluate_nmse(models, test_features_, test_values_);
  }

  void export_testset(std::ostream& out,
                      const std::vector<ParameterVector>& models) const override {
    learning::write_testset_csv(out, testset_, models, features_);
  }

 private:
  int n_;
  double halfwidth_;
  double noise_std_;
  double relocation_gap_;
  learning::FeatureMap features_;
  std::unique_ptr<learning::Dataset> dataset_;
  std::vector<learning::Sample> testset_;
  Eigen::MatrixXd test_features_;
  Eigen::VectorXd test_values_;
  std::vector<learning::Hyperslab> slabs_;
};

// Synthetic stationary fixture: one fixed hyperslab per agent, all sharing a
// known interior point of the box. Useful for monotonicity and consensus
// diagnostics where the optimum must be known exactly.
class StationaryProblem final : public LocalProblem {
 public:
  explicit StationaryProblem(const ExperimentConfig& cfg)
      : domain_(cfg.network.domain),
        relocation_gap_(cfg.problem.relocation_mean_gap) {
    const BoxSet box = cfg.resolved_box();
    const int M = box.dim;
    Rng rng = substream(cfg.problem.stationary_seed, {tag(StreamTag::slabs)});
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    target_.resize(M);
    const double margin = cfg.problem.target_margin;
    for (int m = 0; m < M; ++m)
      target_(m) = box.lower + (margin + (1.0 - 2.0 * margin) * unit(rng)) * box.side();

    const double halfwidth = cfg.problem.halfwidth_fraction * box.diameter();
    std::normal_distribution<double> gauss(0.0, 1.0);
    slabs_.resize(cfg.experiment.n_agents);
    for (auto& slab : slabs_) {
      ParameterVector dir(M);
      do {
        for (int m = 0; m < M; ++m) dir(m) = gauss(rng);
      } while (dir.norm() <= 0.0);
      dir.normalize();
      const double offset = (unit(rng) - 0.5) * halfwidth;  // keeps target interior
      slab = {dir, dir.dot(target_) + offset, halfwidth};
    }
  }

  void begin_iteration(long i, std::vector<Eigen::Vector3d>& positions, Rng& rng) override {
    if (!relocation_due(i, relocation_gap_, rng)) return;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& p : positions)
      for (int d = 0; d < 3; ++d) p(d) = unit(rng) * domain_[d];
  }

  ops::CostFunctional cost(int agent, const ParameterVector& anchor) const override {
    return learning::make_slab_cost(slabs_[agent], anchor);
  }

  double set_distance(int agent, const ParameterVector& x) const override {
    return (x - learning::project_hyperslab(x, slabs_[agent])).norm();
  }

  const ParameterVector* target() const override { return &target_; }

  double nmse(const std::vector<ParameterVector>& models) const override {
    const double denom = std::max(target_.squaredNorm(), 1e-300);
    double total = 0.0;
    for (const auto& h : models) total += (h - target_).squaredNorm() / denom;
    return total / static_cast<double>(models.size());
  }

 private:
  std::array<double, 3> domain_;
  double relocation_gap_;
  ParameterVector target_;
  std::vector<learning::Hyperslab> slabs_;
};

std::vector<ParameterVector> initial_states(const ExperimentConfig& cfg, const BoxSet& box,
                                            int run) {
  std::vector<ParameterVector> psi(cfg.experiment.n_agents);
  for (int k = 0; k < cfg.experiment.n_agents; ++k) {
    if (cfg.experiment.init == "zeros") {
      psi[k] = ParameterVector::Zero(box.dim);
      continue;
    }
    Rng rng = substream(cfg.experiment.master_seed,
                        {tag(StreamTag::run), static_cast<std::uint64_t>(run),
                         tag(StreamTag::init), static_cast<std::uint64_t>(k)});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    psi[k].resize(box.dim);
    for (int m = 0; m < box.dim; ++m) psi[k](m) = box.lower + unit(rng) * box.side();
  }
  return psi;
}

void write_row(std::ostream& out, long iteration, const double* cols, int n_cols) {
  char buf[64];
  out << iteration;
  for (int c = 0; c < n_cols; ++c) {
    std::snprintf(buf, sizeof(buf), ",%.12g", cols[c]);
    out << buf;
  }
  out << '\n';
}

}  // namespace

double disagreement(const std::vector<ParameterVector>& states) {
  if (states.empty()) throw ConfigError("disagreement: no states");
  double worst = 0.0;
  for (std::size_t a = 0; a < states.size(); ++a)
    for (std::size_t b = a + 1; b < states.size(); ++b)
      worst = std::max(worst, (states[a] - states[b]).norm());
  return worst;
}

double sparsity_fraction(const std::vector<ParameterVector>& states, double tol) {
  if (states.empty()) throw ConfigError("sparsity_fraction: no states");
  if (!(tol >= 0.0)) throw ConfigError("sparsity_fraction: tol must be >= 0");
  double total = 0.0;
  long entries = 0;
  for (const auto& s : states) {
    total += (s.array().abs() > tol).count();
    entries += s.size();
  }
  return total / static_cast<double>(entries);
}

double lyapunov_diagnostic(const std::vector<ParameterVector>& states, const Eigen::VectorXd& pi,
                           const ParameterVector& target) {
  if (states.empty()) throw ConfigError("lyapunov_diagnostic: no states");
  const int n = static_cast<int>(states.size());
  if (pi.size() != 0 && pi.size() != n)
    throw ConfigError("lyapunov_diagnostic: pi size mismatch");
  double v = 0.0;
  for (int k = 0; k < n; ++k) {
    const double w = pi.size() == 0 ? 1.0 / n : pi(k);
    v += w * (states[k] - target).squaredNorm();
  }
  return v;
}

std::unique_ptr<LocalProblem> make_problem(const ExperimentConfig& cfg) {
  if (cfg.problem.kind == "stationary") return std::make_unique<StationaryProblem>(cfg);
  return std::make_unique<LearningProblem>(cfg);
}

RunMetrics run_single(const ExperimentConfig& cfg, int run) {
  const int n = cfg.experiment.n_agents;
  const long T = cfg.experiment.horizon;
  const std::uint64_t seed = cfg.experiment.master_seed;
  const auto run_key = static_cast<std::uint64_t>(run);
  const SchemeTraits traits = scheme_traits(cfg.experiment.scheme);
  const BoxSet box = cfg.resolved_box();
  const bool sparsity = cfg.resolved_sparsity();

  const fs::path out_dir = cfg.experiment.output_dir.empty()
                               ? fs::path{}
                               : fs::path(cfg.experiment.output_dir) /
                                     ("run_" + std::to_string(run));

  auto problem = make_problem(cfg);

  Rng power_rng = substream(seed, {tag(StreamTag::run), run_key, tag(StreamTag::powers)});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> powers(n);
  const double log_lo = std::log(cfg.network.power_range.first);
  const double log_hi = std::log(cfg.network.power_range.second);
  for (auto& p : powers) p = std::exp(log_lo + unit(power_rng) * (log_hi - log_lo));

  net::GeometricNetworkModel model;
  model.domain = cfg.network.domain;
  model.transmit_powers = powers;
  model.rx_threshold = cfg.network.rx_threshold;
  model.duplex = cfg.network.half_duplex ? net::GeometricNetworkModel::Duplex::half
                                         : net::GeometricNetworkModel::Duplex::full;
  model.min_weight = cfg.network.min_weight;

  std::unique_ptr<otac::OtacSimulator> ota;
  if (traits.mixer == consensus::Scheme::otac)
    ota = std::make_unique<otac::OtacSimulator>(cfg.make_otac_config(), powers);

  std::vector<ops::SparsityPerturbation> perturbers;
  if (sparsity)
    perturbers.assign(n, ops::SparsityPerturbation(cfg.local.perturbation, cfg.local.varsigma));

  std::vector<ParameterVector> psi = initial_states(cfg, box, run);
  std::vector<ParameterVector> lambda(n);
  std::vector<Eigen::Vector3d> positions(n, Eigen::Vector3d::Zero());

  const ParameterVector* target = problem->target();
  const bool track_v = target != nullptr && cfg.diagnostics.record_lyapunov;
  const bool uniform_pi =
      traits.mixer == consensus::Scheme::cen || traits.mixer == consensus::Scheme::noc;

  RunMetrics m;
  m.nmse_db.reserve(T);
  m.disagreement.reserve(T);
  m.cost.reserve(T);
  m.sparsity.reserve(T);
  m.initial_disagreement = disagreement(psi);
  if (cfg.diagnostics.record_per_agent_cost) m.per_agent_set_distance.resize(T, n);

  // Squared distances to the target per state index (0..T) and the expected
  // transition matrices, for the Lyapunov recursion after the loop.
  Eigen::MatrixXd dist2;
  std::vector<Eigen::MatrixXd> transitions;
  if (track_v) {
    dist2.resize(T + 1, n);
    for (int k = 0; k < n; ++k) dist2(0, k) = (psi[k] - *target).squaredNorm();
    if (!uniform_pi) transitions.reserve(T);
  }

  std::ofstream telemetry;
  if (!out_dir.empty() && cfg.otac.telemetry && ota) {
    fs::create_directories(out_dir);
    telemetry.open(out_dir / "otac_telemetry.csv");
    telemetry << "agent,iteration,y_prime,gamma,snr_estimate\n";
  }
  const bool dump_snapshots = !out_dir.empty() && cfg.network.dump_snapshots && run == 0;
  if (dump_snapshots) fs::create_directories(out_dir / "snapshots");

  for (long i = 0; i < T; ++i) {
    Rng meas_rng = substream(seed, {tag(StreamTag::run), run_key, tag(StreamTag::measurement),
                                    static_cast<std::uint64_t>(i)});
    problem->begin_iteration(i, positions, meas_rng);

    double mean_cost = 0.0;
    for (int k = 0; k < n; ++k) {
      const ops::CostFunctional cost = problem->cost(k, psi[k]);
      mean_cost += cost.evaluate(psi[k]);
      if (cfg.diagnostics.record_per_agent_cost)
        m.per_agent_set_distance(i, k) = problem->set_distance(k, psi[k]);

      const ParameterVector y = psi[k] - ops::deflect(cost, cfg.local.mu, psi[k]);
      if (sparsity) {
        lambda[k] = box.project(y + perturbers[k].displacement(i, y));
      } else {
        lambda[k] = box.project(y);
      }
    }
    mean_cost /= static_cast<double>(n);

    const double beta = cfg.local.step.value(i);
    Rng role_rng = substream(seed, {tag(StreamTag::run), run_key, tag(StreamTag::roles),
                                    static_cast<std::uint64_t>(i)});
    const net::NetworkSnapshot snap = net::sample_snapshot(model, positions, role_rng);

    switch (traits.mixer) {
      case consensus::Scheme::cen:
      case consensus::Scheme::noc:
        psi = consensus::mix(traits.mixer, snap, lambda, beta, role_rng);
        break;
      case consensus::Scheme::bdc: {
        Rng outage_rng = substream(seed, {tag(StreamTag::run), run_key, tag(StreamTag::outage),
                                          static_cast<std::uint64_t>(i)});
        psi = consensus::mix(consensus::Scheme::bdc, snap, lambda, beta, outage_rng, cfg.bdc);
        break;
      }
      case consensus::Scheme::otac: {
        Rng channel_rng = substream(seed, {tag(StreamTag::run), run_key, tag(StreamTag::channel),
                                           static_cast<std::uint64_t>(i)});
        psi = ota->mix(snap, lambda, beta, channel_rng);
        break;
      }
    }

    for (int k = 0; k < n; ++k) {
      if (!psi[k].allFinite()) {
        if (!cfg.experiment.output_dir.empty()) {
          nlohmann::json dump;
          dump["iteration"] = i;
          dump["agent"] = k;
          dump["last_finite_state"] = std::vector<double>(lambda[k].data(),
                                                          lambda[k].data() + lambda[k].size());
          fs::create_directories(cfg.experiment.output_dir);
          std::ofstream df(fs::path(cfg.experiment.output_dir) / "abort_dump.json");
          df << dump.dump(2) << "\n";
        }
        throw NumericError("run aborted: non-finite state", i, k);
      }
    }

    if (telemetry.is_open()) {
      char buf[160];
      for (const auto& row : ota->last_telemetry()) {
        std::snprintf(buf, sizeof(buf), "%d,%ld,%.12g,%.12g,%.12g\n", row.agent, i, row.y_prime,
                      row.gamma, row.snr_estimate);
        telemetry << buf;
      }
    }
    if (dump_snapshots) {
      char name[32];
      std::snprintf(name, sizeof(name), "iter_%06ld.csv", i);
      std::ofstream sf(out_dir / "snapshots" / name);
      net::dump_snapshot_csv(snap, sf);
    }

    m.nmse_db.push_back(learning::nmse_db(problem->nmse(psi)));
    m.disagreement.push_back(disagreement(psi));
    m.cost.push_back(mean_cost);
    m.sparsity.push_back(sparsity_fraction(lambda, kSparsityTol));

    if (track_v) {
      for (int k = 0; k < n; ++k) dist2(i + 1, k) = (psi[k] - *target).squaredNorm();
      if (!uniform_pi) transitions.push_back(net::lifted_mixing_matrix(snap, beta));
    }
  }

  if (track_v) {
    Eigen::VectorXd v(T + 1);
    if (uniform_pi) {
      v = dist2.rowwise().mean();
    } else {
      const auto pis = net::absolute_probability_sequence(transitions);
      for (long i = 0; i <= T; ++i) v(i) = dist2.row(i) * pis[i].weights;
    }
    m.initial_lyapunov = v(0);
    m.lyapunov.resize(T);
    m.qf_slack.resize(T);
    double cumulative = 0.0;
    for (long i = 0; i < T; ++i) {
      m.lyapunov[i] = v(i + 1);
      cumulative += std::max(0.0, v(i + 1) - v(i));
      m.qf_slack[i] = cumulative;
    }
  } else {
    m.lyapunov.assign(T, 0.0);
    m.qf_slack.assign(T, 0.0);
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream mf(out_dir / "metrics.csv");
    write_metrics_csv(mf, m);
    if (cfg.problem.kind == "learning" && cfg.problem.export_testset) {
      std::ofstream tf(out_dir / "testset.csv");
      problem->export_testset(tf, psi);
    }
  }

  m.final_lambda = std::move(lambda);
  m.final_psi = std::move(psi);
  return m;
}

RunMetrics aggregate_metrics(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw ConfigError("aggregate_metrics: no runs");
  const std::size_t T = runs.front().nmse_db.size();
  RunMetrics agg;
  agg.nmse_db.assign(T, 0.0);
  agg.disagreement.assign(T, 0.0);
  agg.cost.assign(T, 0.0);
  agg.sparsity.assign(T, 0.0);
  agg.lyapunov.assign(T, 0.0);
  agg.qf_slack.assign(T, 0.0);
  const double scale = 1.0 / static_cast<double>(runs.size());
  for (const auto& r : runs) {
    if (r.nmse_db.size() != T) throw ConfigError("aggregate_metrics: ragged runs");
    agg.initial_disagreement += scale * r.initial_disagreement;
    agg.initial_lyapunov += scale * r.initial_lyapunov;
    for (std::size_t i = 0; i < T; ++i) {
      agg.nmse_db[i] += scale * r.nmse_db[i];
      agg.disagreement[i] += scale * r.disagreement[i];
      agg.cost[i] += scale * r.cost[i];
      agg.sparsity[i] += scale * r.sparsity[i];
      agg.lyapunov[i] += scale * r.lyapunov[i];
      agg.qf_slack[i] += scale * r.qf_slack[i];
    }
  }
  return agg;
}

void write_metrics_csv(std::ostream& out, const RunMetrics& m) {
  out << "iteration,nmse_db,disagreement,cost,sparsity,lyapunov,qf_slack\n";
  for (std::size_t i = 0; i < m.nmse_db.size(); ++i) {
    const double cols[6] = {m.nmse_db[i],  m.disagreement[i], m.cost[i],
                            m.sparsity[i], m.lyapunov[i],     m.qf_slack[i]};
    write_row(out, static_cast<long>(i), cols, 6);
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const int runs = cfg.experiment.runs;

  ExperimentResult result;
  result.runs.resize(runs);

  const int workers = std::min(cfg.experiment.threads, runs);
  if (workers <= 1) {
    for (int r = 0; r < runs; ++r) result.runs[r] = run_single(cfg, r);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= runs) return;
          try {
            result.runs[r] = run_single(cfg, r);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  result.aggregate = aggregate_metrics(result.runs);

  if (!cfg.experiment.output_dir.empty()) {
    const fs::path dir(cfg.experiment.output_dir);
    fs::create_directories(dir);
    save_config(cfg, (dir / "config.json").string());
    std::ofstream mf(dir / "metrics.csv");
    write_metrics_csv(mf, result.aggregate);
  }
  return result;
}

}  // namespace airopt::harness
