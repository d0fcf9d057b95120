// Command line front end: runs experiments from a JSON config, validates
// configs, and provides a quick statistical self-check of the analog
// aggregation path.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric
// failure during a run, 1 anything else.

#include <complex>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "airopt/config.hpp"
#include "airopt/errors.hpp"
#include "airopt/harness.hpp"
#include "airopt/otac.hpp"
#include "airopt/rng.hpp"

namespace {

int run_command(const std::string& config_path, std::uint64_t seed_override, int runs_override,
                const std::string& scheme_override, const std::string& out_override,
                int threads_override) {
  airopt::ExperimentConfig cfg = airopt::load_config(config_path);
  if (seed_override != 0) cfg.experiment.master_seed = seed_override;
  if (runs_override > 0) cfg.experiment.runs = runs_override;
  if (!scheme_override.empty()) cfg.experiment.scheme = airopt::parse_scheme(scheme_override);
  if (!out_override.empty()) cfg.experiment.output_dir = out_override;
  if (const char* env_out = std::getenv("AIROPT_OUT"); env_out && *env_out)
    cfg.experiment.output_dir = env_out;
  if (threads_override > 0) cfg.experiment.threads = threads_override;
  cfg.validate();

  const auto result = airopt::harness::run_experiment(cfg);
  const auto& agg = result.aggregate;
  std::cout << "scheme=" << airopt::scheme_name(cfg.experiment.scheme)
            << " runs=" << cfg.experiment.runs << " horizon=" << cfg.experiment.horizon
            << " final_nmse_db=" << agg.nmse_db.back()
            << " final_disagreement=" << agg.disagreement.back()
            << " final_sparsity=" << agg.sparsity.back() << "\n";
  if (!cfg.experiment.output_dir.empty())
    std::cout << "metrics written to " << cfg.experiment.output_dir << "\n";
  return 0;
}

int validate_command(const std::string& config_path) {
  airopt::ExperimentConfig cfg = airopt::load_config(config_path);
  std::cout << airopt::config_to_json(cfg);
  std::cerr << "config ok\n";
  return 0;
}

// Monte-Carlo check of the analog estimator on a small star topology: two
// transmitters, one receiver, fixed states. Reports the relative error of the
// mean estimate against the channel-power-weighted target and the studentized
// mean of the additive noise decomposition.
int diag_unbiasedness(long draws, int B, std::uint64_t seed) {
  using airopt::otac::Complex;
  const int n_tx = 2;
  const double d[2] = {180.0, 320.0};
  const double P[2] = {40.0, 160.0};
  const double lambda[2] = {0.35, 0.8};
  const double lambda_rx = 0.5;
  const double noise_power = 1e-4;
  const double dmin = 0.0, dmax = 1.0;
  const int Bp = 2 * B;

  airopt::Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw_gain = [&](double dist) {
    const double s = 1.0 / (dist * std::sqrt(2.0));
    return Complex(s * gauss(rng), s * gauss(rng));
  };
  auto draw_noise = [&] {
    const double s = std::sqrt(noise_power / 2.0);
    return Complex(s * gauss(rng), s * gauss(rng));
  };

  double sum_y = 0.0, sum_eta = 0.0, sum_eta2 = 0.0;
  for (long it = 0; it < draws; ++it) {
    std::vector<std::vector<Complex>> symbols(n_tx);
    for (int k = 0; k < n_tx; ++k)
      symbols[k] = airopt::otac::encode(lambda[k], P[k], dmin, dmax, B, rng);

    Eigen::MatrixXcd q(1, B);
    double nu[2] = {0.0, 0.0};
    for (int b = 0; b < B; ++b) {
      std::vector<Complex> gains(n_tx), sym(n_tx);
      for (int k = 0; k < n_tx; ++k) {
        gains[k] = draw_gain(d[k]);
        nu[k] += P[k] / B * std::norm(gains[k]);
        sym[k] = symbols[k][b];
      }
      q(0, b) = airopt::otac::wmac_superpose(gains, sym, draw_noise());
    }
    Eigen::VectorXcd qp(Bp);
    for (int b = 0; b < Bp; ++b) {
      std::vector<Complex> gains(n_tx), sym(n_tx);
      for (int k = 0; k < n_tx; ++k) {
        gains[k] = draw_gain(d[k]);
        sym[k] = std::sqrt(P[k]) * std::polar(1.0, 0.37 * b + k);
      }
      qp(b) = airopt::otac::wmac_superpose(gains, sym, draw_noise());
    }

    const auto stats = airopt::otac::receiver_statistics(q, qp, noise_power, dmin, dmax);
    const double y = stats.y(0);
    const double eta = y - (nu[0] * lambda[0] + nu[1] * lambda[1]);
    sum_y += y;
    sum_eta += eta;
    sum_eta2 += eta * eta;
  }
  (void)lambda_rx;

  const double expected = P[0] / (d[0] * d[0]) * lambda[0] + P[1] / (d[1] * d[1]) * lambda[1];
  const double mean_y = sum_y / draws;
  const double mean_eta = sum_eta / draws;
  const double se_eta = std::sqrt((sum_eta2 / draws - mean_eta * mean_eta) / draws);
  const double rel_err = std::abs(mean_y - expected) / std::abs(expected);

  std::cout << "draws=" << draws << " B=" << B << "\n";
  std::cout << "mean_y=" << mean_y << " expected=" << expected << " rel_err=" << rel_err << "\n";
  std::cout << "mean_eta=" << mean_eta << " se=" << se_eta
            << " z=" << (se_eta > 0 ? mean_eta / se_eta : 0.0) << "\n";
  return rel_err < 0.01 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed kernel regression over simulated wireless networks"};
  app.require_subcommand(1);

  std::string config_path, scheme_override, out_override;
  std::uint64_t seed_override = 0;
  int runs_override = 0, threads_override = 0;

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("--config", config_path, "Path to the JSON config")->required();
  run->add_option("--seed", seed_override, "Override the master seed");
  run->add_option("--runs", runs_override, "Override the number of runs");
  run->add_option("--scheme", scheme_override, "Override the scheme (OTACS|OTAC|BDC|NOC|CEN)");
  run->add_option("--out", out_override, "Override the output directory");
  run->add_option("--threads", threads_override, "Override the worker count");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "Parse and validate a config file");
  validate->add_option("--config", validate_path, "Path to the JSON config")->required();

  auto* diag = app.add_subcommand("diag", "Statistical self-checks");
  long draws = 100000;
  int diag_B = 20;
  std::uint64_t diag_seed = 12345;
  auto* unbias = diag->add_subcommand("unbiasedness", "Analog aggregation mean/noise check");
  unbias->add_option("--draws", draws, "Monte-Carlo sample count");
  unbias->add_option("--B", diag_B, "Symbols per coordinate");
  unbias->add_option("--seed", diag_seed, "RNG seed");
  diag->require_subcommand(1);

  try {
    app.parse(argc, argv);
    if (run->parsed())
      return run_command(config_path, seed_override, runs_override, scheme_override, out_override,
                         threads_override);
    if (validate->parsed()) return validate_command(validate_path);
    if (diag->parsed() && unbias->parsed()) return diag_unbiasedness(draws, diag_B, diag_seed);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const airopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const airopt::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << " (iteration " << e.iteration << ", agent "
              << e.agent << ")\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
