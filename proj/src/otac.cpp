#include "airopt/otac.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "airopt/errors.hpp"

namespace airopt::otac {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Complex random_phase(Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  const double a = angle(rng);
  return Complex(std::cos(a), std::sin(a));
}

}  // namespace

void OtacConfig::validate() const {
  if (B < 1) throw ConfigError("OtacConfig: B must be >= 1");
  if (B_prime < 1) throw ConfigError("OtacConfig: B_prime must be >= 1");
  if (!(noise_power >= 0.0)) throw ConfigError("OtacConfig: noise_power must be >= 0");
  if (!(delta_min < delta_max)) throw ConfigError("OtacConfig: delta_min must be < delta_max");
  if (gamma_mode == GammaMode::fixed && !(gamma_fixed > 0.0))
    throw ConfigError("OtacConfig: fixed gamma must be > 0");
  if (gamma_window < 1) throw ConfigError("OtacConfig: gamma_window must be >= 1");
  if (!(gamma_safety > 0.0) || !(gamma_safety < 1.0))
    throw ConfigError("OtacConfig: gamma_safety must lie in (0, 1)");
  if (!(gamma_bootstrap > 0.0)) throw ConfigError("OtacConfig: gamma_bootstrap must be > 0");
  if (normalization_every < 1) throw ConfigError("OtacConfig: normalization_every must be >= 1");
}

std::vector<Complex> encode(double lambda, double power, double delta_min, double delta_max,
                            int B, Rng& rng) {
  if (B < 1) throw ConfigError("encode: B must be >= 1");
  if (!(power > 0.0)) throw ConfigError("encode: power must be > 0");
  if (!(delta_min < delta_max)) throw ConfigError("encode: delta_min must be < delta_max");
  if (lambda < delta_min || lambda > delta_max)
    throw std::logic_error("encode: lambda outside the box");

  const double amplitude = std::sqrt(power * (lambda - delta_min) / (delta_max - delta_min));
  std::vector<Complex> symbols(B);
  for (auto& s : symbols) s = amplitude * random_phase(rng);
  return symbols;
}

Complex wmac_superpose(const std::vector<Complex>& gains, const std::vector<Complex>& symbols,
                       Complex noise) {
  if (gains.size() != symbols.size())
    throw ConfigError("wmac_superpose: gains/symbols size mismatch");
  Complex q = noise;
  for (std::size_t k = 0; k < gains.size(); ++k) q += gains[k] * symbols[k];
  return q;
}

ReceiverStatistics receiver_statistics(const Eigen::MatrixXcd& data_symbols,
                                       const Eigen::VectorXcd& burst_symbols,
                                       double noise_power, double delta_min, double delta_max) {
  if (data_symbols.cols() < 1 || burst_symbols.size() < 1)
    throw ConfigError("receiver_statistics: need at least one symbol per block");
  if (!(delta_min < delta_max))
    throw ConfigError("receiver_statistics: delta_min must be < delta_max");

  const double delta = delta_max - delta_min;
  const double burst_energy = burst_symbols.array().abs2().mean();
  ReceiverStatistics stats;
  stats.y_prime = burst_energy - delta * noise_power;

  const Eigen::ArrayXd energies = data_symbols.array().abs2().rowwise().mean();
  stats.y = (delta * energies - delta * noise_power + delta_min * stats.y_prime).matrix();
  return stats;
}

ParameterVector otac_update(const ParameterVector& lambda, const ReceiverStatistics& stats,
                            double gamma, double beta) {
  if (stats.y.size() != lambda.size()) throw ConfigError("otac_update: dimension mismatch");
  if (!(gamma > 0.0)) throw ConfigError("otac_update: gamma must be > 0");
  if (!(beta >= 0.0) || !(beta <= 1.0)) throw ConfigError("otac_update: beta must lie in [0, 1]");
  const double self = 1.0 - beta * gamma * std::max(stats.y_prime, 0.0);
  return self * lambda + beta * gamma * stats.y;
}

double estimate_gamma(const std::deque<double>& history, int window, double safety,
                      double bootstrap) {
  if (window < 1) throw ConfigError("estimate_gamma: window must be >= 1");
  if (!(safety > 0.0) || !(safety < 1.0))
    throw ConfigError("estimate_gamma: safety must lie in (0, 1)");
  if (!(bootstrap > 0.0)) throw ConfigError("estimate_gamma: bootstrap must be > 0");
  if (history.empty()) return bootstrap;

  const std::size_t take = std::min<std::size_t>(history.size(), window);
  const double sum = std::accumulate(history.end() - take, history.end(), 0.0);
  const double mean = sum / static_cast<double>(take);
  if (!(mean > 0.0)) return bootstrap;
  return safety / mean;
}

OtacSimulator::OtacSimulator(OtacConfig config, std::vector<double> transmit_powers)
    : config_(config), powers_(std::move(transmit_powers)) {
  config_.validate();
  if (powers_.empty()) throw ConfigError("OtacSimulator: empty transmit powers");
  for (double p : powers_)
    if (!(p > 0.0)) throw ConfigError("OtacSimulator: powers must be > 0");
  const std::size_t n = powers_.size();
  normalization_history_.resize(n);
  last_y_prime_.assign(n, 0.0);
  receive_rounds_.assign(n, 0);
}

std::vector<ParameterVector> OtacSimulator::mix(const net::NetworkSnapshot& snapshot,
                                                const std::vector<ParameterVector>& lambda,
                                                double beta, Rng& rng) {
  const int n = snapshot.n_agents;
  if (static_cast<int>(lambda.size()) != n || static_cast<int>(powers_.size()) != n)
    throw ConfigError("OtacSimulator::mix: size mismatch");
  const int M = static_cast<int>(lambda[0].size());
  const int B = config_.B;
  const int Bp = config_.B_prime;
  const double dmin = config_.delta_min;
  const double dmax = config_.delta_max;

  // Streams are pre-split per agent so draw order never depends on how the
  // per-agent work is scheduled.
  std::vector<std::uint64_t> tx_seed(n), rx_seed(n);
  for (int k = 0; k < n; ++k) tx_seed[k] = rng();
  for (int r = 0; r < n; ++r) rx_seed[r] = rng();

  // Shared symbol tables: each transmitter encodes once, all receivers hear
  // the same symbols through their own channels.
  std::vector<Eigen::MatrixXcd> data_tx(n);
  std::vector<Eigen::VectorXcd> burst_tx(n);
  for (int k = 0; k < n; ++k) {
    if (!snapshot.is_transmitter[k]) continue;
    if (static_cast<int>(lambda[k].size()) != M)
      throw ConfigError("OtacSimulator::mix: inconsistent state dimension");
    Rng tx(tx_seed[k]);
    data_tx[k].resize(M, B);
    for (int m = 0; m < M; ++m) {
      const auto symbols = encode(lambda[k](m), powers_[k], dmin, dmax, B, tx);
      for (int b = 0; b < B; ++b) data_tx[k](m, b) = symbols[b];
    }
    burst_tx[k].resize(Bp);
    const auto burst = encode(dmax, powers_[k], dmin, dmax, Bp, tx);
    for (int b = 0; b < Bp; ++b) burst_tx[k](b) = burst[b];
  }

  telemetry_.clear();
  std::vector<ParameterVector> psi(n);
  for (int r = 0; r < n; ++r) {
    const bool receives = snapshot.full_duplex || !snapshot.is_transmitter[r];
    if (!receives) {
      psi[r] = lambda[r];  // half-duplex transmitters sit this round out
      continue;
    }

    const auto& nbrs = snapshot.in_neighbors[r];
    Rng rx(rx_seed[r]);
    const double sigma2 = config_.noise_power;

    // Per-edge gain scales are hoisted out of the symbol loop; the draws use
    // the ziggurat sampler, which is what keeps symbol-rate simulation cheap.
    std::vector<double> gain_scale(nbrs.size());
    for (std::size_t j = 0; j < nbrs.size(); ++j) {
      const double d = snapshot.distances(nbrs[j], r);
      gain_scale[j] = std::sqrt(1.0 / (2.0 * d * d));
    }
    const double noise_scale = std::sqrt(sigma2 / 2.0);

    Eigen::MatrixXcd q(M, B);
    std::vector<Complex> gains(nbrs.size());
    std::vector<Complex> symbols(nbrs.size());
    for (int m = 0; m < M; ++m) {
      for (int b = 0; b < B; ++b) {
        for (std::size_t j = 0; j < nbrs.size(); ++j) {
          gains[j] = Complex(gain_scale[j] * standard_normal(rx), gain_scale[j] * standard_normal(rx));
          symbols[j] = data_tx[nbrs[j]](m, b);
        }
        const Complex noise(noise_scale * standard_normal(rx), noise_scale * standard_normal(rx));
        q(m, b) = wmac_superpose(gains, symbols, noise);
      }
    }

    ++receive_rounds_[r];
    const bool fresh_burst = normalization_history_[r].empty() ||
                             (receive_rounds_[r] - 1) % config_.normalization_every == 0;
    double y_prime = last_y_prime_[r];
    Eigen::VectorXcd q_burst(Bp);
    if (fresh_burst) {
      for (int b = 0; b < Bp; ++b) {
        for (std::size_t j = 0; j < nbrs.size(); ++j) {
          gains[j] = Complex(gain_scale[j] * standard_normal(rx), gain_scale[j] * standard_normal(rx));
          symbols[j] = burst_tx[nbrs[j]](b);
        }
        const Complex noise(noise_scale * standard_normal(rx), noise_scale * standard_normal(rx));
        q_burst(b) = wmac_superpose(gains, symbols, noise);
      }
    }

    double gamma = config_.gamma_fixed;
    if (config_.gamma_mode == OtacConfig::GammaMode::estimated)
      gamma = estimate_gamma(normalization_history_[r], config_.gamma_window,
                             config_.gamma_safety, config_.gamma_bootstrap);

    ReceiverStatistics stats;
    if (fresh_burst) {
      stats = receiver_statistics(q, q_burst, config_.assumed_noise_power(), dmin, dmax);
      y_prime = stats.y_prime;
      normalization_history_[r].push_back(y_prime);
      while (static_cast<int>(normalization_history_[r].size()) > config_.gamma_window)
        normalization_history_[r].pop_front();
      last_y_prime_[r] = y_prime;
    } else {
      // Amortized normalization: reuse the last burst statistic with fresh data
      // symbols.
      const double delta = dmax - dmin;
      const double noise = config_.assumed_noise_power();
      stats.y_prime = y_prime;
      stats.y = (delta * q.array().abs2().rowwise().mean() - delta * noise +
                 dmin * y_prime)
                    .matrix();
    }

    psi[r] = otac_update(lambda[r], stats, gamma, beta);
    telemetry_.push_back({r, stats.y_prime, gamma,
                          sigma2 > 0.0 ? std::max(stats.y_prime, 0.0) / sigma2 : 0.0});
  }
  return psi;
}

}  // namespace airopt::otac
