#ifndef AIROPT_OTAC_HPP
#define AIROPT_OTAC_HPP

#include <complex>
#include <deque>
#include <vector>

#include "airopt/core.hpp"
#include "airopt/network.hpp"
#include "airopt/rng.hpp"

namespace airopt::otac {

using Complex = std::complex<double>;

// Analog over-the-air consensus parameters. Each coordinate is carried by B
// random-phase symbols; a burst of B_prime extra symbols sent at the box upper
// bound normalizes the unknown channel-power sum at the receiver.
struct OtacConfig {
  int B = 20;
  int B_prime = 40;
  double noise_power = 1.2589254117941673e-4;  // receiver noise, watts
  double delta_min = 0.0;                      // box bounds the encoder maps from
  double delta_max = 1.0;
  // Negative means receivers use the exact noise power for the correction term.
  double noise_power_assumed = -1.0;

  enum class GammaMode { fixed, estimated };
  GammaMode gamma_mode = GammaMode::estimated;
  double gamma_fixed = 0.0;      // used when gamma_mode == fixed
  int gamma_window = 50;         // trailing normalization samples kept per agent
  double gamma_safety = 0.9;     // rho in (0, 1); gamma = rho / mean(window)
  double gamma_bootstrap = 1.0;  // fallback before any normalization statistic exists
  int normalization_every = 1;   // fresh burst every n-th receive round

  void validate() const;
  double assumed_noise_power() const {
    return noise_power_assumed < 0.0 ? noise_power : noise_power_assumed;
  }
};

// Transmit symbols for one coordinate: s(b) = sqrt(g) * U(b) with unit-modulus
// random-phase U and power mapping g = power * (lambda - delta_min) / (delta_max
// - delta_min). lambda must already lie inside the box.
std::vector<Complex> encode(double lambda, double power, double delta_min, double delta_max,
                            int B, Rng& rng);

// One symbol slot of the wireless multiple-access channel: the receiver sees
// the gain-weighted sum of all simultaneous transmissions plus noise.
Complex wmac_superpose(const std::vector<Complex>& gains, const std::vector<Complex>& symbols,
                       Complex noise);

struct ReceiverStatistics {
  Eigen::VectorXd y;      // per-coordinate energy statistic, before gamma scaling
  double y_prime = 0.0;   // normalization statistic from the burst
};

// Energy detection per the analog protocol: with Delta = delta_max - delta_min,
//   y_prime = mean_b |q'(b)|^2 - Delta * noise_power
//   y_m     = (Delta / B) sum_b |q_m(b)|^2 - Delta * noise_power + delta_min * y_prime.
ReceiverStatistics receiver_statistics(const Eigen::MatrixXcd& data_symbols,
                                       const Eigen::VectorXcd& burst_symbols,
                                       double noise_power, double delta_min, double delta_max);

// psi = (1 - beta * gamma * max(y_prime, 0)) * lambda + beta * gamma * y.
ParameterVector otac_update(const ParameterVector& lambda, const ReceiverStatistics& stats,
                            double gamma, double beta);

// gamma = safety / mean(trailing window of y_prime samples); the bootstrap is
// returned until a sample exists or when the mean is not positive.
double estimate_gamma(const std::deque<double>& history, int window, double safety,
                      double bootstrap);

struct ReceiverTelemetry {
  int agent = -1;
  double y_prime = 0.0;
  double gamma = 0.0;
  double snr_estimate = 0.0;  // normalization statistic over noise power
};

// Drives one full combine step over the air: transmitters encode a shared
// symbol table, every receiver draws its own channel gains per symbol and
// noise, then applies the analog update. Transmitters keep their local state.
class OtacSimulator {
 public:
  OtacSimulator(OtacConfig config, std::vector<double> transmit_powers);

  std::vector<ParameterVector> mix(const net::NetworkSnapshot& snapshot,
                                   const std::vector<ParameterVector>& lambda, double beta,
                                   Rng& rng);

  const std::vector<ReceiverTelemetry>& last_telemetry() const { return telemetry_; }
  const OtacConfig& config() const { return config_; }

 private:
  OtacConfig config_;
  std::vector<double> powers_;
  std::vector<std::deque<double>> normalization_history_;
  std::vector<double> last_y_prime_;
  std::vector<int> receive_rounds_;
  std::vector<ReceiverTelemetry> telemetry_;
};

}  // namespace airopt::otac

#endif
