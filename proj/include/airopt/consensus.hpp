#ifndef AIROPT_CONSENSUS_HPP
#define AIROPT_CONSENSUS_HPP

#include <utility>
#include <vector>

#include "airopt/core.hpp"
#include "airopt/network.hpp"
#include "airopt/rng.hpp"

namespace airopt::consensus {

// Information-exchange schemes. OTACS reuses the OTAC channel; the sparsity
// perturbation that distinguishes it lives in the local step, so it does not
// appear here.
enum class Scheme { cen, noc, bdc, otac };

// Realized linear exchange: receiver r combines sum_k weight * lambda_k plus
// additive noise. Weights are scalars because every scheme here mixes all
// coordinates identically.
struct CommunicationRealization {
  std::vector<std::vector<std::pair<int, double>>> rows;  // rows[r] = {(source, weight)}
  std::vector<ParameterVector> noise;                     // empty means noiseless
};

// Rayleigh-fading packet loss for digital broadcast: a packet over distance d
// is lost with probability 1 - (1 - ref_probability)^((d / ref_distance)^2),
// the outage law of an exponential SNR with mean proportional to 1/d^2.
struct OutageModel {
  double ref_distance = 500.0;
  double ref_probability = 0.2;

  double probability(double distance) const;
};

CommunicationRealization cen_realize(int n_agents);
CommunicationRealization noc_realize(int n_agents);

// Digital broadcast: every edge carries the packet independently with its
// survival probability; each receiver averages uniformly over itself and the
// surviving in-neighbors. Decoded packets are exact, so noise stays zero.
CommunicationRealization bdc_realize(const net::NetworkSnapshot& snapshot,
                                     const OutageModel& outage, Rng& rng);

// psi_r = (1 - beta) lambda_r + beta * (realized row applied to lambda).
std::vector<ParameterVector> apply_mix(const CommunicationRealization& realization,
                                       const std::vector<ParameterVector>& lambda, double beta);

// Combine step for the schemes without channel state. OTAC needs the symbol
// level simulator and is dispatched separately.
std::vector<ParameterVector> mix(Scheme scheme, const net::NetworkSnapshot& snapshot,
                                 const std::vector<ParameterVector>& lambda, double beta,
                                 Rng& rng, const OutageModel& outage = {});

}  // namespace airopt::consensus

#endif
