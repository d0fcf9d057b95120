#include "airopt/consensus.hpp"

#include <cmath>

#include "airopt/errors.hpp"

namespace airopt::consensus {

double OutageModel::probability(double distance) const {
  if (distance < 0.0) throw ConfigError("OutageModel: negative distance");
  if (!(ref_distance > 0.0) || !(ref_probability > 0.0) || !(ref_probability < 1.0))
    throw ConfigError("OutageModel: need ref_distance > 0 and ref_probability in (0, 1)");
  const double ratio = distance / ref_distance;
  return 1.0 - std::exp(-ratio * ratio * std::log(1.0 / (1.0 - ref_probability)));
}

CommunicationRealization cen_realize(int n_agents) {
  if (n_agents < 1) throw ConfigError("cen_realize: n_agents must be >= 1");
  CommunicationRealization real;
  real.rows.resize(n_agents);
  const double w = 1.0 / n_agents;
  for (int r = 0; r < n_agents; ++r) {
    real.rows[r].reserve(n_agents);
    for (int k = 0; k < n_agents; ++k) real.rows[r].emplace_back(k, w);
  }
  return real;
}

CommunicationRealization noc_realize(int n_agents) {
  if (n_agents < 1) throw ConfigError("noc_realize: n_agents must be >= 1");
  CommunicationRealization real;
  real.rows.resize(n_agents);
  for (int r = 0; r < n_agents; ++r) real.rows[r].emplace_back(r, 1.0);
  return real;
}

CommunicationRealization bdc_realize(const net::NetworkSnapshot& snapshot,
                                     const OutageModel& outage, Rng& rng) {
  const int n = snapshot.n_agents;
  CommunicationRealization real;
  real.rows.resize(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 0; r < n; ++r) {
    std::vector<int> survivors;
    for (int k : snapshot.in_neighbors[r]) {
      const double p = outage.probability(snapshot.distances(k, r));
      if (unit(rng) >= p) survivors.push_back(k);
    }
    const double w = 1.0 / (static_cast<double>(survivors.size()) + 1.0);
    real.rows[r].emplace_back(r, w);
    for (int k : survivors) real.rows[r].emplace_back(k, w);
  }
  return real;
}

std::vector<ParameterVector> apply_mix(const CommunicationRealization& realization,
                                       const std::vector<ParameterVector>& lambda, double beta) {
  const int n = static_cast<int>(lambda.size());
  if (static_cast<int>(realization.rows.size()) != n)
    throw ConfigError("apply_mix: realization/state size mismatch");
  if (!(beta >= 0.0) || !(beta <= 1.0)) throw ConfigError("apply_mix: beta must lie in [0, 1]");
  if (!realization.noise.empty() && static_cast<int>(realization.noise.size()) != n)
    throw ConfigError("apply_mix: noise size mismatch");

  std::vector<ParameterVector> psi(n);
  for (int r = 0; r < n; ++r) {
    // An agent that only hears itself keeps its state bit-for-bit: the convex
    // recombination of a vector with itself must not introduce rounding.
    if (realization.noise.empty() && realization.rows[r].size() == 1 &&
        realization.rows[r][0].first == r && realization.rows[r][0].second == 1.0) {
      psi[r] = lambda[r];
      continue;
    }
    ParameterVector received = ParameterVector::Zero(lambda[r].size());
    for (const auto& [source, weight] : realization.rows[r]) {
      if (source < 0 || source >= n) throw ConfigError("apply_mix: source out of range");
      received += weight * lambda[source];
    }
    if (!realization.noise.empty()) received += realization.noise[r];
    psi[r] = (1.0 - beta) * lambda[r] + beta * received;
  }
  return psi;
}

std::vector<ParameterVector> mix(Scheme scheme, const net::NetworkSnapshot& snapshot,
                                 const std::vector<ParameterVector>& lambda, double beta,
                                 Rng& rng, const OutageModel& outage) {
  if (static_cast<int>(lambda.size()) != snapshot.n_agents)
    throw ConfigError("mix: state/snapshot size mismatch");
  switch (scheme) {
    case Scheme::cen:
      return apply_mix(cen_realize(snapshot.n_agents), lambda, beta);
    case Scheme::noc:
      return apply_mix(noc_realize(snapshot.n_agents), lambda, beta);
    case Scheme::bdc:
      return apply_mix(bdc_realize(snapshot, outage, rng), lambda, beta);
    case Scheme::otac:
      throw ConfigError("mix: OTAC requires the symbol-level simulator");
  }
  throw ConfigError("mix: unknown scheme");
}

}  // namespace airopt::consensus
