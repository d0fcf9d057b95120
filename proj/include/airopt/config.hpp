#ifndef AIROPT_CONFIG_HPP
#define AIROPT_CONFIG_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "airopt/consensus.hpp"
#include "airopt/core.hpp"
#include "airopt/network.hpp"
#include "airopt/otac.hpp"

namespace airopt {

// The five information-exchange schemes of the experiment harness. otacs is
// the analog scheme with the sparsity-promoting local step; cen and noc keep
// that local step too, while otac and bdc run the plain one.
enum class SchemeId { otacs, otac, bdc, noc, cen };

SchemeId parse_scheme(const std::string& name);
std::string scheme_name(SchemeId scheme);

struct SchemeTraits {
  consensus::Scheme mixer;
  bool sparsity = false;
  double box_lower = -1.0;
  double box_upper = 1.0;
  bool sign_split = false;
};

SchemeTraits scheme_traits(SchemeId scheme);

// Full experiment description. Every field has a default; load_config overlays
// a JSON file on top of the defaults and validate() enforces cross-field
// consistency. Optional fields left unset fall back to the scheme presets.
struct ExperimentConfig {
  struct Experiment {
    int n_agents = 100;
    int model_dim = 50;
    long horizon = 10000;
    int runs = 1;
    std::uint64_t master_seed = 1;
    SchemeId scheme = SchemeId::otacs;
    int threads = 1;
    std::string output_dir;  // empty disables file output
    std::string init = "uniform";  // "uniform" or "zeros" inside the box
  } experiment;

  struct Local {
    double mu = 0.5;
    double varsigma = 0.01;
    StepSchedule step = StepSchedule::staircase(50, 0.51);
    PerturbationSchedule perturbation{1e-6, 100, 1.0};
    std::optional<bool> sparsity;                       // unset: scheme preset
    std::optional<std::pair<double, double>> box;       // unset: scheme preset
  } local;

  struct Network {
    std::array<double, 3> domain{1000.0, 1000.0, 1000.0};
    std::pair<double, double> power_range{100.0, 1000.0};  // log-uniform per agent
    double rx_threshold = 1.26e-3;
    bool half_duplex = true;
    double min_weight = 1e-3;
    bool dump_snapshots = false;
  } network;

  struct Otac {
    int B = 20;
    int B_prime = 40;
    double noise_dbm = -9.0;
    std::string gamma_mode = "estimated";  // or "fixed"
    double gamma_fixed = 0.0;
    int gamma_window = 50;
    double gamma_safety = 0.9;
    double gamma_bootstrap = 0.0;  // 0 = derive from network scale
    int normalization_every = 1;
    bool telemetry = false;
  } otac;

  consensus::OutageModel bdc;

  struct Problem {
    std::string kind = "learning";  // or "stationary"

    // learning
    std::string dataset_kind = "synthetic";  // or "csv"
    std::uint64_t dataset_seed = 7;
    int field_bumps = 3;
    std::string dataset_path;
    double kernel_bandwidth = 300.0;
    double slab_halfwidth = 0.6;
    double noise_std = 0.3;
    double relocation_mean_gap = 1.0;
    int testset_size = 200;
    double nmse_min_abs = 0.05;
    bool export_testset = false;

    // stationary
    std::uint64_t stationary_seed = 3;
    double halfwidth_fraction = 0.01;  // slab halfwidth / box diameter
    double target_margin = 0.1;        // keeps the common point off the box faces
  } problem;

  struct Diagnostics {
    bool record_lyapunov = false;
    bool record_per_agent_cost = false;
  } diagnostics;

  // Scheme presets with explicit overrides applied.
  bool resolved_sparsity() const;
  BoxSet resolved_box() const;
  bool resolved_sign_split() const;
  // Agent-state dimension. model_dim counts distinct kernel features; on the
  // learning problem a sign-split scheme carries the negated copy of every
  // feature as extra coordinates, so its state is twice as long.
  int resolved_state_dim() const;
  double noise_power_watts() const;
  double resolved_gamma_bootstrap() const;
  otac::OtacConfig make_otac_config() const;

  void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);
void save_config(const ExperimentConfig& config, const std::string& path);

}  // namespace airopt

#endif
