#include "airopt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "airopt/errors.hpp"

namespace airopt {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::string& where,
                         const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "' in " + where);
}

StepSchedule parse_step(const json& j) {
  reject_unknown_keys(j, "local.step", {"kind", "alpha", "block"});
  const std::string kind = j.value("kind", "staircase_power_law");
  const double alpha = j.value("alpha", 0.51);
  if (kind == "power_law") return StepSchedule::power_law(alpha);
  if (kind == "staircase_power_law")
    return StepSchedule::staircase(j.value("block", 50L), alpha);
  throw ConfigError("config: unknown step schedule kind '" + kind + "'");
}

json step_to_json(const StepSchedule& s) {
  json j;
  j["kind"] = s.kind == StepSchedule::Kind::power_law ? "power_law" : "staircase_power_law";
  j["alpha"] = s.alpha;
  if (s.kind == StepSchedule::Kind::staircase_power_law) j["block"] = s.block;
  return j;
}

}  // namespace

SchemeId parse_scheme(const std::string& name) {
  if (name == "OTACS") return SchemeId::otacs;
  if (name == "OTAC") return SchemeId::otac;
  if (name == "BDC") return SchemeId::bdc;
  if (name == "NOC") return SchemeId::noc;
  if (name == "CEN") return SchemeId::cen;
  throw ConfigError("config: unknown scheme '" + name + "' (use OTACS|OTAC|BDC|NOC|CEN)");
}

std::string scheme_name(SchemeId scheme) {
  switch (scheme) {
    case SchemeId::otacs: return "OTACS";
    case SchemeId::otac: return "OTAC";
    case SchemeId::bdc: return "BDC";
    case SchemeId::noc: return "NOC";
    case SchemeId::cen: return "CEN";
  }
  throw ConfigError("scheme_name: invalid scheme");
}

SchemeTraits scheme_traits(SchemeId scheme) {
  // Sparsity-promoting schemes work on the sign-split feature map, whose
  // coefficients live in [0, 1]; the plain schemes use signed coefficients.
  switch (scheme) {
    case SchemeId::otacs: return {consensus::Scheme::otac, true, 0.0, 1.0, true};
    case SchemeId::otac: return {consensus::Scheme::otac, false, -1.0, 1.0, false};
    case SchemeId::bdc: return {consensus::Scheme::bdc, false, -1.0, 1.0, false};
    case SchemeId::noc: return {consensus::Scheme::noc, true, 0.0, 1.0, true};
    case SchemeId::cen: return {consensus::Scheme::cen, true, 0.0, 1.0, true};
  }
  throw ConfigError("scheme_traits: invalid scheme");
}

bool ExperimentConfig::resolved_sparsity() const {
  return local.sparsity.value_or(scheme_traits(experiment.scheme).sparsity);
}

BoxSet ExperimentConfig::resolved_box() const {
  const auto traits = scheme_traits(experiment.scheme);
  const auto [lo, hi] = local.box.value_or(std::pair{traits.box_lower, traits.box_upper});
  return BoxSet(lo, hi, resolved_state_dim());
}

int ExperimentConfig::resolved_state_dim() const {
  // The duplicated-negated feature copy exists only where features exist; a
  // stationary problem estimates the model coordinates directly.
  if (problem.kind == "learning" && resolved_sign_split()) return 2 * experiment.model_dim;
  return experiment.model_dim;
}

bool ExperimentConfig::resolved_sign_split() const {
  if (local.box) {
    // An explicit box overrides the preset; split features only make sense
    // for a nonnegative box.
    return local.box->first >= 0.0;
  }
  return scheme_traits(experiment.scheme).sign_split;
}

double ExperimentConfig::noise_power_watts() const {
  return std::pow(10.0, (otac.noise_dbm - 30.0) / 10.0);
}

double ExperimentConfig::resolved_gamma_bootstrap() const {
  if (otac.gamma_bootstrap > 0.0) return otac.gamma_bootstrap;
  // Conservative first guess: about a quarter of the agents heard at a typical
  // received power an order of magnitude above the edge threshold.
  const double expected_neighbors = std::max(1.0, experiment.n_agents / 4.0);
  const double typical_rx_power = 10.0 * network.rx_threshold;
  return 0.5 / (expected_neighbors * typical_rx_power);
}

otac::OtacConfig ExperimentConfig::make_otac_config() const {
  const BoxSet box = resolved_box();
  otac::OtacConfig cfg;
  cfg.B = otac.B;
  cfg.B_prime = otac.B_prime;
  cfg.noise_power = noise_power_watts();
  cfg.delta_min = box.lower;
  cfg.delta_max = box.upper;
  cfg.gamma_mode = otac.gamma_mode == "fixed" ? otac::OtacConfig::GammaMode::fixed
                                              : otac::OtacConfig::GammaMode::estimated;
  cfg.gamma_fixed = otac.gamma_fixed;
  cfg.gamma_window = otac.gamma_window;
  cfg.gamma_safety = otac.gamma_safety;
  cfg.gamma_bootstrap = resolved_gamma_bootstrap();
  cfg.normalization_every = otac.normalization_every;
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (experiment.n_agents < 1) throw ConfigError("config: n_agents must be >= 1");
  if (experiment.model_dim < 1) throw ConfigError("config: model_dim must be >= 1");
  if (experiment.horizon < 1) throw ConfigError("config: horizon must be >= 1");
  if (experiment.runs < 1) throw ConfigError("config: runs must be >= 1");
  if (experiment.threads < 1) throw ConfigError("config: threads must be >= 1");
  if (experiment.init != "uniform" && experiment.init != "zeros")
    throw ConfigError("config: init must be 'uniform' or 'zeros'");
  if (!(local.mu > 0.0) || !(local.mu < 2.0)) throw ConfigError("config: mu must lie in (0, 2)");
  if (!(local.varsigma > 0.0)) throw ConfigError("config: varsigma must be > 0");

  const BoxSet box = resolved_box();  // throws on a degenerate box
  if (experiment.init == "zeros" && !(box.lower <= 0.0 && box.upper >= 0.0))
    throw ConfigError("config: zeros init lies outside the box");

  for (double side : network.domain)
    if (!(side > 0.0)) throw ConfigError("config: domain sides must be > 0");
  if (!(network.power_range.first > 0.0) ||
      !(network.power_range.second >= network.power_range.first))
    throw ConfigError("config: power_range must be 0 < lo <= hi");
  if (!(network.rx_threshold > 0.0)) throw ConfigError("config: rx_threshold must be > 0");
  if (!(network.min_weight > 0.0) || !(network.min_weight <= 1.0))
    throw ConfigError("config: min_weight must lie in (0, 1]");

  if (otac.gamma_mode != "estimated" && otac.gamma_mode != "fixed")
    throw ConfigError("config: gamma mode must be 'estimated' or 'fixed'");
  make_otac_config();  // runs the analog-module validation

  bdc.probability(0.0);  // validates the outage parameters

  if (problem.kind == "learning") {
    if (problem.dataset_kind != "synthetic" && problem.dataset_kind != "csv")
      throw ConfigError("config: dataset kind must be 'synthetic' or 'csv'");
    if (problem.dataset_kind == "csv" && problem.dataset_path.empty())
      throw ConfigError("config: csv dataset needs a path");
    if (problem.field_bumps < 1) throw ConfigError("config: field_bumps must be >= 1");
    if (!(problem.kernel_bandwidth > 0.0))
      throw ConfigError("config: kernel_bandwidth must be > 0");
    if (!(problem.slab_halfwidth >= 0.0))
      throw ConfigError("config: slab_halfwidth must be >= 0");
    if (!(problem.noise_std >= 0.0)) throw ConfigError("config: noise_std must be >= 0");
    if (!(problem.relocation_mean_gap >= 1.0))
      throw ConfigError("config: relocation_mean_gap must be >= 1");
    if (problem.testset_size < 1) throw ConfigError("config: testset_size must be >= 1");
    if (!(problem.nmse_min_abs > 0.0)) throw ConfigError("config: nmse_min_abs must be > 0");
  } else if (problem.kind == "stationary") {
    if (!(problem.halfwidth_fraction > 0.0))
      throw ConfigError("config: halfwidth_fraction must be > 0");
    if (!(problem.target_margin >= 0.0) || !(problem.target_margin < 0.5))
      throw ConfigError("config: target_margin must lie in [0, 0.5)");
  } else {
    throw ConfigError("config: problem kind must be 'learning' or 'stationary'");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown_keys(j, "config root",
                      {"experiment", "local", "network", "otac", "bdc", "problem",
                       "diagnostics"});

  ExperimentConfig cfg;
  if (j.contains("experiment")) {
    const auto& e = j["experiment"];
    reject_unknown_keys(e, "experiment",
                        {"n_agents", "model_dim", "horizon", "runs", "master_seed", "scheme",
                         "threads", "output_dir", "init"});
    cfg.experiment.n_agents = e.value("n_agents", cfg.experiment.n_agents);
    cfg.experiment.model_dim = e.value("model_dim", cfg.experiment.model_dim);
    cfg.experiment.horizon = e.value("horizon", cfg.experiment.horizon);
    cfg.experiment.runs = e.value("runs", cfg.experiment.runs);
    cfg.experiment.master_seed = e.value("master_seed", cfg.experiment.master_seed);
    if (e.contains("scheme")) cfg.experiment.scheme = parse_scheme(e["scheme"].get<std::string>());
    cfg.experiment.threads = e.value("threads", cfg.experiment.threads);
    cfg.experiment.output_dir = e.value("output_dir", cfg.experiment.output_dir);
    cfg.experiment.init = e.value("init", cfg.experiment.init);
  }
  if (j.contains("local")) {
    const auto& l = j["local"];
    reject_unknown_keys(l, "local",
                        {"mu", "varsigma", "step", "perturbation", "sparsity", "box"});
    cfg.local.mu = l.value("mu", cfg.local.mu);
    cfg.local.varsigma = l.value("varsigma", cfg.local.varsigma);
    if (l.contains("step")) cfg.local.step = parse_step(l["step"]);
    if (l.contains("perturbation")) {
      const auto& p = l["perturbation"];
      reject_unknown_keys(p, "local.perturbation", {"scale0", "block", "exponent"});
      cfg.local.perturbation = PerturbationSchedule(
          p.value("scale0", 1e-6), p.value("block", 100L), p.value("exponent", 1.0));
    }
    if (l.contains("sparsity") && !l["sparsity"].is_null())
      cfg.local.sparsity = l["sparsity"].get<bool>();
    if (l.contains("box") && !l["box"].is_null()) {
      const auto& b = l["box"];
      if (!b.is_array() || b.size() != 2)
        throw ConfigError("config: local.box must be [lower, upper]");
      cfg.local.box = std::pair{b[0].get<double>(), b[1].get<double>()};
    }
  }
  if (j.contains("network")) {
    const auto& n = j["network"];
    reject_unknown_keys(n, "network",
                        {"domain", "power_range", "rx_threshold", "duplex", "min_weight",
                         "dump_snapshots"});
    if (n.contains("domain")) {
      const auto& d = n["domain"];
      if (!d.is_array() || d.size() != 3)
        throw ConfigError("config: network.domain must have 3 sides");
      for (int i = 0; i < 3; ++i) cfg.network.domain[i] = d[i].get<double>();
    }
    if (n.contains("power_range")) {
      const auto& p = n["power_range"];
      if (!p.is_array() || p.size() != 2)
        throw ConfigError("config: network.power_range must be [lo, hi]");
      cfg.network.power_range = {p[0].get<double>(), p[1].get<double>()};
    }
    cfg.network.rx_threshold = n.value("rx_threshold", cfg.network.rx_threshold);
    if (n.contains("duplex")) {
      const std::string d = n["duplex"].get<std::string>();
      if (d != "half" && d != "full") throw ConfigError("config: duplex must be 'half' or 'full'");
      cfg.network.half_duplex = d == "half";
    }
    cfg.network.min_weight = n.value("min_weight", cfg.network.min_weight);
    cfg.network.dump_snapshots = n.value("dump_snapshots", cfg.network.dump_snapshots);
  }
  if (j.contains("otac")) {
    const auto& o = j["otac"];
    reject_unknown_keys(o, "otac",
                        {"B", "B_prime", "noise_dbm", "gamma", "normalization_every",
                         "telemetry"});
    cfg.otac.B = o.value("B", cfg.otac.B);
    cfg.otac.B_prime = o.value("B_prime", 2 * cfg.otac.B);
    cfg.otac.noise_dbm = o.value("noise_dbm", cfg.otac.noise_dbm);
    if (o.contains("gamma")) {
      const auto& g = o["gamma"];
      reject_unknown_keys(g, "otac.gamma", {"mode", "fixed", "window", "safety", "bootstrap"});
      cfg.otac.gamma_mode = g.value("mode", cfg.otac.gamma_mode);
      cfg.otac.gamma_fixed = g.value("fixed", cfg.otac.gamma_fixed);
      cfg.otac.gamma_window = g.value("window", cfg.otac.gamma_window);
      cfg.otac.gamma_safety = g.value("safety", cfg.otac.gamma_safety);
      cfg.otac.gamma_bootstrap = g.value("bootstrap", cfg.otac.gamma_bootstrap);
    }
    cfg.otac.normalization_every = o.value("normalization_every", cfg.otac.normalization_every);
    cfg.otac.telemetry = o.value("telemetry", cfg.otac.telemetry);
  }
  if (j.contains("bdc")) {
    const auto& b = j["bdc"];
    reject_unknown_keys(b, "bdc", {"outage_ref_distance", "outage_ref_probability"});
    cfg.bdc.ref_distance = b.value("outage_ref_distance", cfg.bdc.ref_distance);
    cfg.bdc.ref_probability = b.value("outage_ref_probability", cfg.bdc.ref_probability);
  }
  if (j.contains("problem")) {
    const auto& p = j["problem"];
    reject_unknown_keys(p, "problem",
                        {"kind", "dataset", "kernel_bandwidth", "slab_halfwidth", "noise_std",
                         "relocation_mean_gap", "testset_size", "nmse_min_abs", "export_testset",
                         "seed", "halfwidth_fraction", "target_margin"});
    cfg.problem.kind = p.value("kind", cfg.problem.kind);
    if (p.contains("dataset")) {
      const auto& d = p["dataset"];
      reject_unknown_keys(d, "problem.dataset", {"kind", "seed", "n_bumps", "path"});
      cfg.problem.dataset_kind = d.value("kind", cfg.problem.dataset_kind);
      cfg.problem.dataset_seed = d.value("seed", cfg.problem.dataset_seed);
      cfg.problem.field_bumps = d.value("n_bumps", cfg.problem.field_bumps);
      cfg.problem.dataset_path = d.value("path", cfg.problem.dataset_path);
    }
    cfg.problem.kernel_bandwidth = p.value("kernel_bandwidth", cfg.problem.kernel_bandwidth);
    cfg.problem.slab_halfwidth = p.value("slab_halfwidth", cfg.problem.slab_halfwidth);
    cfg.problem.noise_std = p.value("noise_std", cfg.problem.noise_std);
    cfg.problem.relocation_mean_gap =
        p.value("relocation_mean_gap", cfg.problem.relocation_mean_gap);
    cfg.problem.testset_size = p.value("testset_size", cfg.problem.testset_size);
    cfg.problem.nmse_min_abs = p.value("nmse_min_abs", cfg.problem.nmse_min_abs);
    cfg.problem.export_testset = p.value("export_testset", cfg.problem.export_testset);
    cfg.problem.stationary_seed = p.value("seed", cfg.problem.stationary_seed);
    cfg.problem.halfwidth_fraction = p.value("halfwidth_fraction", cfg.problem.halfwidth_fraction);
    cfg.problem.target_margin = p.value("target_margin", cfg.problem.target_margin);
  }
  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    reject_unknown_keys(d, "diagnostics", {"record_lyapunov", "record_per_agent_cost"});
    cfg.diagnostics.record_lyapunov = d.value("record_lyapunov", false);
    cfg.diagnostics.record_per_agent_cost = d.value("record_per_agent_cost", false);
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = {{"n_agents", cfg.experiment.n_agents},
                     {"model_dim", cfg.experiment.model_dim},
                     {"horizon", cfg.experiment.horizon},
                     {"runs", cfg.experiment.runs},
                     {"master_seed", cfg.experiment.master_seed},
                     {"scheme", scheme_name(cfg.experiment.scheme)},
                     {"threads", cfg.experiment.threads},
                     {"output_dir", cfg.experiment.output_dir},
                     {"init", cfg.experiment.init}};
  j["local"] = {{"mu", cfg.local.mu},
                {"varsigma", cfg.local.varsigma},
                {"step", step_to_json(cfg.local.step)},
                {"perturbation",
                 {{"scale0", cfg.local.perturbation.scale0},
                  {"block", cfg.local.perturbation.block},
                  {"exponent", cfg.local.perturbation.exponent}}}};
  if (cfg.local.sparsity) j["local"]["sparsity"] = *cfg.local.sparsity;
  if (cfg.local.box) j["local"]["box"] = {cfg.local.box->first, cfg.local.box->second};
  j["network"] = {{"domain", cfg.network.domain},
                  {"power_range", {cfg.network.power_range.first, cfg.network.power_range.second}},
                  {"rx_threshold", cfg.network.rx_threshold},
                  {"duplex", cfg.network.half_duplex ? "half" : "full"},
                  {"min_weight", cfg.network.min_weight},
                  {"dump_snapshots", cfg.network.dump_snapshots}};
  j["otac"] = {{"B", cfg.otac.B},
               {"B_prime", cfg.otac.B_prime},
               {"noise_dbm", cfg.otac.noise_dbm},
               {"gamma",
                {{"mode", cfg.otac.gamma_mode},
                 {"fixed", cfg.otac.gamma_fixed},
                 {"window", cfg.otac.gamma_window},
                 {"safety", cfg.otac.gamma_safety},
                 {"bootstrap", cfg.otac.gamma_bootstrap}}},
               {"normalization_every", cfg.otac.normalization_every},
               {"telemetry", cfg.otac.telemetry}};
  j["bdc"] = {{"outage_ref_distance", cfg.bdc.ref_distance},
              {"outage_ref_probability", cfg.bdc.ref_probability}};
  j["problem"] = {{"kind", cfg.problem.kind}};
  if (cfg.problem.kind == "learning") {
    json d = {{"kind", cfg.problem.dataset_kind}};
    if (cfg.problem.dataset_kind == "synthetic") {
      d["seed"] = cfg.problem.dataset_seed;
      d["n_bumps"] = cfg.problem.field_bumps;
    } else {
      d["path"] = cfg.problem.dataset_path;
    }
    j["problem"]["dataset"] = d;
    j["problem"]["kernel_bandwidth"] = cfg.problem.kernel_bandwidth;
    j["problem"]["slab_halfwidth"] = cfg.problem.slab_halfwidth;
    j["problem"]["noise_std"] = cfg.problem.noise_std;
    j["problem"]["relocation_mean_gap"] = cfg.problem.relocation_mean_gap;
    j["problem"]["testset_size"] = cfg.problem.testset_size;
    j["problem"]["nmse_min_abs"] = cfg.problem.nmse_min_abs;
    j["problem"]["export_testset"] = cfg.problem.export_testset;
  } else {
    j["problem"]["seed"] = cfg.problem.stationary_seed;
    j["problem"]["halfwidth_fraction"] = cfg.problem.halfwidth_fraction;
    j["problem"]["target_margin"] = cfg.problem.target_margin;
  }
  j["diagnostics"] = {{"record_lyapunov", cfg.diagnostics.record_lyapunov},
                      {"record_per_agent_cost", cfg.diagnostics.record_per_agent_cost}};
  return j.dump(2) + "\n";
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path);
  out << config_to_json(cfg);
}

}  // namespace airopt
