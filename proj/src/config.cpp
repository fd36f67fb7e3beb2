#include "singarc/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "singarc/pmp.hpp"

namespace singarc {
namespace {

void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw InvalidConfig("section '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw InvalidConfig("unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw InvalidConfig("bad value for '" + section + "." + key + "': " + e.what());
  }
}

template <std::size_t N>
void read_array(const YAML::Node& node, const char* key, std::array<double, N>& out, const std::string& section) {
  if (!node[key]) return;
  std::vector<double> v;
  read(node, key, v, section);
  if (v.size() != N) throw InvalidConfig("'" + section + "." + key + "' needs " + std::to_string(N) + " entries");
  std::copy(v.begin(), v.end(), out.begin());
}

void read_vector(const YAML::Node& node, const char* key, Eigen::Ref<Eigen::VectorXd> out, const std::string& section) {
  if (!node[key]) return;
  std::vector<double> v;
  read(node, key, v, section);
  if (static_cast<Eigen::Index>(v.size()) != out.size()) {
    throw InvalidConfig("'" + section + "." + key + "' needs " + std::to_string(out.size()) + " entries");
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = v[static_cast<std::size_t>(i)];
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

RunConfig::RunConfig() : bounds(arm_default_bounds()) {
  constexpr double pi = std::numbers::pi;
  initial.x0 << pi / 20.0, pi / 20.0, 0.30, 0.5;
  initial.lambda0 << 5.1165, 3.0, 10.2330, 6.0;
  integrator.step = 1e-4;
  integrator.horizon = 0.7;
}

void RunConfig::validate() const {
  model.validate();
  bounds.validate();
  integrator.validate();
  detection.validate();
  if (bounds.size() != 2) throw InvalidConfig("the arm needs two control bounds");
  if (!initial.x0.allFinite() || !initial.lambda0.allFinite()) throw InvalidConfig("x0 and lambda0 must be finite");
  if (!std::isfinite(initial.u2)) throw InvalidConfig("u2 must be finite");
  if (!(audit_u_rel > 0.0)) throw InvalidConfig("audit u_rel must be positive");
  if (certify.samples < 1 || certify.workers < 1) throw InvalidConfig("certify needs samples >= 1 and workers >= 1");
  if (!(certify.angle_half_width > 0.0) || !(certify.rate_half_width > 0.0)) {
    throw InvalidConfig("certify box widths must be positive");
  }
}

nlohmann::json RunConfig::to_json() const {
  const auto arr = [](const auto& a) { return std::vector<double>(a.begin(), a.end()); };
  return {
      {"model",
       {{"link_length", arr(model.link_length)},
        {"com_position", arr(model.com_position)},
        {"mass", arr(model.mass)},
        {"inertia_z", arr(model.inertia_z)}}},
      {"bounds", {{"lower", as_vector(bounds.lower)}, {"upper", as_vector(bounds.upper)}}},
      {"initial",
       {{"x0", as_vector(initial.x0)},
        {"lambda0", as_vector(initial.lambda0)},
        {"project_costate", initial.project_costate},
        {"orient_costate", initial.orient_costate},
        {"u2", initial.u2}}},
      {"integrator",
       {{"T", integrator.horizon},
        {"step", integrator.step},
        {"interpolation", integrator.interpolation == Interpolation::kLinear ? "linear" : "zoh"},
        {"abort_on_out_of_bounds", integrator.abort_on.out_of_bounds},
        {"abort_on_rk_band_exit", integrator.abort_on.leave_rk_band},
        {"rk_band_angle", integrator.rk_band.angle},
        {"rk_band_rate", integrator.rk_band.rate}}},
      {"tolerances",
       {{"phi_rel", detection.phi_rel},
        {"phi_dot_rel", detection.phi_dot_rel},
        {"min_samples", detection.min_samples},
        {"gap_samples", detection.gap_samples},
        {"u_rel", audit_u_rel}}},
      {"certify",
       {{"samples", certify.samples},
        {"seed", certify.seed},
        {"workers", certify.workers},
        {"angle_half_width", certify.angle_half_width},
        {"rate_half_width", certify.rate_half_width}}},
      {"paths", {{"out", out.string()}}},
  };
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw InvalidConfig(std::string("cannot parse config: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  check_keys(root, "<root>", {"model", "bounds", "initial", "integrator", "tolerances", "certify", "paths"});

  if (const YAML::Node n = root["model"]) {
    check_keys(n, "model", {"link_length", "com_position", "mass", "inertia_z"});
    read_array(n, "link_length", cfg.model.link_length, "model");
    read_array(n, "com_position", cfg.model.com_position, "model");
    read_array(n, "mass", cfg.model.mass, "model");
    read_array(n, "inertia_z", cfg.model.inertia_z, "model");
  }
  if (const YAML::Node n = root["bounds"]) {
    check_keys(n, "bounds", {"lower", "upper"});
    read_vector(n, "lower", cfg.bounds.lower, "bounds");
    read_vector(n, "upper", cfg.bounds.upper, "bounds");
  }
  if (const YAML::Node n = root["initial"]) {
    check_keys(n, "initial", {"x0", "lambda0", "project_costate", "orient_costate", "u2"});
    read_vector(n, "x0", cfg.initial.x0, "initial");
    read_vector(n, "lambda0", cfg.initial.lambda0, "initial");
    read(n, "project_costate", cfg.initial.project_costate, "initial");
    read(n, "orient_costate", cfg.initial.orient_costate, "initial");
    read(n, "u2", cfg.initial.u2, "initial");
  }
  if (const YAML::Node n = root["integrator"]) {
    check_keys(n, "integrator",
               {"T", "step", "interpolation", "abort_on_out_of_bounds", "abort_on_rk_band_exit", "rk_band_angle",
                "rk_band_rate"});
    read(n, "T", cfg.integrator.horizon, "integrator");
    read(n, "step", cfg.integrator.step, "integrator");
    std::string interp = "zoh";
    read(n, "interpolation", interp, "integrator");
    if (interp == "linear") {
      cfg.integrator.interpolation = Interpolation::kLinear;
    } else if (interp == "zoh") {
      cfg.integrator.interpolation = Interpolation::kZeroOrderHold;
    } else {
      throw InvalidConfig("integrator.interpolation must be 'zoh' or 'linear'");
    }
    read(n, "abort_on_out_of_bounds", cfg.integrator.abort_on.out_of_bounds, "integrator");
    read(n, "abort_on_rk_band_exit", cfg.integrator.abort_on.leave_rk_band, "integrator");
    read(n, "rk_band_angle", cfg.integrator.rk_band.angle, "integrator");
    read(n, "rk_band_rate", cfg.integrator.rk_band.rate, "integrator");
  }
  if (const YAML::Node n = root["tolerances"]) {
    check_keys(n, "tolerances", {"phi_rel", "phi_dot_rel", "min_samples", "gap_samples", "u_rel"});
    read(n, "phi_rel", cfg.detection.phi_rel, "tolerances");
    read(n, "phi_dot_rel", cfg.detection.phi_dot_rel, "tolerances");
    read(n, "min_samples", cfg.detection.min_samples, "tolerances");
    read(n, "gap_samples", cfg.detection.gap_samples, "tolerances");
    read(n, "u_rel", cfg.audit_u_rel, "tolerances");
  }
  if (const YAML::Node n = root["certify"]) {
    check_keys(n, "certify", {"samples", "seed", "workers", "angle_half_width", "rate_half_width"});
    read(n, "samples", cfg.certify.samples, "certify");
    read(n, "seed", cfg.certify.seed, "certify");
    read(n, "workers", cfg.certify.workers, "certify");
    read(n, "angle_half_width", cfg.certify.angle_half_width, "certify");
    read(n, "rate_half_width", cfg.certify.rate_half_width, "certify");
  }
  if (const YAML::Node n = root["paths"]) {
    check_keys(n, "paths", {"out"});
    std::string out = cfg.out.string();
    read(n, "out", out, "paths");
    cfg.out = out;
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Eigen::VectorXd prepared_costate(const MechanicalSystem& sys, const RunConfig& cfg) {
  const Eigen::VectorXd x0 = cfg.initial.x0;
  Eigen::VectorXd lambda = cfg.initial.lambda0;
  if (cfg.initial.project_costate) lambda = project_costate_to_singular_surface(sys, x0, lambda);
  if (cfg.initial.orient_costate) {
    const double phi2 = input_columns(sys, x0).col(1).dot(lambda);
    const double mid = 0.5 * (cfg.bounds.lower[1] + cfg.bounds.upper[1]);
    // u2 on the lower bound needs φ2 < 0, on the upper bound φ2 > 0.
    const bool at_lower = cfg.initial.u2 < mid;
    if ((at_lower && phi2 > 0.0) || (!at_lower && phi2 < 0.0)) lambda = -lambda;
  }
  return lambda;
}

}  // namespace singarc
