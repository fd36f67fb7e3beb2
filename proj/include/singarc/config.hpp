#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include "json.hpp"

#include "singarc/arm2dof.hpp"
#include "singarc/integrate.hpp"
#include "singarc/regularize.hpp"

namespace singarc {

struct InitialConditions {
  Eigen::Vector4d x0;
  Eigen::Vector4d lambda0;
  /// Replace λ0 by λ2 a(x0) + λ4 b(x0) so that φ1(0) = φ1'(0) = 0.
  bool project_costate = true;
  /// Negate λ0 when sign φ2(0) disagrees with the bound u2 is held at, so the
  /// maximum condition holds on the bang channel. The law only sees λ2/λ4.
  bool orient_costate = true;
  double u2 = -10.0;
};

struct CertifyBox {
  double angle_half_width = 3.141592653589793;
  double rate_half_width = 2.0;
  int samples = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct RunConfig {
  ArmParams model;
  ControlBounds bounds;
  InitialConditions initial;
  IntegratorConfig integrator;
  DetectionTolerances detection;
  double audit_u_rel = 1e-6;
  CertifyBox certify;
  std::filesystem::path out = "out";

  RunConfig();
  /// Throws InvalidConfig on any inconsistent field.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Reads a YAML document with optional sections model, bounds, initial,
/// integrator, tolerances, certify and paths. Missing keys keep defaults.
/// Throws InvalidConfig on unknown keys or malformed values.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& yaml_text);

/// λ0 after the optional projection and orientation of `initial`.
Eigen::VectorXd prepared_costate(const MechanicalSystem& sys, const RunConfig& cfg);

}  // namespace singarc
