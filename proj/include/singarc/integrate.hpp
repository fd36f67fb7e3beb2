#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "singarc/errors.hpp"
#include "singarc/mech_system.hpp"
#include "singarc/pmp.hpp"

namespace singarc {

/// Conditions that end an extremal run early. States where the closed-form
/// law is undefined (RkViolation, CostateDegenerate) always end the run.
struct AbortFlags {
  bool out_of_bounds = true;
  /// Also stop when a sample leaves the in_Rk band (θ2 near mπ/2 or
  /// θ̇1 + θ̇2 near 0) even though the law is still defined there.
  bool leave_rk_band = false;
};

enum class Interpolation { kZeroOrderHold, kLinear };

struct IntegratorConfig {
  double step = 1e-4;    // s; rounded so that an integer number of steps spans the horizon
  double horizon = 0.7;  // s
  AbortFlags abort_on;
  Interpolation interpolation = Interpolation::kZeroOrderHold;
  RkBand rk_band;

  /// Throws InvalidConfig unless horizon ≥ 0 and 0 < step (step ≤ horizon when horizon > 0).
  void validate() const;
  /// Number of RK4 steps covering the horizon.
  int steps() const;
};

struct Sample {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  std::optional<Eigen::VectorXd> lambda;
};

enum class TrajectorySource { kConstructed, kIngested, kRegularized, kResimulated };

struct TrajectoryMeta {
  TrajectorySource source = TrajectorySource::kConstructed;
  std::string model_hash;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> flags;
  /// Set when a run stopped early; the trajectory then holds the prefix.
  std::optional<ErrorCode> abort_reason;
  std::string abort_message;
};

struct Trajectory {
  std::vector<Sample> samples;
  TrajectoryMeta meta;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  bool has_costates() const;
  int state_dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().x.size()); }
  int control_dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().u.size()); }
  /// Throws MonotonicityError / SchemaError / NaNError when the invariants of
  /// a trajectory (t0 = 0, strictly increasing t, uniform widths, finite) fail.
  void validate() const;
};

/// Hex digest of the model fingerprint, stored in trajectory metadata.
std::string model_hash(const MechanicalSystem& sys);

std::string to_string(TrajectorySource source);
TrajectorySource source_from_string(const std::string& text);

/// Integrates the state–costate system with u1 from the closed-form singular
/// law (re-evaluated at every RK4 stage) and u2 = c. Abort conditions named in
/// `config.abort_on` stop the run; the prefix computed so far is returned with
/// `meta.abort_reason` set. Samples leaving the R_k band are tallied in the
/// "rk_exit_samples" metadata entry.
Trajectory integrate_extremal(const MechanicalSystem& sys, const Eigen::VectorXd& x0, const Eigen::VectorXd& lambda0,
                              const IntegratorConfig& config, double c, const ControlBounds& bounds);

/// Piecewise control signal u(t) defined by samples.
class ControlSignal {
 public:
  ControlSignal(std::vector<double> times, std::vector<Eigen::VectorXd> values, Interpolation mode);
  static ControlSignal from_trajectory(const Trajectory& traj, Interpolation mode);

  /// `left_limit` selects u(t⁻) at sample instants; used for the end stage of
  /// an RK4 step under zero-order hold.
  Eigen::VectorXd at(double t, bool left_limit = false) const;
  double start() const { return times_.front(); }
  double end() const { return times_.back(); }

 private:
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> values_;
  Interpolation mode_;
};

/// Integrates ẋ = f(x) + g(x) u(t) on [0, config.horizon] with RK4.
Trajectory resimulate(const MechanicalSystem& sys, const Eigen::VectorXd& x0, const ControlSignal& control,
                      const IntegratorConfig& config);

/// H(t) at every sample. Throws MissingCostates if any sample lacks λ.
std::vector<double> hamiltonian_trace(const MechanicalSystem& sys, const Trajectory& traj);

}  // namespace singarc
