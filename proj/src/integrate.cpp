#include "singarc/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>

namespace singarc {

void IntegratorConfig::validate() const {
  if (!std::isfinite(horizon) || horizon < 0.0) throw InvalidConfig("horizon must be finite and >= 0");
  if (!std::isfinite(step) || !(step > 0.0)) throw InvalidConfig("step must be finite and > 0");
  if (horizon > 0.0 && step > horizon) throw InvalidConfig("step must not exceed the horizon");
}

int IntegratorConfig::steps() const {
  if (horizon == 0.0) return 0;
  return std::max(1, static_cast<int>(std::lround(horizon / step)));
}

bool Trajectory::has_costates() const {
  return !samples.empty() &&
         std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.lambda.has_value(); });
}

void Trajectory::validate() const {
  if (samples.empty()) throw SchemaError("trajectory has no samples");
  if (samples.front().t != 0.0) throw SchemaError("trajectory must start at t = 0");
  const auto nx = samples.front().x.size();
  const auto nu = samples.front().u.size();
  const bool with_lambda = samples.front().lambda.has_value();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.x.size() != nx || s.u.size() != nu || s.lambda.has_value() != with_lambda ||
        (with_lambda && s.lambda->size() != nx)) {
      throw SchemaError("sample " + std::to_string(i) + " has inconsistent vector widths");
    }
    if (!std::isfinite(s.t) || !s.x.allFinite() || !s.u.allFinite() || (with_lambda && !s.lambda->allFinite())) {
      throw NaNError("non-finite value in sample " + std::to_string(i));
    }
    if (i > 0 && !(s.t > samples[i - 1].t)) {
      throw MonotonicityError("time stamps must increase strictly (sample " + std::to_string(i) + ")");
    }
  }
}

std::string model_hash(const MechanicalSystem& sys) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : sys.fingerprint()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string to_string(TrajectorySource source) {
  switch (source) {
    case TrajectorySource::kConstructed: return "constructed";
    case TrajectorySource::kIngested: return "ingested";
    case TrajectorySource::kRegularized: return "regularized";
    case TrajectorySource::kResimulated: return "resimulated";
  }
  return "unknown";
}

TrajectorySource source_from_string(const std::string& text) {
  if (text == "constructed") return TrajectorySource::kConstructed;
  if (text == "regularized") return TrajectorySource::kRegularized;
  if (text == "resimulated") return TrajectorySource::kResimulated;
  return TrajectorySource::kIngested;
}

namespace {

struct ExtremalStage {
  Eigen::VectorXd derivative;
  Eigen::VectorXd u;
  bool out_of_bounds = false;
};

class StageAbort {
 public:
  ErrorCode code;
  std::string message;
};

ExtremalStage extremal_rhs(const MechanicalSystem& sys, const Eigen::VectorXd& z, double c,
                           const ControlBounds& bounds, const AbortFlags& abort_on) {
  const int dim = sys.state_dim();
  const Eigen::VectorXd x = z.head(dim);
  const Eigen::VectorXd lambda = z.tail(dim);
  ExtremalStage stage;
  SingularControl u1;
  try {
    u1 = singular_u1(sys, x, lambda, c, bounds);
  } catch (const Error& e) {
    throw StageAbort{e.code(), e.what()};
  }
  stage.out_of_bounds = u1.out_of_bounds;
  if (u1.out_of_bounds && abort_on.out_of_bounds) {
    throw StageAbort{ErrorCode::kOutOfBounds, "singular u1 = " + std::to_string(u1.value) + " leaves the bounds"};
  }
  stage.u.resize(2);
  stage.u << u1.value, c;
  stage.derivative.resize(2 * dim);
  stage.derivative << state_rhs(sys, x, stage.u), adjoint_rhs(sys, x, stage.u, lambda);
  return stage;
}

nlohmann::json config_snapshot(const IntegratorConfig& config) {
  return {{"step", config.step},
          {"horizon", config.horizon},
          {"steps", config.steps()},
          {"interpolation", config.interpolation == Interpolation::kLinear ? "linear" : "zoh"},
          {"abort_on_out_of_bounds", config.abort_on.out_of_bounds},
          {"abort_on_rk_band_exit", config.abort_on.leave_rk_band},
          {"rk_band_angle", config.rk_band.angle},
          {"rk_band_rate", config.rk_band.rate}};
}

}  // namespace

Trajectory integrate_extremal(const MechanicalSystem& sys, const Eigen::VectorXd& x0, const Eigen::VectorXd& lambda0,
                              const IntegratorConfig& config, double c, const ControlBounds& bounds) {
  config.validate();
  bounds.validate();
  const int dim = sys.state_dim();
  if (x0.size() != dim || lambda0.size() != dim) throw InvalidConfig("x0 and lambda0 must have length 2n");
  if (!(lambda0.norm() > 0.0)) throw CostateDegenerate("lambda0 must be nonzero");
  if (!in_Rk(x0, config.rk_band)) throw RkViolation("initial state lies outside R_k");
  const SingularControl u_start = singular_u1(sys, x0, lambda0, c, bounds);
  if (u_start.out_of_bounds && config.abort_on.out_of_bounds) {
    throw OutOfBounds("initial singular u1 = " + std::to_string(u_start.value) + " lies outside the bounds");
  }

  Trajectory traj;
  traj.meta.source = TrajectorySource::kConstructed;
  traj.meta.model_hash = model_hash(sys);
  traj.meta.config = config_snapshot(config);
  traj.meta.config["u2"] = c;

  const int steps = config.steps();
  const double h = steps > 0 ? config.horizon / steps : 0.0;
  Eigen::VectorXd z(2 * dim);
  z << x0, lambda0;
  int rk_exits = 0;
  int out_of_bounds_samples = 0;
  traj.samples.reserve(static_cast<std::size_t>(steps) + 1);

  const auto abort = [&](ErrorCode code, const std::string& message) {
    traj.meta.abort_reason = code;
    traj.meta.abort_message = message;
    traj.meta.flags.push_back(std::string("aborted:") + std::string(to_string(code)));
  };

  for (int i = 0; i <= steps; ++i) {
    const double t = i * h;
    ExtremalStage k1;
    try {
      k1 = extremal_rhs(sys, z, c, bounds, config.abort_on);
    } catch (const StageAbort& a) {
      abort(a.code, a.message);
      break;
    }
    Sample s{t, z.head(dim), k1.u, Eigen::VectorXd(z.tail(dim))};
    const bool inside = in_Rk(s.x, config.rk_band);
    traj.samples.push_back(std::move(s));
    if (!inside) {
      ++rk_exits;
      if (config.abort_on.leave_rk_band) {
        abort(ErrorCode::kRkViolation, "state left the R_k band at t = " + std::to_string(t));
        break;
      }
    }
    if (k1.out_of_bounds) ++out_of_bounds_samples;
    if (i == steps) break;

    try {
      const ExtremalStage k2 = extremal_rhs(sys, z + 0.5 * h * k1.derivative, c, bounds, config.abort_on);
      const ExtremalStage k3 = extremal_rhs(sys, z + 0.5 * h * k2.derivative, c, bounds, config.abort_on);
      const ExtremalStage k4 = extremal_rhs(sys, z + h * k3.derivative, c, bounds, config.abort_on);
      z += (h / 6.0) * (k1.derivative + 2.0 * k2.derivative + 2.0 * k3.derivative + k4.derivative);
    } catch (const StageAbort& a) {
      abort(a.code, a.message);
      break;
    }
  }
  traj.meta.config["rk_exit_samples"] = rk_exits;
  traj.meta.config["out_of_bounds_samples"] = out_of_bounds_samples;
  if (rk_exits > 0) traj.meta.flags.push_back("rk_band_exit");
  if (out_of_bounds_samples > 0) traj.meta.flags.push_back("out_of_bounds");
  return traj;
}

ControlSignal::ControlSignal(std::vector<double> times, std::vector<Eigen::VectorXd> values, Interpolation mode)
    : times_(std::move(times)), values_(std::move(values)), mode_(mode) {
  if (times_.empty() || times_.size() != values_.size()) {
    throw std::invalid_argument("control signal needs matching, non-empty time and value lists");
  }
}

ControlSignal ControlSignal::from_trajectory(const Trajectory& traj, Interpolation mode) {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  times.reserve(traj.size());
  values.reserve(traj.size());
  for (const Sample& s : traj.samples) {
    times.push_back(s.t);
    values.push_back(s.u);
  }
  return ControlSignal(std::move(times), std::move(values), mode);
}

Eigen::VectorXd ControlSignal::at(double t, bool left_limit) const {
  constexpr double kEps = 1e-12;
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back() && !(left_limit && mode_ == Interpolation::kZeroOrderHold)) return values_.back();

  if (mode_ == Interpolation::kZeroOrderHold) {
    auto it = left_limit ? std::lower_bound(times_.begin(), times_.end(), t - kEps)
                         : std::upper_bound(times_.begin(), times_.end(), t + kEps);
    const auto idx = std::max<std::ptrdiff_t>(0, (it - times_.begin()) - 1);
    return values_[static_cast<std::size_t>(idx)];
  }
  const auto hi = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
  return (1.0 - w) * values_[lo] + w * values_[hi];
}

Trajectory resimulate(const MechanicalSystem& sys, const Eigen::VectorXd& x0, const ControlSignal& control,
                      const IntegratorConfig& config) {
  config.validate();
  const int steps = config.steps();
  const double h = steps > 0 ? config.horizon / steps : 0.0;

  Trajectory traj;
  traj.meta.source = TrajectorySource::kResimulated;
  traj.meta.model_hash = model_hash(sys);
  traj.meta.config = config_snapshot(config);
  traj.samples.reserve(static_cast<std::size_t>(steps) + 1);

  Eigen::VectorXd x = x0;
  for (int i = 0; i <= steps; ++i) {
    const double t = i * h;
    const Eigen::VectorXd u = control.at(t);
    traj.samples.push_back(Sample{t, x, u, std::nullopt});
    if (i == steps) break;
    const Eigen::VectorXd u_mid = control.at(t + 0.5 * h);
    const Eigen::VectorXd u_end = control.at(t + h, /*left_limit=*/true);
    const Eigen::VectorXd k1 = state_rhs(sys, x, u);
    const Eigen::VectorXd k2 = state_rhs(sys, x + 0.5 * h * k1, u_mid);
    const Eigen::VectorXd k3 = state_rhs(sys, x + 0.5 * h * k2, u_mid);
    const Eigen::VectorXd k4 = state_rhs(sys, x + h * k3, u_end);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return traj;
}

std::vector<double> hamiltonian_trace(const MechanicalSystem& sys, const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (const Sample& s : traj.samples) {
    if (!s.lambda) throw MissingCostates("hamiltonian needs costates at every sample");
    out.push_back(hamiltonian(sys, s.x, s.u, *s.lambda));
  }
  return out;
}

}  // namespace singarc
