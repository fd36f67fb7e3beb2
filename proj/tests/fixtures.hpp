#pragma once

// Trajectories shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "singarc/arm2dof.hpp"
#include "singarc/config.hpp"
#include "singarc/integrate.hpp"
#include "singarc/pmp.hpp"
#include "singarc/trajectory_io.hpp"

namespace fixtures {

using singarc::Sample;
using singarc::Trajectory;

inline Eigen::VectorXd reference_x0() {
  Eigen::VectorXd x(4);
  x << std::numbers::pi / 20, std::numbers::pi / 20, 0.30, 0.5;
  return x;
}

/// Default run: configured initial data, projected and oriented costate.
inline Trajectory reference_extremal(double step = 1e-4, double horizon = 0.7) {
  singarc::RunConfig cfg;
  cfg.integrator.step = step;
  cfg.integrator.horizon = horizon;
  const singarc::Arm2Dof arm(cfg.model);
  return singarc::integrate_extremal(arm, cfg.initial.x0, singarc::prepared_costate(arm, cfg), cfg.integrator,
                                     cfg.initial.u2, cfg.bounds);
}

inline Eigen::VectorXd z_rhs(const singarc::MechanicalSystem& sys, const Eigen::VectorXd& z, const Eigen::VectorXd& u) {
  const Eigen::VectorXd x = z.head(4);
  const Eigen::VectorXd l = z.tail(4);
  Eigen::VectorXd d(8);
  d << singarc::state_rhs(sys, x, u), singarc::adjoint_rhs(sys, x, u, l);
  return d;
}

/// One RK4 step of the state–costate system under a constant control.
/// Negative `h` integrates backwards.
inline Eigen::VectorXd bang_step(const singarc::MechanicalSystem& sys, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& u, double h) {
  const Eigen::VectorXd k1 = z_rhs(sys, z, u);
  const Eigen::VectorXd k2 = z_rhs(sys, z + 0.5 * h * k1, u);
  const Eigen::VectorXd k3 = z_rhs(sys, z + 0.5 * h * k2, u);
  const Eigen::VectorXd k4 = z_rhs(sys, z + h * k3, u);
  return z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct SatSingSat {
  Trajectory traj;
  std::size_t first_singular = 0;  // sample index of the entry junction
  std::size_t last_singular = 0;   // sample index of the exit junction
};

/// u1 = M1 on [0, 0.15], singular on [0.15, 0.45], u1 = M1 on [0.45, 0.6],
/// with u2 = L2 throughout. The junction costate sits on the singular surface
/// with α1·φ2 > 0, so φ1 is positive on both saturated pieces.
inline SatSingSat sat_singular_sat(double h = 1e-3) {
  const singarc::Arm2Dof arm;
  const singarc::ControlBounds bounds = singarc::arm_default_bounds();
  const int n1 = static_cast<int>(std::lround(0.15 / h));
  const int n2 = static_cast<int>(std::lround(0.30 / h));
  const int n3 = n1;
  Eigen::VectorXd u(2);
  u << bounds.upper[0], bounds.lower[1];

  Eigen::VectorXd start(4);
  start << std::numbers::pi / 20, std::numbers::pi / 4, 1.0, 0.5;
  Eigen::VectorXd z(8);
  z << start, Eigen::VectorXd::Zero(4);
  for (int i = 0; i < n1; ++i) z = bang_step(arm, z, u, h);
  const Eigen::VectorXd xj = z.head(4);
  const singarc::SingularLawCoeffs k = singarc::singular_law_coeffs(arm, xj, u[1]);
  const Eigen::VectorXd lj = 0.5 * k.a_basis - k.b_basis;

  // First arc: integrate back from the junction, then reverse.
  std::vector<Eigen::VectorXd> back{(Eigen::VectorXd(8) << xj, lj).finished()};
  for (int i = 0; i < n1; ++i) back.push_back(bang_step(arm, back.back(), u, -h));

  SatSingSat out;
  for (int i = n1; i > 0; --i) {
    const Eigen::VectorXd& zi = back[static_cast<std::size_t>(i)];
    out.traj.samples.push_back(Sample{(n1 - i) * h, zi.head(4), u, Eigen::VectorXd(zi.tail(4))});
  }
  singarc::IntegratorConfig cfg;
  cfg.step = h;
  cfg.horizon = n2 * h;
  const Trajectory mid = singarc::integrate_extremal(arm, xj, lj, cfg, u[1], bounds);
  out.first_singular = out.traj.size();
  for (const Sample& s : mid.samples) {
    Sample c = s;
    c.t = n1 * h + s.t;
    out.traj.samples.push_back(c);
  }
  out.last_singular = out.traj.size() - 1;
  const Sample& exit = mid.samples.back();
  Eigen::VectorXd z3(8);
  z3 << exit.x, *exit.lambda;
  for (int i = 1; i <= n3; ++i) {
    z3 = bang_step(arm, z3, u, h);
    out.traj.samples.push_back(Sample{(n1 + n2 + i) * h, z3.head(4), u, Eigen::VectorXd(z3.tail(4))});
  }
  out.traj.meta.source = singarc::TrajectorySource::kConstructed;
  out.traj.meta.model_hash = singarc::model_hash(arm);
  return out;
}

/// Bang-bang data whose costates are built so that φ1(t) = t − t_switch and
/// φ2 ≡ −1 exactly; the states come from resimulating the bang control.
inline Trajectory bang_bang_synthetic(double t_switch = 0.35, double h = 1e-3, double horizon = 0.7) {
  const singarc::Arm2Dof arm;
  const singarc::ControlBounds bounds = singarc::arm_default_bounds();
  const int steps = static_cast<int>(std::lround(horizon / h));
  std::vector<double> times;
  std::vector<Eigen::VectorXd> controls;
  for (int i = 0; i <= steps; ++i) {
    const double t = i * h;
    Eigen::VectorXd u(2);
    u << (t - t_switch >= 0.0 ? bounds.upper[0] : bounds.lower[0]), bounds.lower[1];
    times.push_back(t);
    controls.push_back(u);
  }
  singarc::IntegratorConfig cfg;
  cfg.step = h;
  cfg.horizon = horizon;
  Eigen::VectorXd x0(4);
  x0 << 0.2, 0.6, 0.4, -0.3;
  Trajectory traj = singarc::resimulate(
      arm, x0, singarc::ControlSignal(times, controls, singarc::Interpolation::kZeroOrderHold), cfg);
  for (Sample& s : traj.samples) {
    const Eigen::MatrixXd g = singarc::input_columns(arm, s.x);
    const Eigen::MatrixXd dual = g * (g.transpose() * g).inverse();  // gᵀ·dual = I
    s.lambda = dual * Eigen::Vector2d(s.t - t_switch, -1.0);
  }
  traj.meta.source = singarc::TrajectorySource::kConstructed;
  return traj;
}

struct Corruption {
  Trajectory traj;
  std::vector<std::size_t> indices;
};

/// Adds ±amplitude to u1 on `fraction` of the samples, chosen without
/// replacement from a seeded generator.
inline Corruption spike_u1(const Trajectory& clean, double fraction, double amplitude, std::uint64_t seed) {
  Corruption out{clean, {}};
  std::vector<std::size_t> idx(clean.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(clean.size())));
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.traj.samples[idx[k]].u[0] += (k % 2 == 0 ? amplitude : -amplitude);
  }
  out.indices = idx;
  return out;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("singarc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
