#pragma once

#include <array>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "singarc/mech_system.hpp"

namespace singarc {

/// Physical parameters of the two-link planar arm. Index 0 is the shoulder
/// link, index 1 the elbow link. SI units throughout.
struct ArmParams {
  std::array<double, 2> link_length{0.5, 0.5};
  std::array<double, 2> com_position{0.5, 0.5};
  std::array<double, 2> mass{50.0, 30.0};
  std::array<double, 2> inertia_z{5.0, 3.0};

  /// Throws InvalidConfig unless every field is finite and strictly positive.
  void validate() const;
};

/// Default torque limits: |u1| ≤ 20, u2 ∈ [-10, 10].
ControlBounds arm_default_bounds();

/// Generalized coordinates and velocities of a mechanical system.
struct MechState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;

  Eigen::VectorXd stacked() const;
  static MechState from_stacked(const Eigen::VectorXd& x);
};

/// Two-link planar manipulator moving in a horizontal plane (no gravity).
///
/// The elbow coupling term of the inertia matrix carries the elbow link's
/// rotational inertia, M12 = m2 xc2² + l1 m2 xc2 cos θ2 + Iz2, as follows from
/// the kinetic energy ½ Iz2 (θ̇1 + θ̇2)² of the second link.
class Arm2Dof final : public MechanicalSystemBase<Arm2Dof> {
 public:
  explicit Arm2Dof(ArmParams params = {});

  int dof() const override { return 2; }
  std::string fingerprint() const override;
  const ArmParams& params() const { return params_; }

  template <typename T>
  SMatrix<T> mass_matrix_t(std::span<const T> q) const {
    using std::cos;
    const auto& p = params_;
    const double l1 = p.link_length[0];
    const double xc1 = p.com_position[0];
    const double xc2 = p.com_position[1];
    const double m1 = p.mass[0];
    const double m2 = p.mass[1];
    const T c2 = cos(q[1]);

    SMatrix<T> m(2, 2);
    m(0, 0) = m2 * l1 * l1 + 2.0 * m2 * l1 * xc2 * c2 + m1 * xc1 * xc1 + m2 * xc2 * xc2 +
              p.inertia_z[0] + p.inertia_z[1];
    m(0, 1) = m2 * xc2 * xc2 + l1 * m2 * xc2 * c2 + p.inertia_z[1];
    m(1, 0) = m(0, 1);
    m(1, 1) = T(m2 * xc2 * xc2 + p.inertia_z[1]);
    return m;
  }

  template <typename T>
  SVector<T> coriolis_t(std::span<const T> q, std::span<const T> qdot) const {
    using std::sin;
    const double h = params_.link_length[0] * params_.mass[1] * params_.com_position[1];
    const T s2 = sin(q[1]);
    return {-(h * s2 * qdot[1] * qdot[1]) - 2.0 * h * s2 * qdot[0] * qdot[1],
            h * s2 * qdot[0] * qdot[0]};
  }

 private:
  ArmParams params_;
};

// Double-precision conveniences for the arm.
Eigen::Matrix2d arm_mass_matrix(const Arm2Dof& arm, const Eigen::Vector2d& q);
Eigen::Vector2d arm_coriolis(const Arm2Dof& arm, const Eigen::Vector2d& q, const Eigen::Vector2d& qdot);

}  // namespace singarc
