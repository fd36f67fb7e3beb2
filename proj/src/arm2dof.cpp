#include "singarc/arm2dof.hpp"

#include <cmath>
#include <cstdio>

#include "singarc/errors.hpp"

namespace singarc {
namespace {

void require_positive(const std::array<double, 2>& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || !(v[i] > 0.0)) {
      throw InvalidConfig(std::string(name) + "[" + std::to_string(i + 1) + "] must be finite and > 0");
    }
  }
}

}  // namespace

void ArmParams::validate() const {
  require_positive(link_length, "link_length");
  require_positive(com_position, "com_position");
  require_positive(mass, "mass");
  require_positive(inertia_z, "inertia_z");
}

ControlBounds arm_default_bounds() {
  ControlBounds b;
  b.lower = Eigen::Vector2d(-20.0, -10.0);
  b.upper = Eigen::Vector2d(20.0, 10.0);
  return b;
}

Eigen::VectorXd MechState::stacked() const {
  Eigen::VectorXd x(q.size() + qdot.size());
  x << q, qdot;
  return x;
}

MechState MechState::from_stacked(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

Arm2Dof::Arm2Dof(ArmParams params) : params_(params) { params_.validate(); }

std::string Arm2Dof::fingerprint() const {
  char buf[256];
  const auto& p = params_;
  std::snprintf(buf, sizeof(buf), "arm2dof l=%.17g,%.17g xcm=%.17g,%.17g m=%.17g,%.17g Iz=%.17g,%.17g",
                p.link_length[0], p.link_length[1], p.com_position[0], p.com_position[1], p.mass[0],
                p.mass[1], p.inertia_z[0], p.inertia_z[1]);
  return buf;
}

Eigen::Matrix2d arm_mass_matrix(const Arm2Dof& arm, const Eigen::Vector2d& q) {
  return mass_matrix(arm, Eigen::VectorXd(q));
}

Eigen::Vector2d arm_coriolis(const Arm2Dof& arm, const Eigen::Vector2d& q, const Eigen::Vector2d& qdot) {
  const auto c = arm.coriolis(std::span<const double>(q.data(), 2), std::span<const double>(qdot.data(), 2));
  return {c[0], c[1]};
}

}  // namespace singarc
