#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "singarc/dual.hpp"

namespace singarc {

template <typename T>
using SVector = std::vector<T>;

/// Dense row-major matrix over an arbitrary scalar (double or nested duals).
template <typename T>
class SMatrix {
 public:
  SMatrix() = default;
  SMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), T(0.0)) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
  const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r * cols_ + c)]; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

/// Per-scalar half of the mechanical-system contract. A model implements the
/// inertia matrix M(q), the velocity-product vector C(q, q̇) and gravity G(q)
/// for each scalar type the Lie engine differentiates through.
template <typename T>
class ScalarDynamics {
 public:
  virtual ~ScalarDynamics() = default;
  virtual SMatrix<T> mass_matrix(std::span<const T> q) const = 0;
  virtual SVector<T> coriolis(std::span<const T> q, std::span<const T> qdot) const = 0;
  virtual SVector<T> gravity(std::span<const T> q) const { return SVector<T>(q.size(), T(0.0)); }
};

/// Fully actuated mechanical system u = M(q) q̈ + C(q, q̇) + G(q), seen in
/// state-space form ẋ = f(x) + g(x) u with x = [q; q̇].
class MechanicalSystem : public ScalarDynamics<double>,
                         public ScalarDynamics<D1>,
                         public ScalarDynamics<D2>,
                         public ScalarDynamics<D3> {
 public:
  using ScalarDynamics<double>::mass_matrix;
  using ScalarDynamics<D1>::mass_matrix;
  using ScalarDynamics<D2>::mass_matrix;
  using ScalarDynamics<D3>::mass_matrix;
  using ScalarDynamics<double>::coriolis;
  using ScalarDynamics<D1>::coriolis;
  using ScalarDynamics<D2>::coriolis;
  using ScalarDynamics<D3>::coriolis;
  using ScalarDynamics<double>::gravity;
  using ScalarDynamics<D1>::gravity;
  using ScalarDynamics<D2>::gravity;
  using ScalarDynamics<D3>::gravity;

  virtual int dof() const = 0;
  int state_dim() const { return 2 * dof(); }

  /// Stable textual identity of the model and its parameters; hashed into
  /// trajectory metadata.
  virtual std::string fingerprint() const = 0;
};

/// Implements every scalar overload by forwarding to the derived class's
/// `mass_matrix_t<T>` / `coriolis_t<T>` templates.
template <typename Derived>
class MechanicalSystemBase : public MechanicalSystem {
#define SINGARC_FORWARD_DYNAMICS(T)                                                 \
 public:                                                                            \
  SMatrix<T> mass_matrix(std::span<const T> q) const override {                     \
    return self().template mass_matrix_t<T>(q);                                     \
  }                                                                                 \
  SVector<T> coriolis(std::span<const T> q, std::span<const T> qdot) const override { \
    return self().template coriolis_t<T>(q, qdot);                                  \
  }
  SINGARC_FORWARD_DYNAMICS(double)
  SINGARC_FORWARD_DYNAMICS(D1)
  SINGARC_FORWARD_DYNAMICS(D2)
  SINGARC_FORWARD_DYNAMICS(D3)
#undef SINGARC_FORWARD_DYNAMICS

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Box constraints L_i ≤ u_i ≤ M_i on the inputs.
struct ControlBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int size() const { return static_cast<int>(lower.size()); }
  /// Throws InvalidConfig unless sizes agree and lower < upper componentwise.
  void validate() const;
  bool contains(int channel, double value) const {
    return value >= lower[channel] && value <= upper[channel];
  }
  /// The bound closest to `value` on `channel`.
  double nearest_bound(int channel, double value) const;
};

// Scalar-generic state-space pieces. Explicitly instantiated for double, D1,
// D2 and D3. Throw LinearSolveFailure when M(q) is numerically singular.
template <typename T>
SMatrix<T> inverse_mass(const MechanicalSystem& sys, std::span<const T> q);
template <typename T>
SVector<T> drift(const MechanicalSystem& sys, std::span<const T> x);
template <typename T>
SVector<T> input_column(const MechanicalSystem& sys, std::span<const T> x, int channel);

// Double-precision convenience wrappers.
Eigen::MatrixXd mass_matrix(const MechanicalSystem& sys, const Eigen::VectorXd& q);
Eigen::VectorXd drift(const MechanicalSystem& sys, const Eigen::VectorXd& x);
/// 2n×n matrix whose column i is g_i(x) = [0; ℓ_i(q)].
Eigen::MatrixXd input_columns(const MechanicalSystem& sys, const Eigen::VectorXd& x);
/// f(x) + g(x) u.
Eigen::VectorXd state_rhs(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

}  // namespace singarc
