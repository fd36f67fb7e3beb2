#include "singarc/mech_system.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "singarc/errors.hpp"

namespace singarc {
namespace {

constexpr double kSingularPivot = 1e-13;

template <typename T>
SMatrix<T> invert_2x2(const SMatrix<T>& m) {
  const T det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double scale = std::abs(value_of(m(0, 0)) * value_of(m(1, 1))) +
                       std::abs(value_of(m(0, 1)) * value_of(m(1, 0)));
  if (!(std::abs(value_of(det)) > kSingularPivot * scale)) {
    throw LinearSolveFailure("inertia matrix is numerically singular");
  }
  SMatrix<T> inv(2, 2);
  inv(0, 0) = m(1, 1) / det;
  inv(0, 1) = -m(0, 1) / det;
  inv(1, 0) = -m(1, 0) / det;
  inv(1, 1) = m(0, 0) / det;
  return inv;
}

// Gauss-Jordan with partial pivoting on the real part.
template <typename T>
SMatrix<T> invert_general(SMatrix<T> a) {
  const int n = a.rows();
  SMatrix<T> inv(n, n);
  for (int i = 0; i < n; ++i) inv(i, i) = T(1.0);
  double scale = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) scale = std::max(scale, std::abs(value_of(a(r, c))));

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(value_of(a(r, col))) > std::abs(value_of(a(pivot, col)))) pivot = r;
    }
    if (!(std::abs(value_of(a(pivot, col))) > kSingularPivot * scale)) {
      throw LinearSolveFailure("inertia matrix is numerically singular");
    }
    if (pivot != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a(pivot, c), a(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    }
    const T p = a(col, col);
    for (int c = 0; c < n; ++c) {
      a(col, c) = a(col, c) / p;
      inv(col, c) = inv(col, c) / p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const T factor = a(r, col);
      for (int c = 0; c < n; ++c) {
        a(r, c) = a(r, c) - factor * a(col, c);
        inv(r, c) = inv(r, c) - factor * inv(col, c);
      }
    }
  }
  return inv;
}

}  // namespace

template <typename T>
SMatrix<T> inverse_mass(const MechanicalSystem& sys, std::span<const T> q) {
  const SMatrix<T> m = sys.mass_matrix(q);
  return m.rows() == 2 ? invert_2x2(m) : invert_general(m);
}

template <typename T>
SVector<T> drift(const MechanicalSystem& sys, std::span<const T> x) {
  const auto n = static_cast<std::size_t>(sys.dof());
  const std::span<const T> q = x.first(n);
  const std::span<const T> qdot = x.subspan(n, n);
  const SMatrix<T> inv = inverse_mass(sys, q);
  SVector<T> bias = sys.coriolis(q, qdot);
  const SVector<T> grav = sys.gravity(q);
  for (std::size_t i = 0; i < n; ++i) bias[i] = bias[i] + grav[i];

  SVector<T> out(2 * n, T(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = qdot[i];
    T acc(0.0);
    for (std::size_t j = 0; j < n; ++j) acc = acc + inv(static_cast<int>(i), static_cast<int>(j)) * bias[j];
    out[n + i] = -acc;
  }
  return out;
}

template <typename T>
SVector<T> input_column(const MechanicalSystem& sys, std::span<const T> x, int channel) {
  const auto n = static_cast<std::size_t>(sys.dof());
  const SMatrix<T> inv = inverse_mass(sys, x.first(n));
  SVector<T> out(2 * n, T(0.0));
  for (std::size_t i = 0; i < n; ++i) out[n + i] = inv(static_cast<int>(i), channel);
  return out;
}

#define SINGARC_INSTANTIATE(T)                                                         \
  template SMatrix<T> inverse_mass<T>(const MechanicalSystem&, std::span<const T>);    \
  template SVector<T> drift<T>(const MechanicalSystem&, std::span<const T>);           \
  template SVector<T> input_column<T>(const MechanicalSystem&, std::span<const T>, int);
SINGARC_INSTANTIATE(double)
SINGARC_INSTANTIATE(D1)
SINGARC_INSTANTIATE(D2)
SINGARC_INSTANTIATE(D3)
#undef SINGARC_INSTANTIATE

void ControlBounds::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw InvalidConfig("control bounds must be non-empty vectors of equal length");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) {
      throw InvalidConfig("control bound " + std::to_string(i + 1) + " requires lower < upper");
    }
  }
}

double ControlBounds::nearest_bound(int channel, double value) const {
  return std::abs(value - lower[channel]) <= std::abs(value - upper[channel]) ? lower[channel]
                                                                             : upper[channel];
}

Eigen::MatrixXd mass_matrix(const MechanicalSystem& sys, const Eigen::VectorXd& q) {
  const SMatrix<double> m = sys.mass_matrix(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

Eigen::VectorXd drift(const MechanicalSystem& sys, const Eigen::VectorXd& x) {
  const SVector<double> f = drift<double>(sys, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  return Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
}

Eigen::MatrixXd input_columns(const MechanicalSystem& sys, const Eigen::VectorXd& x) {
  const int n = sys.dof();
  const SMatrix<double> inv =
      inverse_mass<double>(sys, std::span<const double>(x.data(), static_cast<std::size_t>(n)));
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) g(n + r, c) = inv(r, c);
  return g;
}

Eigen::VectorXd state_rhs(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  return drift(sys, x) + input_columns(sys, x) * u;
}

}  // namespace singarc
