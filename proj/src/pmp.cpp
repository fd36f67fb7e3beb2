#include "singarc/pmp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "singarc/errors.hpp"

namespace singarc {
namespace {

VectorField fg(int i) { return VectorField::bracket(VectorField::drift(), VectorField::input(i)); }
VectorField ffg(int i) { return VectorField::bracket(VectorField::drift(), fg(i)); }

}  // namespace

double hamiltonian(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& lambda) {
  return lambda.dot(state_rhs(sys, x, u)) - 1.0;
}

Eigen::VectorXd adjoint_rhs(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& lambda) {
  const int dim = sys.state_dim();
  const int n = sys.dof();
  Eigen::VectorXd out(dim);
  std::vector<D1> xd(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) xd[static_cast<std::size_t>(i)] = D1(x[i], i == j ? 1.0 : 0.0);
    const std::span<const D1> xs(xd);
    // Column j of ∂(f + g u)/∂x.
    SVector<D1> rhs = drift<D1>(sys, xs);
    const SMatrix<D1> inv = inverse_mass<D1>(sys, xs.first(static_cast<std::size_t>(n)));
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) rhs[static_cast<std::size_t>(n + r)] += inv(r, c) * u[c];
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) acc += lambda[i] * rhs[static_cast<std::size_t>(i)].d;
    out[j] = -acc;
  }
  return out;
}

SwitchingRecord switching(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) {
  const int n = sys.dof();
  SwitchingRecord rec;
  rec.phi = input_columns(sys, x).transpose() * lambda;
  rec.phi_dot.resize(n);
  for (int i = 0; i < n; ++i) rec.phi_dot[i] = lambda.dot(evaluate(sys, fg(i), x));
  return rec;
}

Eigen::VectorXd switching_second_derivative(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& lambda, const Eigen::VectorXd& u) {
  const int n = sys.dof();
  const SwitchingRecord rec = switching(sys, x, lambda);
  const Eigen::MatrixXd beta = beta_matrix(alpha_coefficients(sys, x), u);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = lambda.dot(evaluate(sys, ffg(i), x)) + beta.row(i).dot(rec.phi);
  return out;
}

std::vector<ChannelControl> bang_control(const SwitchingRecord& record, const ControlBounds& bounds,
                                         double tolerance) {
  std::vector<ChannelControl> out(static_cast<std::size_t>(record.phi.size()));
  for (Eigen::Index i = 0; i < record.phi.size(); ++i) {
    auto& ch = out[static_cast<std::size_t>(i)];
    const double phi = record.phi[i];
    if (std::abs(phi) <= tolerance) {
      ch.tag = ChannelTag::kSingularUndetermined;
    } else if (phi > 0.0) {
      ch.tag = ChannelTag::kUpper;
      ch.value = bounds.upper[i];
    } else {
      ch.tag = ChannelTag::kLower;
      ch.value = bounds.lower[i];
    }
  }
  return out;
}

bool lemma1_certificate(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) {
  const double lambda_norm = lambda.norm();
  if (!(lambda_norm > 0.0)) return false;
  const Eigen::MatrixXd frame = frame_matrix(sys, x);
  const Eigen::VectorXd projections = frame.transpose() * lambda;
  return projections.cwiseAbs().maxCoeff() > 1e-15 * lambda_norm * frame.norm();
}

SingularLawCoeffs singular_law_coeffs(const MechanicalSystem& sys, const Eigen::VectorXd& x, double c) {
  if (sys.dof() != 2) throw std::invalid_argument("closed-form singular law needs a two-DOF system");
  const Eigen::MatrixXd g = input_columns(sys, x);
  const Eigen::VectorXd fg1 = evaluate(sys, fg(0), x);
  const Eigen::VectorXd ffg1 = evaluate(sys, ffg(0), x);
  const AlphaTensor alpha = alpha_coefficients(sys, x);

  SingularLawCoeffs k;
  k.mu = g(2, 0);
  k.nu = g(3, 0);
  k.gamma = fg1[3];
  k.alpha1 = alpha(0, 0, 1);
  k.alpha2 = alpha(1, 0, 1);
  if (std::abs(k.mu) <= kLawDegeneracy) throw RkViolation("mu vanishes");
  if (std::abs(k.alpha1) <= kLawDegeneracy) throw RkViolation("alpha1 vanishes (theta2 at a multiple of pi/2)");

  k.a_basis << -k.nu / k.mu, 1.0, 0.0, 0.0;
  k.b_basis << k.gamma / k.mu, 0.0, -k.nu / k.mu, 1.0;
  const double b_g2 = k.b_basis.dot(g.col(1));
  if (std::abs(b_g2) <= kLawDegeneracy) throw RkViolation("<b, g2> vanishes");

  k.r = -(1.0 / k.alpha1) * k.a_basis.dot(ffg1) / b_g2;
  k.s = -(1.0 / k.alpha1) * k.b_basis.dot(ffg1) / b_g2 - (k.alpha2 / k.alpha1) * c;
  return k;
}

Eigen::VectorXd project_costate_to_singular_surface(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                                                    const Eigen::VectorXd& lambda) {
  const SingularLawCoeffs k = singular_law_coeffs(sys, x, 0.0);
  return lambda[1] * k.a_basis + lambda[3] * k.b_basis;
}

double singular_u1(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda, double c) {
  if (!(std::abs(lambda[3]) > kCostateDegeneracy * lambda.norm())) {
    throw CostateDegenerate("lambda4 vanishes; the singular law needs lambda2/lambda4");
  }
  const SingularLawCoeffs k = singular_law_coeffs(sys, x, c);
  return k.r * (lambda[1] / lambda[3]) + k.s;
}

SingularControl singular_u1(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                            double c, const ControlBounds& bounds) {
  SingularControl out;
  out.value = singular_u1(sys, x, lambda, c);
  out.out_of_bounds = !bounds.contains(0, out.value);
  return out;
}

GeneralSingularSystem general_singular_system(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& lambda, int k, double c_k) {
  const int n = sys.dof();
  if (k < 0 || k >= n) throw std::out_of_range("bang channel index out of range");
  const AlphaTensor alpha = alpha_coefficients(sys, x);
  const SwitchingRecord rec = switching(sys, x, lambda);

  std::vector<int> others;
  for (int i = 0; i < n; ++i)
    if (i != k) others.push_back(i);
  const auto m = static_cast<Eigen::Index>(others.size());

  GeneralSingularSystem s;
  s.psi.resize(m);
  s.b_kk.resize(m);
  s.a_k.resize(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const int i = others[static_cast<std::size_t>(r)];
    s.psi[r] = lambda.dot(evaluate(sys, ffg(i), x));
    s.b_kk[r] = alpha(i, k, k);
    for (Eigen::Index col = 0; col < m; ++col) s.a_k(r, col) = alpha(i, others[static_cast<std::size_t>(col)], k);
  }
  s.delta = m > 0 ? s.a_k.determinant() : 1.0;
  s.phi_k = rec.phi[k];
  s.c_k = c_k;
  return s;
}

Eigen::VectorXd general_singular_solve(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& lambda, int k, double c_k) {
  const GeneralSingularSystem s = general_singular_system(sys, x, lambda, k, c_k);
  const AlphaTensor alpha = alpha_coefficients(sys, x);
  const int n = sys.dof();
  double alpha_scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) alpha_scale = std::max(alpha_scale, std::abs(alpha(i, j, l)));
  const double delta_floor = 1e-9 * std::pow(alpha_scale, static_cast<double>(n - 1));
  if (!(std::abs(s.delta) > delta_floor)) {
    throw DegenerateSystem("det(A_k) vanishes for k = " + std::to_string(k + 1));
  }
  const double gk_norm = input_columns(sys, x).col(k).norm();
  if (!(std::abs(s.phi_k) > 1e-12 * lambda.norm() * gk_norm)) {
    throw DegenerateSystem("phi_k vanishes for k = " + std::to_string(k + 1));
  }
  const Eigen::MatrixXd lhs = s.a_k * s.phi_k;
  const Eigen::VectorXd rhs = -(s.psi + s.b_kk * (s.c_k * s.phi_k));
  return lhs.partialPivLu().solve(rhs);
}

bool in_Rk(const Eigen::VectorXd& x, const RkBand& band) {
  constexpr double kQuarter = std::numbers::pi / 2.0;
  const double theta2 = x[1];
  const double distance = std::abs(theta2 - std::round(theta2 / kQuarter) * kQuarter);
  return distance > band.angle && std::abs(x[2] + x[3]) > band.rate;
}

double sk_rank(const MechanicalSystem& sys, const Eigen::VectorXd& x, int k) {
  const int n = sys.dof();
  Eigen::MatrixXd cols(x.size(), 3 * n - 2);
  cols.leftCols(n) = input_columns(sys, x);
  int c = n;
  for (int i = 0; i < n; ++i) {
    if (i == k) continue;
    cols.col(c++) = evaluate(sys, fg(i), x);
    cols.col(c++) = evaluate(sys, ffg(i), x);
  }
  return normalized_min_singular_value(cols);
}

}  // namespace singarc
