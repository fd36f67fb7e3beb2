#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "singarc/liegeom.hpp"
#include "singarc/mech_system.hpp"

namespace singarc {

/// H(x, u, λ) = ⟨λ, f(x) + g(x) u⟩ − 1 for the minimum-time problem.
double hamiltonian(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& lambda);

/// λ̇ = −(∂(f + g u)/∂x)ᵀ λ.
Eigen::VectorXd adjoint_rhs(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& lambda);

/// Switching functions φ_i = ⟨λ, g_i⟩ and their derivatives φ_i' = ⟨λ, [f, g_i]⟩.
struct SwitchingRecord {
  Eigen::VectorXd phi;
  Eigen::VectorXd phi_dot;
};

SwitchingRecord switching(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda);

/// φ_i'' = ⟨λ, ffg_i⟩ + Σ_k β_ik φ_k, valid for any control u.
Eigen::VectorXd switching_second_derivative(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& lambda, const Eigen::VectorXd& u);

enum class ChannelTag { kUpper, kLower, kSingularUndetermined };

struct ChannelControl {
  ChannelTag tag = ChannelTag::kSingularUndetermined;
  std::optional<double> value;  // empty when undetermined
};

/// Default relative band for calling a switching function zero.
inline constexpr double kSingularTolerance = 1e-6;

/// Band |φ_i| ≤ tolerance·max(1, ‖λ‖) used to call a channel singular.
inline double singular_band(const Eigen::VectorXd& lambda, double tolerance = kSingularTolerance) {
  return tolerance * std::max(1.0, lambda.norm());
}

/// Maximizes H over the control box: M_i when φ_i > 0, L_i when φ_i < 0, and
/// undetermined when |φ_i| ≤ `tolerance` (absolute).
std::vector<ChannelControl> bang_control(const SwitchingRecord& record, const ControlBounds& bounds,
                                         double tolerance);

/// True iff not every pair (φ_i, φ_i') vanishes, i.e. the state/costate pair
/// is compatible with an extremal. False for λ = 0.
bool lemma1_certificate(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda);

/// Ingredients of the closed-form u1-singular control for a two-DOF system
/// with u2 held at a bang value c:
///   g1 = [0; 0; μ; ν],  fg1 = [−μ; −ν; 0; γ],
///   a(x) = [−ν/μ, 1, 0, 0],  b(x) = [γ/μ, 0, −ν/μ, 1],
/// and u1 = r(x)·λ2/λ4 + s(x).
struct SingularLawCoeffs {
  double r = 0.0;
  double s = 0.0;
  double mu = 0.0;
  double nu = 0.0;
  double gamma = 0.0;
  /// g2-coefficient of g1fg1 (multiplies u1 in φ1'').
  double alpha1 = 0.0;
  /// g2-coefficient of g2fg1 (multiplies u2 in φ1'').
  double alpha2 = 0.0;
  Eigen::Vector4d a_basis = Eigen::Vector4d::Zero();
  Eigen::Vector4d b_basis = Eigen::Vector4d::Zero();
};

/// Absolute floor below which α1, μ or ⟨b, g2⟩ count as zero.
inline constexpr double kLawDegeneracy = 1e-12;

/// Throws RkViolation where the law is undefined (α1 = 0, μ = 0 or ⟨b, g2⟩ = 0)
/// and std::invalid_argument for systems that are not two-DOF.
SingularLawCoeffs singular_law_coeffs(const MechanicalSystem& sys, const Eigen::VectorXd& x, double c);

/// λ2 a(x) + λ4 b(x): the costate with the same (λ2, λ4) that makes φ1 and φ1' vanish.
Eigen::VectorXd project_costate_to_singular_surface(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                                                    const Eigen::VectorXd& lambda);

struct SingularControl {
  double value = 0.0;
  bool out_of_bounds = false;
};

/// Relative floor on |λ4|/‖λ‖ for the closed-form law.
inline constexpr double kCostateDegeneracy = 1e-12;

/// Closed-form u1 keeping φ1 ≡ 0 with u2 = c. Never clamps: values outside
/// [L1, M1] come back flagged. Throws RkViolation or CostateDegenerate.
SingularControl singular_u1(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                            double c, const ControlBounds& bounds);
double singular_u1(const MechanicalSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda, double c);

/// Linear system 0 = ψ_k + b_kk c_k φ_k + (A_k φ_k) ū for the controls ū of
/// every channel except the bang channel k.
struct GeneralSingularSystem {
  Eigen::VectorXd psi;       // ⟨λ, ffg_i⟩, i ≠ k
  Eigen::VectorXd b_kk;      // α_ikk, i ≠ k
  Eigen::MatrixXd a_k;       // α_ijk, i, j ≠ k (row i, column j)
  double delta = 0.0;        // det(A_k)
  double phi_k = 0.0;
  double c_k = 0.0;
};

GeneralSingularSystem general_singular_system(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& lambda, int k, double c_k);

/// Unique ū of the system above. Throws DegenerateSystem when Δ_k or φ_k is
/// numerically zero. `k` is zero-based.
Eigen::VectorXd general_singular_solve(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& lambda, int k, double c_k);

struct RkBand {
  double angle = 1e-3;  // rad, around θ2 = mπ/2
  double rate = 1e-3;   // rad/s, around θ̇1 + θ̇2 = 0
};

/// Arm admissible set: θ2 away from integer multiples of π/2 and θ̇1 + θ̇2 ≠ 0.
bool in_Rk(const Eigen::VectorXd& x, const RkBand& band = {});

/// Normalized smallest singular value of {g_i} ∪ {fg_i, ffg_i : i ≠ k}.
/// `k` is zero-based; for the arm k = 1 gives span{g1, g2, fg1, ffg1}.
double sk_rank(const MechanicalSystem& sys, const Eigen::VectorXd& x, int k);

}  // namespace singarc
