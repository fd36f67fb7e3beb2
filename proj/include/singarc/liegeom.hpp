#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "singarc/mech_system.hpp"

namespace singarc {

/// Maximum number of dual layers the bracket engine nests. Three layers cover
/// every right-nested word of length four, e.g. fffg2 and g1ffg2.
inline constexpr int kMaxNesting = 3;

enum class FieldKind { kDrift, kInput, kBracket };

/// A vector field on the state space built from the drift f, the input
/// columns g_i and Lie brackets of those. Immutable; copies share structure.
///
/// Channels are zero-based in code. The textual word form uses the usual
/// one-based names: "g1fg2" is [g_1, [f, g_2]].
class VectorField {
 public:
  static VectorField drift();
  static VectorField input(int channel);
  static VectorField bracket(VectorField a, VectorField b);
  /// Right-nested word over {f, g1, g2, ...}; throws std::invalid_argument on
  /// malformed input.
  static VectorField parse(std::string_view word);

  FieldKind kind() const { return kind_; }
  int channel() const { return channel_; }
  const VectorField& left() const { return children_->first; }
  const VectorField& right() const { return children_->second; }
  /// Derivative order needed to evaluate this field (0 for f and g_i).
  int nesting() const { return nesting_; }
  std::string to_string() const;

 private:
  VectorField(FieldKind kind, int channel) : kind_(kind), channel_(channel) {}

  FieldKind kind_ = FieldKind::kDrift;
  int channel_ = -1;
  int nesting_ = 0;
  std::shared_ptr<const std::pair<VectorField, VectorField>> children_;
};

/// Evaluates `field` at `x` over any scalar type up to the nesting budget.
/// Throws DerivativeUnavailable when the budget would be exceeded.
template <typename T>
SVector<T> evaluate_t(const MechanicalSystem& sys, const VectorField& field, std::span<const T> x);

Eigen::VectorXd evaluate(const MechanicalSystem& sys, const VectorField& field, const Eigen::VectorXd& x);

/// [a, b](x) = (∂b/∂x) a(x) − (∂a/∂x) b(x), with exact directional derivatives.
Eigen::VectorXd lie_bracket(const MechanicalSystem& sys, const VectorField& a, const VectorField& b,
                            const Eigen::VectorXd& x);

/// Right-nested bracket [X1, [X2, [..., Xp]]] of the given word.
Eigen::VectorXd iterated_bracket(const MechanicalSystem& sys, std::span<const VectorField> word,
                                 const Eigen::VectorXd& x);
Eigen::VectorXd iterated_bracket(const MechanicalSystem& sys, std::string_view word, const Eigen::VectorXd& x);

/// Coefficients of g_i f g_j = Σ_k α_ijk g_k at one state.
class AlphaTensor {
 public:
  explicit AlphaTensor(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

  int size() const { return n_; }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  /// Largest relative reconstruction residual seen while solving.
  double max_residual = 0.0;

 private:
  std::size_t index(int i, int j, int k) const { return static_cast<std::size_t>((i * n_ + j) * n_ + k); }
  int n_;
  std::vector<double> data_;
};

inline constexpr double kSpanTolerance = 1e-9;

/// Solves for every α_ijk. Throws SpanViolation if some g_i f g_j leaves
/// span{g_k} by more than `tolerance` relative.
AlphaTensor alpha_coefficients(const MechanicalSystem& sys, const Eigen::VectorXd& x,
                               double tolerance = kSpanTolerance);

/// β_ik = Σ_j u_j α_ijk.
Eigen::MatrixXd beta_matrix(const AlphaTensor& alpha, const Eigen::VectorXd& u);

/// [g_1 … g_n, fg_1 … fg_n] as a 2n×2n matrix.
Eigen::MatrixXd frame_matrix(const MechanicalSystem& sys, const Eigen::VectorXd& x);
/// Smallest singular value of frame_matrix.
double frame_rank(const MechanicalSystem& sys, const Eigen::VectorXd& x);

/// Smallest singular value after scaling every column to unit length. Zero
/// columns count as rank deficiency.
double normalized_min_singular_value(const Eigen::MatrixXd& columns);

struct BSetCertificate {
  bool independent = false;
  double smallest_singular_value = 0.0;
};

inline constexpr double kRankThreshold = 1e-8;

/// Linear independence of {g_s, fg_s, ffg_s, fffg_s + c·g_b ffg_s} where s is
/// the candidate singular channel and b the bang channel held at value c.
/// Defaults are the arm's u2-singular case.
BSetCertificate b_set_certificate(const MechanicalSystem& sys, const Eigen::VectorXd& x, double c,
                                  int singular_channel = 1, int bang_channel = 0,
                                  double threshold = kRankThreshold);

}  // namespace singarc
