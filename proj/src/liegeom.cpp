#include "singarc/liegeom.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "singarc/errors.hpp"

namespace singarc {

VectorField VectorField::drift() { return VectorField(FieldKind::kDrift, -1); }

VectorField VectorField::input(int channel) {
  if (channel < 0) throw std::invalid_argument("input channel must be non-negative");
  return VectorField(FieldKind::kInput, channel);
}

VectorField VectorField::bracket(VectorField a, VectorField b) {
  VectorField out(FieldKind::kBracket, -1);
  out.nesting_ = 1 + std::max(a.nesting_, b.nesting_);
  out.children_ = std::make_shared<const std::pair<VectorField, VectorField>>(std::move(a), std::move(b));
  return out;
}

VectorField VectorField::parse(std::string_view word) {
  std::vector<VectorField> letters;
  std::size_t pos = 0;
  while (pos < word.size()) {
    const char c = word[pos];
    if (c == 'f') {
      letters.push_back(drift());
      ++pos;
    } else if (c == 'g') {
      std::size_t end = pos + 1;
      while (end < word.size() && std::isdigit(static_cast<unsigned char>(word[end]))) ++end;
      if (end == pos + 1) throw std::invalid_argument("input field needs a channel number: " + std::string(word));
      const int channel = std::stoi(std::string(word.substr(pos + 1, end - pos - 1)));
      if (channel < 1) throw std::invalid_argument("channels are numbered from 1: " + std::string(word));
      letters.push_back(input(channel - 1));
      pos = end;
    } else {
      throw std::invalid_argument("unexpected character in bracket word: " + std::string(word));
    }
  }
  if (letters.empty()) throw std::invalid_argument("empty bracket word");
  VectorField acc = letters.back();
  for (auto it = letters.rbegin() + 1; it != letters.rend(); ++it) acc = bracket(*it, acc);
  return acc;
}

std::string VectorField::to_string() const {
  switch (kind_) {
    case FieldKind::kDrift: return "f";
    case FieldKind::kInput: return "g" + std::to_string(channel_ + 1);
    case FieldKind::kBracket:
      if (left().kind() != FieldKind::kBracket) return left().to_string() + right().to_string();
      return "[" + left().to_string() + "," + right().to_string() + "]";
  }
  return {};
}

namespace {

template <typename T>
std::pair<SVector<T>, SVector<T>> value_and_directional(const MechanicalSystem& sys, const VectorField& field,
                                                         std::span<const T> x, const SVector<T>& direction) {
  std::vector<Dual<T>> xd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xd[i] = Dual<T>(x[i], direction[i]);
  const SVector<Dual<T>> y = evaluate_t<Dual<T>>(sys, field, std::span<const Dual<T>>(xd));
  std::pair<SVector<T>, SVector<T>> out;
  out.first.reserve(y.size());
  out.second.reserve(y.size());
  for (const auto& yi : y) {
    out.first.push_back(yi.v);
    out.second.push_back(yi.d);
  }
  return out;
}

std::span<const double> as_span(const Eigen::VectorXd& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

Eigen::VectorXd to_eigen(const SVector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

template <typename T>
SVector<T> evaluate_t(const MechanicalSystem& sys, const VectorField& field, std::span<const T> x) {
  switch (field.kind()) {
    case FieldKind::kDrift:
      return drift<T>(sys, x);
    case FieldKind::kInput:
      if (field.channel() >= sys.dof()) throw std::out_of_range("input channel beyond system dimension");
      return input_column<T>(sys, x, field.channel());
    case FieldKind::kBracket:
      break;
  }
  if (kNestingDepth<T> + field.nesting() > kMaxNesting) {
    throw DerivativeUnavailable("bracket " + field.to_string() + " needs more than " +
                                std::to_string(kMaxNesting) + " derivative levels");
  }
  if constexpr (kNestingDepth<T> >= kMaxNesting) {
    return {};  // unreachable: guarded above
  } else {
    const SVector<T> a = evaluate_t<T>(sys, field.left(), x);
    const auto [b, db_a] = value_and_directional<T>(sys, field.right(), x, a);
    const auto [a_again, da_b] = value_and_directional<T>(sys, field.left(), x, b);
    SVector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = db_a[i] - da_b[i];
    return out;
  }
}

template SVector<double> evaluate_t<double>(const MechanicalSystem&, const VectorField&, std::span<const double>);
template SVector<D1> evaluate_t<D1>(const MechanicalSystem&, const VectorField&, std::span<const D1>);
template SVector<D2> evaluate_t<D2>(const MechanicalSystem&, const VectorField&, std::span<const D2>);
template SVector<D3> evaluate_t<D3>(const MechanicalSystem&, const VectorField&, std::span<const D3>);

Eigen::VectorXd evaluate(const MechanicalSystem& sys, const VectorField& field, const Eigen::VectorXd& x) {
  return to_eigen(evaluate_t<double>(sys, field, as_span(x)));
}

Eigen::VectorXd lie_bracket(const MechanicalSystem& sys, const VectorField& a, const VectorField& b,
                            const Eigen::VectorXd& x) {
  return evaluate(sys, VectorField::bracket(a, b), x);
}

Eigen::VectorXd iterated_bracket(const MechanicalSystem& sys, std::span<const VectorField> word,
                                 const Eigen::VectorXd& x) {
  if (word.empty()) throw std::invalid_argument("empty bracket word");
  VectorField acc = word.back();
  for (auto it = word.rbegin() + 1; it != word.rend(); ++it) acc = VectorField::bracket(*it, acc);
  return evaluate(sys, acc, x);
}

Eigen::VectorXd iterated_bracket(const MechanicalSystem& sys, std::string_view word, const Eigen::VectorXd& x) {
  return evaluate(sys, VectorField::parse(word), x);
}

AlphaTensor alpha_coefficients(const MechanicalSystem& sys, const Eigen::VectorXd& x, double tolerance) {
  const int n = sys.dof();
  const Eigen::MatrixXd g = input_columns(sys, x);
  const Eigen::MatrixXd m = mass_matrix(sys, x.head(n));
  const VectorField f = VectorField::drift();

  AlphaTensor alpha(n);
  for (int j = 0; j < n; ++j) {
    const VectorField fgj = VectorField::bracket(f, VectorField::input(j));
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd h = evaluate(sys, VectorField::bracket(VectorField::input(i), fgj), x);
      // Bottom block of h equals L(q) α, so α = M(q) h_bottom.
      const Eigen::VectorXd coeffs = m * h.tail(n);
      const double residual = (h - g * coeffs).norm();
      const double scale = h.norm();
      const double relative = scale > 0.0 ? residual / scale : residual;
      alpha.max_residual = std::max(alpha.max_residual, relative);
      if (residual > tolerance * scale) {
        throw SpanViolation("g" + std::to_string(i + 1) + "fg" + std::to_string(j + 1) +
                            " is not in span{g_k}; relative residual " + std::to_string(relative));
      }
      for (int k = 0; k < n; ++k) alpha(i, j, k) = coeffs[k];
    }
  }
  return alpha;
}

Eigen::MatrixXd beta_matrix(const AlphaTensor& alpha, const Eigen::VectorXd& u) {
  const int n = alpha.size();
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) beta(i, k) += u[j] * alpha(i, j, k);
  return beta;
}

Eigen::MatrixXd frame_matrix(const MechanicalSystem& sys, const Eigen::VectorXd& x) {
  const int n = sys.dof();
  Eigen::MatrixXd frame(2 * n, 2 * n);
  frame.leftCols(n) = input_columns(sys, x);
  for (int i = 0; i < n; ++i) {
    frame.col(n + i) = lie_bracket(sys, VectorField::drift(), VectorField::input(i), x);
  }
  return frame;
}

double frame_rank(const MechanicalSystem& sys, const Eigen::VectorXd& x) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(frame_matrix(sys, x)).singularValues().minCoeff();
}

double normalized_min_singular_value(const Eigen::MatrixXd& columns) {
  Eigen::MatrixXd scaled = columns;
  for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
    const double norm = scaled.col(c).norm();
    if (!(norm > 0.0)) return 0.0;
    scaled.col(c) /= norm;
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(scaled).singularValues().minCoeff();
}

BSetCertificate b_set_certificate(const MechanicalSystem& sys, const Eigen::VectorXd& x, double c,
                                  int singular_channel, int bang_channel, double threshold) {
  const VectorField f = VectorField::drift();
  const VectorField gs = VectorField::input(singular_channel);
  const VectorField fgs = VectorField::bracket(f, gs);
  const VectorField ffgs = VectorField::bracket(f, fgs);
  const VectorField fffgs = VectorField::bracket(f, ffgs);
  const VectorField gb_ffgs = VectorField::bracket(VectorField::input(bang_channel), ffgs);

  Eigen::MatrixXd cols(x.size(), 4);
  cols.col(0) = evaluate(sys, gs, x);
  cols.col(1) = evaluate(sys, fgs, x);
  cols.col(2) = evaluate(sys, ffgs, x);
  cols.col(3) = evaluate(sys, fffgs, x) + c * evaluate(sys, gb_ffgs, x);

  BSetCertificate cert;
  cert.smallest_singular_value = normalized_min_singular_value(cols);
  cert.independent = cert.smallest_singular_value > threshold;
  return cert;
}

}  // namespace singarc
