#pragma once

#include <cmath>
#include <type_traits>

namespace singarc {

/// Forward-mode dual number `v + d·ε` with ε² = 0.
///
/// Nesting `Dual<Dual<double>>` carries mixed second directional derivatives,
/// which is how iterated Lie brackets are evaluated exactly. Comparisons and
/// pivoting decisions are made on the innermost real value (see `value_of`).
template <typename T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value), d(0.0) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T value, T tangent) : v(value), d(tangent) {}

  constexpr Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  constexpr Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  constexpr Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  constexpr Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    T inv = T(1.0) / b.v;
    T q = a.v * inv;
    return {q, (a.d - q * b.d) * inv};
  }

  friend constexpr Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
  friend constexpr Dual operator+(double a, const Dual& b) { return {a + b.v, b.d}; }
  friend constexpr Dual operator-(const Dual& a, double b) { return {a.v - b, a.d}; }
  friend constexpr Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
  friend constexpr Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }
  friend constexpr Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }
  friend constexpr Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }
  friend constexpr Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

  friend Dual sin(const Dual& a) {
    using std::cos;
    using std::sin;
    return {sin(a.v), a.d * cos(a.v)};
  }
  friend Dual cos(const Dual& a) {
    using std::cos;
    using std::sin;
    return {cos(a.v), -(a.d * sin(a.v))};
  }
  friend Dual sqrt(const Dual& a) {
    using std::sqrt;
    T r = sqrt(a.v);
    return {r, a.d / (2.0 * r)};
  }
};

template <typename T>
struct NestingDepth : std::integral_constant<int, 0> {};
template <typename T>
struct NestingDepth<Dual<T>> : std::integral_constant<int, 1 + NestingDepth<T>::value> {};

/// Number of dual layers wrapped around `double`.
template <typename T>
inline constexpr int kNestingDepth = NestingDepth<T>::value;

inline constexpr double value_of(double x) { return x; }
template <typename T>
constexpr double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

template <typename T>
Dual<T> abs(const Dual<T>& a) {
  return value_of(a) < 0.0 ? -a : a;
}

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

}  // namespace singarc
