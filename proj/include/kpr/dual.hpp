#pragma once

// Forward-mode dual numbers carrying N partial derivatives. Used to get
// machine-precision gradients of the inverse metric in the axis-adapted
// chart, where hand-differentiating the closed form is error prone.

#include <array>
#include <cmath>
#include <cstddef>

namespace kpr {

template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design

  static Dual seed(double value, std::size_t slot) {
    Dual x(value);
    x.d[slot] = 1.0;
    return x;
  }
};

template <std::size_t N>
inline Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v + b.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
template <std::size_t N>
inline Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v - b.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
template <std::size_t N>
inline Dual<N> operator-(const Dual<N>& a) {
  Dual<N> r(-a.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}
template <std::size_t N>
inline Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v * b.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
template <std::size_t N>
inline Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v / b.v);
  const double inv2 = 1.0 / (b.v * b.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv2;
  return r;
}

template <std::size_t N> inline Dual<N> operator+(double a, const Dual<N>& b) { return Dual<N>(a) + b; }
template <std::size_t N> inline Dual<N> operator+(const Dual<N>& a, double b) { return a + Dual<N>(b); }
template <std::size_t N> inline Dual<N> operator-(double a, const Dual<N>& b) { return Dual<N>(a) - b; }
template <std::size_t N> inline Dual<N> operator-(const Dual<N>& a, double b) { return a - Dual<N>(b); }
template <std::size_t N> inline Dual<N> operator*(double a, const Dual<N>& b) { return Dual<N>(a) * b; }
template <std::size_t N> inline Dual<N> operator*(const Dual<N>& a, double b) { return a * Dual<N>(b); }
template <std::size_t N> inline Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) / b; }
template <std::size_t N> inline Dual<N> operator/(const Dual<N>& a, double b) { return a / Dual<N>(b); }

template <std::size_t N>
inline Dual<N> sqrt(const Dual<N>& a) {
  Dual<N> r(std::sqrt(a.v));
  const double s = 0.5 / r.v;
  for (std::size_t i = 0; i < N; ++i) r.d[i] = s * a.d[i];
  return r;
}

// Scalar passthroughs so templated geometry code works for plain doubles.
inline double value_of(double x) { return x; }
template <std::size_t N>
inline double value_of(const Dual<N>& x) { return x.v; }

}  // namespace kpr
