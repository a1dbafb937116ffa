#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace deunet {

/// Forward-mode dual number with N tangent lanes.
///
/// The value lane performs exactly the same sequence of double operations as
/// a scalar evaluation of the same expression, so `.v` is bit-identical to a
/// plain-double run of the same code path.
template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // constant, zero tangent

  static Dual seeded(double value, std::size_t lane) {
    Dual x(value);
    x.d[lane] = 1.0;
    return x;
  }
};

template <std::size_t N>
inline Dual<N> operator+(const Dual<N>& x, const Dual<N>& y) {
  Dual<N> r(x.v + y.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = x.d[i] + y.d[i];
  return r;
}

template <std::size_t N>
inline Dual<N> operator-(const Dual<N>& x, const Dual<N>& y) {
  Dual<N> r(x.v - y.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = x.d[i] - y.d[i];
  return r;
}

template <std::size_t N>
inline Dual<N> operator-(const Dual<N>& x) {
  Dual<N> r(-x.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = -x.d[i];
  return r;
}

template <std::size_t N>
inline Dual<N> operator*(const Dual<N>& x, const Dual<N>& y) {
  Dual<N> r(x.v * y.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = x.d[i] * y.v + x.v * y.d[i];
  return r;
}

template <std::size_t N>
inline Dual<N> operator/(const Dual<N>& x, const Dual<N>& y) {
  Dual<N> r(x.v / y.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = (x.d[i] - r.v * y.d[i]) / y.v;
  return r;
}

template <std::size_t N>
inline Dual<N> operator+(const Dual<N>& x, double y) { return x + Dual<N>(y); }
template <std::size_t N>
inline Dual<N> operator+(double x, const Dual<N>& y) { return Dual<N>(x) + y; }
template <std::size_t N>
inline Dual<N> operator-(const Dual<N>& x, double y) { return x - Dual<N>(y); }
template <std::size_t N>
inline Dual<N> operator-(double x, const Dual<N>& y) { return Dual<N>(x) - y; }
template <std::size_t N>
inline Dual<N> operator*(const Dual<N>& x, double y) { return x * Dual<N>(y); }
template <std::size_t N>
inline Dual<N> operator*(double x, const Dual<N>& y) { return Dual<N>(x) * y; }
template <std::size_t N>
inline Dual<N> operator/(const Dual<N>& x, double y) { return x / Dual<N>(y); }
template <std::size_t N>
inline Dual<N> operator/(double x, const Dual<N>& y) { return Dual<N>(x) / y; }

template <std::size_t N>
inline Dual<N> exp(const Dual<N>& x) {
  const double e = std::exp(x.v);
  Dual<N> r(e);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = e * x.d[i];
  return r;
}

template <std::size_t N>
inline Dual<N> sqrt(const Dual<N>& x) {
  const double s = std::sqrt(x.v);
  Dual<N> r(s);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = x.d[i] / (2.0 * s);
  return r;
}

template <std::size_t N>
inline Dual<N> sin(const Dual<N>& x) {
  const double c = std::cos(x.v);
  Dual<N> r(std::sin(x.v));
  for (std::size_t i = 0; i < N; ++i) r.d[i] = c * x.d[i];
  return r;
}

template <std::size_t N>
inline Dual<N> cos(const Dual<N>& x) {
  const double s = std::sin(x.v);
  Dual<N> r(std::cos(x.v));
  for (std::size_t i = 0; i < N; ++i) r.d[i] = -s * x.d[i];
  return r;
}

/// Hard clamp of the value to [-limit, limit]; tangents are zeroed in the
/// saturated region so derivatives stay consistent with the clamped value.
inline double clamp_mag(double x, double limit) {
  if (x > limit) return limit;
  if (x < -limit) return -limit;
  return x;
}

template <std::size_t N>
inline Dual<N> clamp_mag(const Dual<N>& x, double limit) {
  if (x.v > limit) return Dual<N>(limit);
  if (x.v < -limit) return Dual<N>(-limit);
  return x;
}

inline double value_of(double x) { return x; }
template <std::size_t N>
inline double value_of(const Dual<N>& x) { return x.v; }

}  // namespace deunet
