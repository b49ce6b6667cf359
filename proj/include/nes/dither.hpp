#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "nes/types.hpp"

namespace nes {

// Exact frequency num/den in rad/s. Keeping the ratio exact makes the common
// probe period exact as well, which the averaging analysis relies on.
struct Rational {
  std::int64_t num{0};
  std::int64_t den{1};

  void reduce() {
    if (den == 0) throw InvalidParameters("rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
};

inline Rational reduced(Rational r) {
  r.reduce();
  return r;
}

inline Rational mul(Rational a, Rational b) {
  // cross-reduce first so products of benign inputs stay in range
  Rational x{a.num, b.den};
  Rational y{b.num, a.den};
  x.reduce();
  y.reduce();
  Rational out{x.num * y.num, x.den * y.den};
  out.reduce();
  return out;
}

inline bool same_frequency(Rational a, Rational b) {
  a.reduce();
  b.reduce();
  return a.num == b.num && a.den == b.den;
}

template <typename T>
T value_of(const Rational& r) {
  return static_cast<T>(r.num) / static_cast<T>(r.den);
}

template <typename T>
struct DitherPlan {
  std::array<T, 2> amplitude{};
  std::array<Rational, 2> omega{};
};

template <typename T>
void validate(const DitherPlan<T>& plan) {
  for (int i = 0; i < 2; ++i) {
    if (!(plan.amplitude[i] > T(0)))
      throw InvalidParameters("probe amplitude must be positive");
    if (plan.omega[i].num <= 0 || plan.omega[i].den <= 0)
      throw InvalidParameters("probe frequency must be positive");
  }
  if (same_frequency(plan.omega[0], plan.omega[1]))
    throw InvalidParameters("probe frequencies must be distinct");
}

template <typename T>
T omega_value(const DitherPlan<T>& plan, int i) {
  return value_of<T>(plan.omega[i]);
}

template <typename T>
T probe(const DitherPlan<T>& plan, int i, T t) {
  return plan.amplitude[i] * std::sin(omega_value(plan, i) * t);
}

template <typename T>
T demod(const DitherPlan<T>& plan, int i, T t) {
  return T(2) / plan.amplitude[i] * std::sin(omega_value(plan, i) * t);
}

// Smallest T with sin(omega_i (t+T)) = sin(omega_i t) for both probes.
// For omega_i = n_i/d_i in lowest terms: T = 2 pi lcm(d_1,d_2)/gcd(n_1,n_2).
template <typename T>
T common_period(const DitherPlan<T>& plan) {
  const Rational w1 = reduced(plan.omega[0]);
  const Rational w2 = reduced(plan.omega[1]);
  const std::int64_t l = std::lcm(w1.den, w2.den);
  const std::int64_t g = std::gcd(w1.num, w2.num);
  return T(2) * std::numbers::pi_v<T> * static_cast<T>(l) / static_cast<T>(g);
}

// 2 pi / common_period, the rate of the slow averaged clock
template <typename T>
T base_frequency(const DitherPlan<T>& plan) {
  const Rational w1 = reduced(plan.omega[0]);
  const Rational w2 = reduced(plan.omega[1]);
  const std::int64_t l = std::lcm(w1.den, w2.den);
  const std::int64_t g = std::gcd(w1.num, w2.num);
  return static_cast<T>(g) / static_cast<T>(l);
}

template <typename T>
T amplitude_norm(const DitherPlan<T>& plan) {
  return std::hypot(plan.amplitude[0], plan.amplitude[1]);
}

template <typename T>
DitherPlan<T> scaled_frequencies(DitherPlan<T> plan, const Rational& scale) {
  plan.omega[0] = mul(plan.omega[0], scale);
  plan.omega[1] = mul(plan.omega[1], scale);
  return plan;
}

// Best rational for a positive value by continued fractions, denominator
// capped. Throws if no fraction within tol exists under the cap, so callers
// never get a silently wrong frequency ratio.
template <typename T>
Rational rational_from_double(T value, std::int64_t max_den = 1000000,
                              T tol = T(1e-12)) {
  if (!(value > T(0)) || !std::isfinite(value))
    throw InvalidParameters("rational_from_double needs a positive finite value");
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  T x = value;
  for (int it = 0; it < 64; ++it) {
    const T fl = std::floor(x);
    if (fl > T(9e17)) break;
    const std::int64_t a = static_cast<std::int64_t>(fl);
    if (q1 > 0 && a > (max_den - q0) / q1) break;
    const std::int64_t p2 = a * p1 + p0;
    const std::int64_t q2 = a * q1 + q0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const T err = std::abs(static_cast<T>(p1) / static_cast<T>(q1) - value);
    if (err <= tol * value) return reduced(Rational{p1, q1});
    const T frac = x - fl;
    if (frac <= T(0)) break;
    x = T(1) / frac;
  }
  throw InvalidParameters("no rational within tolerance under the denominator cap");
}

}  // namespace nes
