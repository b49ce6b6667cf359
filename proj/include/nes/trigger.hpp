#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "nes/types.hpp"

namespace nes {

template <typename T>
struct TriggerPolicy {
  std::array<T, 2> sigma{};
};

template <typename T>
void validate(const TriggerPolicy<T>& policy) {
  for (int i = 0; i < 2; ++i)
    if (!(policy.sigma[i] > T(0)) || !(policy.sigma[i] < T(1)))
      throw InvalidParameters("trigger threshold must lie in (0,1)");
}

template <typename T>
T sigma_bar(const TriggerPolicy<T>& policy) {
  return std::max(policy.sigma[0], policy.sigma[1]);
}

// Per-player sample-and-hold monitor. event_times is strictly increasing and
// always starts with the initial hold at t = 0.
template <typename T>
struct EventMonitor {
  int player{0};
  T held_gradient{};
  std::vector<T> event_times;
};

template <typename T>
EventMonitor<T> make_monitor(int player, T g0) {
  EventMonitor<T> m;
  m.player = player;
  m.held_gradient = g0;
  m.event_times.push_back(T(0));
  return m;
}

template <typename T>
T deviation(const EventMonitor<T>& m, T g_now) {
  return m.held_gradient - g_now;
}

// fires exactly when sigma_i |G_i| - |e_i| < 0 (strict)
template <typename T>
bool should_trigger(const TriggerPolicy<T>& policy, int player, T g_now,
                    T dev) {
  return policy.sigma[player] * std::abs(g_now) - std::abs(dev) < T(0);
}

template <typename T>
void on_trigger(EventMonitor<T>& m, T t, T g_now) {
  if (!(t > m.event_times.back()))
    throw NonMonotoneTime("event time does not advance");
  m.event_times.push_back(t);
  m.held_gradient = g_now;
}

// Guaranteed spacing of vector-monitor events for the averaged loop, in the
// slow clock. The deviation-to-signal ratio obeys a Riccati bound with
// b0 = n/s, b1 = 2n, b2 = s n (n the loop matrix norm, s the threshold), and
// b1^2 = 4 b0 b2 makes the integral elementary:
//   integral_0^1 dx/(b0 + b1 x + b2 x^2) = s / (n (1 + s)).
template <typename T>
T min_inter_event_time(T loop_norm, T sbar) {
  if (!(loop_norm > T(0)) || !(sbar > T(0)) || !(sbar < T(1)))
    throw InvalidParameters("min_inter_event_time needs norm > 0, sbar in (0,1)");
  return sbar / (loop_norm * (T(1) + sbar));
}

// same quantity by composite Simpson quadrature, kept as an independent route
template <typename T>
T min_inter_event_time_quadrature(T loop_norm, T sbar, int panels = 2048) {
  if (!(loop_norm > T(0)) || !(sbar > T(0)) || !(sbar < T(1)))
    throw InvalidParameters("min_inter_event_time needs norm > 0, sbar in (0,1)");
  const T b0 = loop_norm / sbar;
  const T b1 = T(2) * loop_norm;
  const T b2 = sbar * loop_norm;
  auto f = [&](T x) { return T(1) / (b0 + b1 * x + b2 * x * x); };
  const int n = 2 * std::max(1, panels / 2);
  const T h = T(1) / T(n);
  T acc = f(T(0)) + f(T(1));
  for (int k = 1; k < n; ++k) acc += (k % 2 ? T(4) : T(2)) * f(h * T(k));
  return acc * h / T(3);
}

template <typename T>
struct InterEventStats {
  std::size_t count{};
  std::optional<T> min_gap;
  std::optional<T> mean_gap;
};

template <typename T>
InterEventStats<T> inter_event_stats(const std::vector<T>& event_times) {
  if (event_times.empty()) throw EmptyLog("no events recorded");
  InterEventStats<T> s;
  s.count = event_times.size();
  if (s.count < 2) return s;
  T mn = event_times[1] - event_times[0];
  T total = T(0);
  for (std::size_t k = 1; k < event_times.size(); ++k) {
    const T gap = event_times[k] - event_times[k - 1];
    mn = std::min(mn, gap);
    total += gap;
  }
  s.min_gap = mn;
  s.mean_gap = total / T(s.count - 1);
  return s;
}

}  // namespace nes
