#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "nes/dither.hpp"
#include "nes/game.hpp"
#include "nes/trigger.hpp"
#include "nes/types.hpp"

namespace nes {

enum class Mode { full, average, periodic };
enum class Integrator { euler, rk4 };

inline constexpr double kOverflowGuard = 1e12;

template <typename T>
struct ScenarioConfig {
  QuadraticGame<T> game;
  DitherPlan<T> dither;
  TriggerPolicy<T> policy;
  Vec2<T> gains{Vec2<T>::Zero()};
  Vec2<T> theta_hat0{Vec2<T>::Zero()};
  T dt{T(1e-3)};
  T t_final{};
  Mode mode{Mode::full};
  T baseline_h{};        // update period, periodic mode only
  int record_stride{1};  // keep every n-th step in the trajectory
  Integrator integrator{Integrator::euler};
};

template <typename T>
void validate_config(const ScenarioConfig<T>& cfg) {
  validate(cfg.game);
  validate(cfg.dither);
  validate(cfg.policy);
  if (!(cfg.gains[0] > T(0)) || !(cfg.gains[1] > T(0)))
    throw InvalidParameters("gains must be positive");
  if (!(cfg.dt > T(0))) throw InvalidParameters("dt must be positive");
  if (!(cfg.t_final >= cfg.dt))
    throw InvalidParameters("t_final must cover at least one step");
  if (cfg.record_stride < 1)
    throw InvalidParameters("record_stride must be at least 1");
  if (cfg.mode == Mode::periodic && !(cfg.baseline_h >= cfg.dt))
    throw InvalidParameters("baseline_h must be at least dt");
  const Mat2<T> loop = hessian(cfg.game) * cfg.gains.asDiagonal();
  if (!hurwitz_check(loop))
    throw NotHurwitz("gain-scaled pseudo-gradient Jacobian is not Hurwitz");
}

template <typename T>
struct Measurement {
  Vec2<T> theta;
  Vec2<T> payoffs;
  Vec2<T> g;  // own-action partial derivatives at the played point
};

// Each player perturbs the action estimate with her probe and reads the payoff
// at the played point; the gradient estimate fed to the monitors is the exact
// own-action slope there.
template <typename T>
Measurement<T> measure(const QuadraticGame<T>& game, const DitherPlan<T>& plan,
                       T t, const Vec2<T>& theta_hat) {
  Measurement<T> m;
  m.theta = theta_hat + Vec2<T>(probe(plan, 0, t), probe(plan, 1, t));
  m.payoffs = Vec2<T>(payoff(game, 0, m.theta), payoff(game, 1, m.theta));
  m.g = pseudo_gradient(game, m.theta);
  return m;
}

// Classical demodulation product (2/a_i) sin(w_i t) y_i. Not used inside the
// closed loop; it is the measurement model whose local expansion the analysis
// module verifies term by term.
template <typename T>
Vec2<T> demodulated_gradient(const QuadraticGame<T>& game,
                             const DitherPlan<T>& plan, T t,
                             const Vec2<T>& theta_hat) {
  const Measurement<T> m = measure(game, plan, t, theta_hat);
  return Vec2<T>(demod(plan, 0, t) * m.payoffs[0],
                 demod(plan, 1, t) * m.payoffs[1]);
}

template <typename T>
struct Sample {
  T t{};
  Vec2<T> theta;
  Vec2<T> theta_hat;
  Vec2<T> g_hat;
  Vec2<T> dev;  // held - estimate, before this boundary's trigger decision
  Vec2<T> u;    // control active from this boundary on
  Vec2<T> payoffs;
};

template <typename T>
struct TrajectoryMeta {
  Mode mode{Mode::full};
  T dt{};
  T t_final{};
  std::size_t steps{};
  T omega{};  // base frequency of the probe pair
};

template <typename T>
struct Trajectory {
  std::vector<Sample<T>> samples;
  std::array<std::vector<T>, 2> event_times;
  TrajectoryMeta<T> meta;
};

template <typename T>
struct ClosedLoopState {
  std::size_t step{0};
  T t{};
  Vec2<T> theta_hat;
  std::array<EventMonitor<T>, 2> monitors;
  Vec2<T> u_held;
};

template <typename T>
ClosedLoopState<T> init_full_state(const ScenarioConfig<T>& cfg) {
  ClosedLoopState<T> s;
  s.step = 0;
  s.t = T(0);
  s.theta_hat = cfg.theta_hat0;
  const Measurement<T> m = measure(cfg.game, cfg.dither, T(0), s.theta_hat);
  s.monitors = {make_monitor(0, m.g[0]), make_monitor(1, m.g[1])};
  s.u_held = cfg.gains.cwiseProduct(
      Vec2<T>(s.monitors[0].held_gradient, s.monitors[1].held_gradient));
  return s;
}

namespace detail {

template <typename T>
void check_box(const Vec2<T>& x, T t) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > T(kOverflowGuard))
    throw NumericOverflow(static_cast<double>(t),
                          "state left the admissible box");
}

// With zero-order-hold inputs the right-hand side is constant over a step, so
// the four stage evaluations coincide and the scheme choice cannot change the
// trajectory. Both paths are kept so the equivalence stays visible and tested.
template <typename T>
Vec2<T> advance(Integrator scheme, const Vec2<T>& x, const Vec2<T>& rhs, T dt) {
  if (scheme == Integrator::euler) return x + dt * rhs;
  const Vec2<T> k1 = rhs;
  const Vec2<T> k2 = rhs;
  const Vec2<T> k3 = rhs;
  const Vec2<T> k4 = rhs;
  return x + dt / T(6) * (k1 + T(2) * k2 + T(2) * k3 + k4);
}

}  // namespace detail

// Boundary work at state.t: measure, compare against the held values, fire the
// per-player monitors where the threshold is crossed, refresh the held control.
// Returns the measurement and the pre-decision deviations so callers can record
// them before they are reset.
template <typename T>
Measurement<T> full_boundary(const ScenarioConfig<T>& cfg,
                             ClosedLoopState<T>& s, Vec2<T>& dev_pre) {
  const Measurement<T> m = measure(cfg.game, cfg.dither, s.t, s.theta_hat);
  for (int i = 0; i < 2; ++i) {
    const T dev = deviation(s.monitors[i], m.g[i]);
    dev_pre[i] = dev;
    if (should_trigger(cfg.policy, i, m.g[i], dev))
      on_trigger(s.monitors[i], s.t, m.g[i]);
  }
  s.u_held = cfg.gains.cwiseProduct(
      Vec2<T>(s.monitors[0].held_gradient, s.monitors[1].held_gradient));
  return m;
}

// One explicit step of d theta_hat / dt = u with u = K * held: boundary
// processing first, then integration, so a fresh hold acts immediately.
template <typename T>
void step_full(const ScenarioConfig<T>& cfg, ClosedLoopState<T>& s) {
  Vec2<T> dev_pre;
  full_boundary(cfg, s, dev_pre);
  s.theta_hat = detail::advance(cfg.integrator, s.theta_hat, s.u_held, cfg.dt);
  ++s.step;
  s.t = T(s.step) * cfg.dt;
  detail::check_box(s.theta_hat, s.t);
}

template <typename T>
struct AverageLoopState {
  std::size_t step{0};
  T tbar{};
  Vec2<T> g_av;
  std::array<EventMonitor<T>, 2> monitors;
  Vec2<T> u_held;
};

template <typename T>
AverageLoopState<T> init_average_state(const ScenarioConfig<T>& cfg) {
  AverageLoopState<T> s;
  s.step = 0;
  s.tbar = T(0);
  s.g_av = pseudo_gradient(cfg.game, cfg.theta_hat0);
  s.monitors = {make_monitor(0, s.g_av[0]), make_monitor(1, s.g_av[1])};
  s.u_held = cfg.gains.cwiseProduct(s.g_av);
  return s;
}

// Averaged-loop boundary. The monitor is the vector condition
// sbar ||G_av|| - ||e_av|| < 0 and both players update together; the
// componentwise rule collapses to one-step event gaps whenever a component of
// G_av crosses zero, while the vector rule carries the guaranteed spacing.
template <typename T>
void average_boundary(const ScenarioConfig<T>& cfg, AverageLoopState<T>& s,
                      T omega, Vec2<T>& dev_pre) {
  const Vec2<T> held(s.monitors[0].held_gradient, s.monitors[1].held_gradient);
  dev_pre = held - s.g_av;
  const T sbar = sigma_bar(cfg.policy);
  if (sbar * s.g_av.norm() - dev_pre.norm() < T(0)) {
    const T t_mapped = s.tbar / omega;
    on_trigger(s.monitors[0], t_mapped, s.g_av[0]);
    on_trigger(s.monitors[1], t_mapped, s.g_av[1]);
  }
  s.u_held = cfg.gains.cwiseProduct(
      Vec2<T>(s.monitors[0].held_gradient, s.monitors[1].held_gradient));
}

// One explicit step of d G_av / d tbar = (1/omega) H K e_held in the slow
// clock tbar = omega t, with dtbar = omega dt.
template <typename T>
void step_average(const ScenarioConfig<T>& cfg, AverageLoopState<T>& s) {
  const T omega = base_frequency(cfg.dither);
  Vec2<T> dev_pre;
  average_boundary(cfg, s, omega, dev_pre);
  const Mat2<T> hk = hessian(cfg.game) * cfg.gains.asDiagonal();
  const Vec2<T> held(s.monitors[0].held_gradient, s.monitors[1].held_gradient);
  const Vec2<T> rhs = hk * held / omega;
  const T dtbar = omega * cfg.dt;
  s.g_av = detail::advance(cfg.integrator, s.g_av, rhs, dtbar);
  ++s.step;
  s.tbar = T(s.step) * dtbar;
  detail::check_box(s.g_av, s.tbar);
}

namespace detail {

template <typename T>
Trajectory<T> run_full_or_periodic(const ScenarioConfig<T>& cfg) {
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
  ClosedLoopState<T> s = init_full_state(cfg);
  Trajectory<T> traj;
  traj.meta = {cfg.mode, cfg.dt, T(steps) * cfg.dt, steps,
               base_frequency(cfg.dither)};
  traj.samples.reserve(steps / cfg.record_stride + 2);
  std::int64_t next_update = 1;  // periodic mode: next multiple of baseline_h

  auto boundary = [&](bool record) {
    Vec2<T> dev_pre;
    Measurement<T> m;
    if (cfg.mode == Mode::periodic) {
      m = measure(cfg.game, cfg.dither, s.t, s.theta_hat);
      dev_pre = Vec2<T>(deviation(s.monitors[0], m.g[0]),
                        deviation(s.monitors[1], m.g[1]));
      if (s.t >= T(next_update) * cfg.baseline_h - cfg.dt / T(2)) {
        on_trigger(s.monitors[0], s.t, m.g[0]);
        on_trigger(s.monitors[1], s.t, m.g[1]);
        ++next_update;
      }
      s.u_held = cfg.gains.cwiseProduct(
          Vec2<T>(s.monitors[0].held_gradient, s.monitors[1].held_gradient));
    } else {
      m = full_boundary(cfg, s, dev_pre);
    }
    if (record)
      traj.samples.push_back({s.t, m.theta, s.theta_hat, m.g, dev_pre,
                              s.u_held, m.payoffs});
  };

  for (std::size_t i = 0; i < steps; ++i) {
    s.t = T(i) * cfg.dt;
    boundary(i % static_cast<std::size_t>(cfg.record_stride) == 0);
    s.theta_hat =
        advance(cfg.integrator, s.theta_hat, s.u_held, cfg.dt);
    check_box(s.theta_hat, T(i + 1) * cfg.dt);
  }
  s.t = T(steps) * cfg.dt;
  boundary(true);

  traj.event_times = {s.monitors[0].event_times, s.monitors[1].event_times};
  return traj;
}

template <typename T>
Trajectory<T> run_average(const ScenarioConfig<T>& cfg) {
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
  const T omega = base_frequency(cfg.dither);
  const T dtbar = omega * cfg.dt;
  AverageLoopState<T> s = init_average_state(cfg);
  const Mat2<T> hk = hessian(cfg.game) * cfg.gains.asDiagonal();
  const Mat2<T> h_inv = hessian(cfg.game).inverse();
  const Vec2<T> theta_star = nash_equilibrium(cfg.game);

  Trajectory<T> traj;
  traj.meta = {Mode::average, cfg.dt, T(steps) * cfg.dt, steps, omega};
  traj.samples.reserve(steps / cfg.record_stride + 2);

  auto boundary = [&](bool record) {
    Vec2<T> dev_pre;
    average_boundary(cfg, s, omega, dev_pre);
    if (record) {
      const Vec2<T> th = theta_star + h_inv * s.g_av;
      traj.samples.push_back(
          {s.tbar / omega, th, th, s.g_av, dev_pre, s.u_held,
           Vec2<T>(payoff(cfg.game, 0, th), payoff(cfg.game, 1, th))});
    }
  };

  for (std::size_t i = 0; i < steps; ++i) {
    s.tbar = T(i) * dtbar;
    boundary(i % static_cast<std::size_t>(cfg.record_stride) == 0);
    const Vec2<T> held(s.monitors[0].held_gradient,
                       s.monitors[1].held_gradient);
    s.g_av = advance(cfg.integrator, s.g_av, Vec2<T>(hk * held / omega), dtbar);
    check_box(s.g_av, T(i + 1) * dtbar);
  }
  s.tbar = T(steps) * dtbar;
  boundary(true);

  traj.event_times = {s.monitors[0].event_times, s.monitors[1].event_times};
  return traj;
}

}  // namespace detail

// Deterministic: a given config yields a bit-identical trajectory on the same
// build, every run.
template <typename T>
Trajectory<T> run(const ScenarioConfig<T>& cfg) {
  validate_config(cfg);
  if (cfg.mode == Mode::average) return detail::run_average(cfg);
  return detail::run_full_or_periodic(cfg);
}

template <typename T>
Trajectory<T> periodic_baseline(ScenarioConfig<T> cfg, T h) {
  cfg.mode = Mode::periodic;
  cfg.baseline_h = h;
  return run(cfg);
}

}  // namespace nes
