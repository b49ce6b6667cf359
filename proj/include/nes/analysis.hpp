#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "nes/dither.hpp"
#include "nes/game.hpp"
#include "nes/sim.hpp"
#include "nes/trigger.hpp"
#include "nes/types.hpp"

namespace nes {

template <typename T>
std::pair<T, T> symmetric_eigenvalues(const Mat2<T>& m) {
  Eigen::SelfAdjointEigenSolver<Mat2<T>> es(m);
  return {es.eigenvalues()[0], es.eigenvalues()[1]};
}

template <typename T>
T spectral_norm(const Mat2<T>& m) {
  Eigen::SelfAdjointEigenSolver<Mat2<T>> es(m.transpose() * m);
  return std::sqrt(std::max(T(0), es.eigenvalues()[1]));
}

// Unique P = P^T with A^T P + P A = -Q for Hurwitz A, via the equivalent
// 3-unknown linear system in (p11, p12, p22).
template <typename T>
Mat2<T> solve_lyapunov(const Mat2<T>& a, const Mat2<T>& q) {
  if (!hurwitz_check(a)) throw NotHurwitz("Lyapunov solve needs a Hurwitz matrix");
  const T q_scale = q.cwiseAbs().maxCoeff();
  if (std::abs(q(0, 1) - q(1, 0)) > T(1e-12) * std::max(T(1), q_scale))
    throw InvalidParameters("Q must be symmetric");
  Eigen::Matrix<T, 3, 3> m;
  m << T(2) * a(0, 0), T(2) * a(1, 0), T(0),
       a(0, 1), a(0, 0) + a(1, 1), a(1, 0),
       T(0), T(2) * a(0, 1), T(2) * a(1, 1);
  const Eigen::Matrix<T, 3, 1> rhs(-q(0, 0), -q(0, 1), -q(1, 1));
  const Eigen::Matrix<T, 3, 1> p = m.colPivHouseholderQr().solve(rhs);
  Mat2<T> out;
  out << p[0], p[1], p[1], p[2];
  return out;
}

template <typename T>
struct StabilityReport {
  Mat2<T> P;
  Mat2<T> Q;
  T alpha{};          // lambda_min(Q) / lambda_max(P)
  T sigma_bar_max{};  // largest admissible threshold, lambda_min(Q)/(2 ||P H K||)
  T sigma_hat{};      // sigma_bar / sigma_bar_max
  T m_theta{};        // overshoot constant of the action-error envelope
  T tau_star{};       // guaranteed event spacing in the slow clock
  T hk_norm{};
};

template <typename T>
Mat2<T> loop_matrix(const QuadraticGame<T>& game, const Vec2<T>& gains) {
  return hessian(game) * gains.asDiagonal();
}

template <typename T>
StabilityReport<T> build_report(const QuadraticGame<T>& game,
                                const Vec2<T>& gains,
                                const TriggerPolicy<T>& policy,
                                const Mat2<T>& q = Mat2<T>::Identity()) {
  StabilityReport<T> r;
  const Mat2<T> hk = loop_matrix(game, gains);
  r.Q = q;
  r.P = solve_lyapunov(hk, q);
  const auto [pmin, pmax] = symmetric_eigenvalues(r.P);
  const auto [qmin, qmax] = symmetric_eigenvalues(q);
  (void)qmax;
  if (!(pmin > T(0))) throw NotConverged("Lyapunov certificate not positive definite");
  r.alpha = qmin / pmax;
  r.sigma_bar_max = qmin / (T(2) * spectral_norm(Mat2<T>(r.P * hk)));
  r.sigma_hat = sigma_bar(policy) / r.sigma_bar_max;
  const Mat2<T> h = hessian(game);
  r.m_theta = std::sqrt(pmax / pmin) * spectral_norm(Mat2<T>(h.inverse())) *
              spectral_norm(h);
  r.hk_norm = spectral_norm(hk);
  r.tau_star = min_inter_event_time(r.hk_norm, sigma_bar(policy));
  return r;
}

template <typename T>
struct DecayFit {
  T m{};      // fitted exponential rate
  T M_bar{};  // fitted initial envelope amplitude
  T floor{};  // residual level the signal settles at
};

// Fit residual(t) ~ M_bar exp(-m t) + floor. The floor is the median of the
// last tenth of the samples; the rate is a least-squares line through
// log(residual - floor) restricted to the stretch before the signal is within
// 10x of the floor, where the exponential dominates.
template <typename T>
DecayFit<T> decay_fit(const std::vector<T>& ts, const std::vector<T>& rs) {
  if (ts.size() != rs.size() || ts.size() < 10)
    throw InvalidParameters("decay_fit needs matched series, 10 samples or more");
  if (!(rs.back() < T(0.1) * rs.front()))
    throw NotConverged("residual did not drop below 10% of its initial value");
  const std::size_t n = rs.size();
  std::vector<T> tail(rs.end() - static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, n / 10)),
                      rs.end());
  std::sort(tail.begin(), tail.end());
  DecayFit<T> fit;
  fit.floor = tail.size() % 2 ? tail[tail.size() / 2]
                              : (tail[tail.size() / 2 - 1] + tail[tail.size() / 2]) / T(2);
  T t_cut = ts.back();
  for (std::size_t i = 0; i < n; ++i)
    if (rs[i] <= T(10) * fit.floor) {
      t_cut = ts[i];
      break;
    }
  T sx{}, sy{}, sxx{}, sxy{};
  std::size_t k = 0;
  for (std::size_t i = 0; i < n && ts[i] <= t_cut; ++i) {
    if (!(rs[i] > fit.floor)) continue;
    const T x = ts[i];
    const T y = std::log(rs[i] - fit.floor);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) throw InvalidParameters("decay_fit has no usable decay stretch");
  const T denom = T(k) * sxx - sx * sx;
  const T slope = (T(k) * sxy - sx * sy) / denom;
  const T intercept = (sy - slope * sx) / T(k);
  fit.m = -slope;
  fit.M_bar = std::exp(intercept);
  return fit;
}

// Sup-norm distance between the dithered loop and the averaged loop, with both
// probe frequencies scaled together and amplitudes fixed. Both loops run in
// continuous-control emulation (hold refreshed every step): under event
// triggering the two event patterns differ during the transient by order-one
// path deviations that do not shrink with the frequency scale, which is noise
// for the quantity of interest here, the probe-induced ripple.
template <typename T>
std::vector<std::pair<T, T>> averaging_gap(
    ScenarioConfig<T> cfg, const std::vector<std::int64_t>& scales = {1, 2, 4}) {
  cfg.mode = Mode::periodic;
  cfg.baseline_h = cfg.dt;
  validate_config(cfg);

  // averaged reference in plain time: d theta / dt = K (H theta + h),
  // recorded on the same boundary grid as run()
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
  const std::size_t stride = static_cast<std::size_t>(cfg.record_stride);
  std::vector<Vec2<T>> ref;
  ref.reserve(steps / stride + 2);
  {
    Vec2<T> th = cfg.theta_hat0;
    const Mat2<T> h = hessian(cfg.game);
    const Vec2<T> off = offset_vector(cfg.game);
    for (std::size_t i = 0; i < steps; ++i) {
      if (i % stride == 0) ref.push_back(th);
      const Vec2<T> u = cfg.gains.cwiseProduct(Vec2<T>(h * th + off));
      th = detail::advance(cfg.integrator, th, u, cfg.dt);
    }
    ref.push_back(th);
  }

  std::vector<std::pair<T, T>> gaps;
  for (const std::int64_t s : scales) {
    ScenarioConfig<T> scaled = cfg;
    scaled.dither = scaled_frequencies(cfg.dither, Rational{s, 1});
    const Trajectory<T> traj = run(scaled);
    if (traj.samples.size() != ref.size())
      throw InvalidParameters("averaging_gap grids disagree");
    T sup = T(0);
    for (std::size_t k = 0; k < ref.size(); ++k)
      sup = std::max(sup, (traj.samples[k].theta_hat - ref[k]).norm());
    gaps.emplace_back(T(s), sup);
  }
  return gaps;
}

template <typename T>
struct DecompositionTerms {
  Mat2<T> interaction;  // time-varying factor multiplying the action error
  Vec2<T> disturbance;  // action-error-free part
};

// Exact expansion of the demodulated estimate around the equilibrium. With
// x = err_own + a_own sin(w_own t) and y = err_other + a_other sin(w_other t),
//
//   (2/a) sin(w t) J(theta* + [x, y])
//     = (2/a) sin(w t) [J* + G* x + F* y + A/2 x^2 + B/2 y^2 + C x y]
//
// and regrouping by powers of the action error err after reducing the
// trigonometric products gives the three pieces below: a linear interaction
// row, a disturbance, and a quadratic remainder handled in
// gradient_decomposition_residual. G* and F* are the own- and other-action
// slopes at the equilibrium point (G* vanishes there by construction, but the
// identity is kept exact for whatever point nash_equilibrium returns).
//
// Product reductions used, written once so each line below is checkable:
//   sin^2 u          = (1 - cos 2u)/2
//   sin u sin v      = (cos(u-v) - cos(u+v))/2
//   sin^3 u          = (3 sin u - sin 3u)/4
//   sin u cos 2v     = (sin(u+2v) + sin(u-2v))/2
//   cos 2u sin v     = (sin(2u+v) - sin(2u-v))/2
template <typename T>
DecompositionTerms<T> decomposition_terms(const QuadraticGame<T>& game,
                                          const DitherPlan<T>& plan, T t) {
  const Vec2<T> star = nash_equilibrium(game);
  DecompositionTerms<T> out;
  for (int i = 0; i < 2; ++i) {
    const PlayerPayoff<T>& p = (i == 0) ? game.p1 : game.p2;
    const int j = 1 - i;
    const T A = p.own_quad, B = p.other_quad, C = p.cross;
    const T a_own = plan.amplitude[i], a_other = plan.amplitude[j];
    const T w_own = omega_value(plan, i), w_other = omega_value(plan, j);
    const T g_star = A * star[i] + C * star[j] + p.lin_own;
    const T f_star = C * star[i] + B * star[j] + p.lin_other;
    const T j_star = payoff(game, i, star);

    const T s_own = std::sin(w_own * t);
    const T s_other = std::sin(w_other * t);
    const T one_m_cos2 = T(1) - std::cos(T(2) * w_own * t);
    const T beat = std::cos((w_own - w_other) * t) - std::cos((w_own + w_other) * t);

    out.interaction(i, i) =
        T(2) * g_star / a_own * s_own + A * one_m_cos2 + C * a_other / a_own * beat;
    out.interaction(i, j) =
        T(2) * f_star / a_own * s_own + C * one_m_cos2 + B * a_other / a_own * beat;

    out.disturbance[i] =
        T(2) * j_star / a_own * s_own + g_star * one_m_cos2 +
        f_star * a_other / a_own * beat +
        A * a_own / T(4) * (T(3) * s_own - std::sin(T(3) * w_own * t)) +
        B * a_other * a_other / (T(2) * a_own) *
            (s_own - (std::sin((w_own + T(2) * w_other) * t) +
                      std::sin((w_own - T(2) * w_other) * t)) /
                         T(2)) +
        C * a_other *
            (s_other - (std::sin((T(2) * w_own + w_other) * t) -
                        std::sin((T(2) * w_own - w_other) * t)) /
                           T(2));
  }
  return out;
}

// Worst-player absolute residual of the identity
//   demodulated estimate = interaction * err + disturbance + quadratic part
// at the given action error and time. Should be rounding noise for any game.
template <typename T>
T gradient_decomposition_residual(const QuadraticGame<T>& game,
                                  const DitherPlan<T>& plan,
                                  const Vec2<T>& theta_tilde, T t) {
  const Vec2<T> star = nash_equilibrium(game);
  const Vec2<T> direct =
      demodulated_gradient(game, plan, t, Vec2<T>(star + theta_tilde));
  const DecompositionTerms<T> terms = decomposition_terms(game, plan, t);
  Vec2<T> expansion = terms.interaction * theta_tilde + terms.disturbance;
  for (int i = 0; i < 2; ++i) {
    const PlayerPayoff<T>& p = (i == 0) ? game.p1 : game.p2;
    const int j = 1 - i;
    const T s_own = std::sin(omega_value(plan, i) * t);
    expansion[i] += s_own / plan.amplitude[i] *
                    (p.own_quad * theta_tilde[i] * theta_tilde[i] +
                     p.other_quad * theta_tilde[j] * theta_tilde[j] +
                     T(2) * p.cross * theta_tilde[i] * theta_tilde[j]);
  }
  return (direct - expansion).cwiseAbs().maxCoeff();
}

}  // namespace nes
