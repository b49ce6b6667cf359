#pragma once

#include <cmath>

#include "nes/types.hpp"

namespace nes {

// One player's quadratic payoff in (own action, other action):
//   J(own, other) = own_quad/2 * own^2 + other_quad/2 * other^2
//                 + cross * own * other + lin_own * own + lin_other * other
//                 + offset
// own_quad < 0 keeps the payoff strictly concave in the player's own action.
template <typename T>
struct PlayerPayoff {
  T own_quad{};
  T other_quad{};
  T cross{};
  T lin_own{};
  T lin_other{};
  T offset{};
};

template <typename T>
struct QuadraticGame {
  PlayerPayoff<T> p1;
  PlayerPayoff<T> p2;
};

// Jacobian of the pseudo-gradient map, row i = d(dJ_i/dtheta_i)/dtheta
template <typename T>
Mat2<T> hessian(const QuadraticGame<T>& g) {
  Mat2<T> h;
  h << g.p1.own_quad, g.p1.cross, g.p2.cross, g.p2.own_quad;
  return h;
}

template <typename T>
Vec2<T> offset_vector(const QuadraticGame<T>& g) {
  return Vec2<T>(g.p1.lin_own, g.p2.lin_own);
}

template <typename T>
void validate(const QuadraticGame<T>& g) {
  if (!(g.p1.own_quad < T(0)) || !(g.p2.own_quad < T(0)))
    throw InvalidParameters("own-action curvature must be negative");
}

template <typename T>
T payoff(const QuadraticGame<T>& g, int player, const Vec2<T>& theta) {
  const PlayerPayoff<T>& p = (player == 0) ? g.p1 : g.p2;
  const T own = theta[player];
  const T other = theta[1 - player];
  return p.own_quad / T(2) * own * own + p.other_quad / T(2) * other * other +
         p.cross * own * other + p.lin_own * own + p.lin_other * other +
         p.offset;
}

// stacked own-action partial derivatives, H theta + h
template <typename T>
Vec2<T> pseudo_gradient(const QuadraticGame<T>& g, const Vec2<T>& theta) {
  return hessian(g) * theta + offset_vector(g);
}

template <typename T>
Vec2<T> nash_equilibrium(const QuadraticGame<T>& g) {
  const Mat2<T> h = hessian(g);
  const T det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
  const T scale = std::max({std::abs(h(0, 0)), std::abs(h(0, 1)),
                            std::abs(h(1, 0)), std::abs(h(1, 1))});
  if (scale == T(0) || std::abs(det) <= T(1e-12) * scale * scale)
    throw SingularHessian("pseudo-gradient Jacobian is singular");
  const Vec2<T> rhs = -offset_vector(g);
  return Vec2<T>((h(1, 1) * rhs[0] - h(0, 1) * rhs[1]) / det,
                 (h(0, 0) * rhs[1] - h(1, 0) * rhs[0]) / det);
}

// Duopoly with linear demand split: firm i sells
//   s_i = S_d/2 - (theta_i - theta_j) / (2 p)
// at margin (theta_i - m_i), yielding a quadratic payoff in the two prices.
template <typename T>
QuadraticGame<T> duopoly_from_market(T total_demand, T price_sensitivity,
                                     T margin1, T margin2) {
  if (!(price_sensitivity > T(0)))
    throw InvalidMarket("price sensitivity must be positive");
  const T q = T(1) / (T(2) * price_sensitivity);  // 1/(2p)
  QuadraticGame<T> g;
  g.p1.own_quad = -T(2) * q;
  g.p1.other_quad = T(0);
  g.p1.cross = q;
  g.p1.lin_own = total_demand / T(2) + margin1 * q;
  g.p1.lin_other = -margin1 * q;
  g.p1.offset = -margin1 * total_demand / T(2);
  g.p2.own_quad = -T(2) * q;
  g.p2.other_quad = T(0);
  g.p2.cross = q;
  g.p2.lin_own = total_demand / T(2) + margin2 * q;
  g.p2.lin_other = -margin2 * q;
  g.p2.offset = -margin2 * total_demand / T(2);
  return g;
}

// 2x2 stability test without eigensolves
template <typename T>
bool hurwitz_check(const Mat2<T>& m) {
  const T tr = m(0, 0) + m(1, 1);
  const T det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return tr < T(0) && det > T(0);
}

}  // namespace nes
