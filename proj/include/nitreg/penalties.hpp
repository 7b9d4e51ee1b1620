#pragma once

// Uniformly convex penalties
//
//   Theta(x) = mu * int |x|^2 + a * int sqrt(x^2 + eps) + b * int sqrt(|Dx|^2 + eps)
//
// The square-root terms are the smoothed surrogates of the L1 norm and of total
// variation. D is the forward difference on grid cells (no boundary cells, which
// is the replicate/Neumann closure); in 2-D the integrand is isotropic.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "nitreg/spaces.hpp"

namespace nitreg {

enum class PenaltyKind { Quadratic, L2L1, L2TV };

inline const char* to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::Quadratic: return "quadratic";
    case PenaltyKind::L2L1: return "l2_l1";
    case PenaltyKind::L2TV: return "l2_tv";
  }
  return "?";
}

template <typename Scalar>
struct Penalty {
  PenaltyKind kind = PenaltyKind::Quadratic;
  Scalar mu = Scalar(1);
  Scalar a = Scalar(0);
  Scalar b = Scalar(0);
  Scalar eps = Scalar(1e-6);

  static Penalty quadratic(Scalar mu) { return make(PenaltyKind::Quadratic, mu, 0, 0, Scalar(1e-6)); }
  static Penalty l2_l1(Scalar mu, Scalar a, Scalar eps = Scalar(1e-6)) {
    return make(PenaltyKind::L2L1, mu, a, 0, eps);
  }
  static Penalty l2_tv(Scalar mu, Scalar b, Scalar eps = Scalar(1e-6)) {
    return make(PenaltyKind::L2TV, mu, 0, b, eps);
  }

  static Penalty make(PenaltyKind kind, Scalar mu, Scalar a, Scalar b, Scalar eps) {
    Penalty t{kind, mu, a, b, eps};
    t.validate();
    return t;
  }

  void validate() const {
    if (!(mu > Scalar(0))) throw ParameterError("penalty: mu must be positive");
    if (a < Scalar(0) || b < Scalar(0)) throw ParameterError("penalty: a and b must be nonnegative");
    if ((a > Scalar(0) || b > Scalar(0)) && !(eps > Scalar(0)))
      throw ParameterError("penalty: smoothing eps must be positive for non-smooth terms");
    if (kind == PenaltyKind::Quadratic && (a != Scalar(0) || b != Scalar(0)))
      throw ParameterError("penalty: quadratic kind takes a = b = 0");
    if (kind == PenaltyKind::L2L1 && b != Scalar(0)) throw ParameterError("penalty: l2_l1 kind takes b = 0");
    if (kind == PenaltyKind::L2TV && a != Scalar(0)) throw ParameterError("penalty: l2_tv kind takes a = 0");
  }
};

using Penaltyd = Penalty<double>;

namespace detail {

// Calls visit(cell_weight, from_node, to_node, spacing) for every forward difference
// in 1-D, and visit2(cell_weight, node, east, north, hx, hy) for every 2-D cell.
template <typename Scalar, typename Visit1, typename Visit2>
void for_each_cell(const GridSpace<Scalar>& sp, Visit1&& visit1, Visit2&& visit2) {
  if (sp.dimension() == 1) {
    const Scalar h = sp.spacing(0);
    for (int i = 0; i + 1 < sp.dims()[0]; ++i) visit1(h, i, i + 1, h);
  } else {
    const Scalar hx = sp.spacing(0), hy = sp.spacing(1);
    for (int j = 0; j + 1 < sp.dims()[1]; ++j)
      for (int i = 0; i + 1 < sp.dims()[0]; ++i)
        visit2(hx * hy, sp.index(i, j), sp.index(i + 1, j), sp.index(i, j + 1), hx, hy);
  }
}

template <typename Scalar>
Scalar smoothed_tv(const GridFn<Scalar>& x, Scalar eps) {
  const auto& v = x.values();
  Scalar acc(0);
  for_each_cell(
      *x.space(),
      [&](Scalar w, int i, int k, Scalar h) {
        Scalar d = (v(k) - v(i)) / h;
        acc += w * std::sqrt(d * d + eps);
      },
      [&](Scalar w, int i, int e, int n, Scalar hx, Scalar hy) {
        Scalar dx = (v(e) - v(i)) / hx, dy = (v(n) - v(i)) / hy;
        acc += w * std::sqrt(dx * dx + dy * dy + eps);
      });
  return acc;
}

/// Euclidean (unweighted) gradient of smoothed_tv with respect to the node values.
template <typename Scalar>
typename GridFn<Scalar>::Vector smoothed_tv_euclidean_grad(const GridFn<Scalar>& x, Scalar eps) {
  const auto& v = x.values();
  typename GridFn<Scalar>::Vector g = GridFn<Scalar>::Vector::Zero(v.size());
  for_each_cell(
      *x.space(),
      [&](Scalar w, int i, int k, Scalar h) {
        Scalar d = (v(k) - v(i)) / h;
        Scalar c = w * d / (std::sqrt(d * d + eps) * h);
        g(k) += c;
        g(i) -= c;
      },
      [&](Scalar w, int i, int e, int n, Scalar hx, Scalar hy) {
        Scalar dx = (v(e) - v(i)) / hx, dy = (v(n) - v(i)) / hy;
        Scalar s = std::sqrt(dx * dx + dy * dy + eps);
        Scalar cx = w * dx / (s * hx), cy = w * dy / (s * hy);
        g(e) += cx;
        g(n) += cy;
        g(i) -= cx + cy;
      });
  return g;
}

}  // namespace detail

template <typename Scalar>
Scalar value(const Penalty<Scalar>& theta, const GridFn<Scalar>& x) {
  detail::require_finite(x, "penalty value");
  const auto& w = x.space()->weights();
  const auto xs = x.values().array();
  Scalar v = theta.mu * (w.array() * xs.square()).sum();
  if (theta.a > Scalar(0)) v += theta.a * (w.array() * (xs.square() + theta.eps).sqrt()).sum();
  if (theta.b > Scalar(0)) v += theta.b * detail::smoothed_tv(x, theta.eps);
  return v;
}

/// Gradient of the smoothed penalty in the dual representation, so that
/// pairing(gradient(theta, x), h) is the directional derivative of value() along h.
template <typename Scalar>
GridFn<Scalar> gradient(const Penalty<Scalar>& theta, const GridFn<Scalar>& x) {
  detail::require_finite(x, "penalty gradient");
  typename GridFn<Scalar>::Vector g = Scalar(2) * theta.mu * x.values();
  if (theta.a > Scalar(0))
    g.array() += theta.a * x.values().array() / (x.values().array().square() + theta.eps).sqrt();
  if (theta.b > Scalar(0))
    g.array() += theta.b * detail::smoothed_tv_euclidean_grad(x, theta.eps).array() /
                 x.space()->weights().array();
  return GridFn<Scalar>(x.space(), std::move(g), Variance::Dual);
}

/// Symmetric positive definite majorant of the second variation of value() at x,
/// as a matrix H with h^T H h >= d^2/dt^2 Theta(x + t h) at t = 0 (node-value
/// coordinates, quadrature weights included). The TV part uses lagged diffusivity
/// D^T diag(w / s) D, which drops the negative rank-one correction of the exact Hessian.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> lagged_hessian(const Penalty<Scalar>& theta, const GridFn<Scalar>& x) {
  const auto& sp = *x.space();
  const auto& w = sp.weights();
  const auto& v = x.values();
  const int n = sp.node_count();
  std::vector<Eigen::Triplet<Scalar>> t;
  t.reserve(theta.b > Scalar(0) ? 9 * n : n);
  for (int k = 0; k < n; ++k) {
    Scalar d = Scalar(2) * theta.mu;
    if (theta.a > Scalar(0)) d += theta.a * theta.eps / std::pow(v(k) * v(k) + theta.eps, Scalar(1.5));
    t.emplace_back(k, k, w(k) * d);
  }
  if (theta.b > Scalar(0)) {
    // Adds c * (e_i - e_k)(e_i - e_k)^T for one difference with coefficient c.
    auto edge = [&](int i, int k, Scalar c) {
      t.emplace_back(i, i, c);
      t.emplace_back(k, k, c);
      t.emplace_back(i, k, -c);
      t.emplace_back(k, i, -c);
    };
    detail::for_each_cell(
        sp,
        [&](Scalar wc, int i, int k, Scalar h) {
          Scalar d = (v(k) - v(i)) / h;
          edge(i, k, theta.b * wc / (std::sqrt(d * d + theta.eps) * h * h));
        },
        [&](Scalar wc, int i, int e, int nn, Scalar hx, Scalar hy) {
          Scalar dx = (v(e) - v(i)) / hx, dy = (v(nn) - v(i)) / hy;
          Scalar c = theta.b * wc / std::sqrt(dx * dx + dy * dy + theta.eps);
          edge(i, e, c / (hx * hx));
          edge(i, nn, c / (hy * hy));
        });
  }
  Eigen::SparseMatrix<Scalar> h(n, n);
  h.setFromTriplets(t.begin(), t.end());
  return h;
}

/// D_xi Theta(xbar, x) = Theta(xbar) - Theta(x) - <xi, xbar - x>.
template <typename Scalar>
Scalar bregman(const Penalty<Scalar>& theta, const GridFn<Scalar>& xbar, const GridFn<Scalar>& x,
               const GridFn<Scalar>& xi) {
  detail::require_same_space(xbar, x, "bregman");
  detail::require_same_space(xi, x, "bregman");
  return value(theta, xbar) - value(theta, x) - pairing(xi, xbar - x);
}

/// Residual of the three-point identity
///   D_xi(x2, x) - D_xi(x1, x) = D_xi1(x2, x1) + <xi1 - xi, x2 - x1>.
template <typename Scalar>
Scalar three_point(const Penalty<Scalar>& theta, const GridFn<Scalar>& x2, const GridFn<Scalar>& x1,
                   const GridFn<Scalar>& x, const GridFn<Scalar>& xi1, const GridFn<Scalar>& xi) {
  Scalar lhs = bregman(theta, x2, x, xi) - bregman(theta, x1, x, xi);
  Scalar rhs = bregman(theta, x2, x1, xi1) + pairing(xi1 - xi, x2 - x1);
  return std::abs(lhs - rhs);
}

}  // namespace nitreg
