#include "nitreg/inner_cg.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/SparseCholesky>

namespace nitreg {

void InnerSettings::validate() const {
  if (!(grad_tol_rel >= 0.0)) throw ParameterError("inner: grad_tol_rel must be nonnegative");
  if (max_iters < 0) throw ParameterError("inner: max_iters must be nonnegative");
  if (restart_period < 0) throw ParameterError("inner: restart_period must be nonnegative");
  if (!(armijo > 0.0 && armijo < 0.5)) throw ParameterError("inner: Armijo constant must lie in (0, 1/2)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ParameterError("inner: backtrack factor must lie in (0, 1)");
  if (max_backtracks < 1) throw ParameterError("inner: max_backtracks must be positive");
  if (precondition_refresh < 1) throw ParameterError("inner: precondition_refresh must be positive");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Objective value that maps evaluation failures (x outside the operator's domain)
// to +inf, which the line search treats as "step too long".
double safe_value(const Objective& phi, const GridFnd& x, InnerStats& stats) {
  ++stats.evaluations;
  try {
    double v = phi.value(x);
    return std::isfinite(v) ? v : kInf;
  } catch (const OperatorError&) {
    return kInf;
  }
}

struct LineSearchResult {
  double step = 0.0;
  double value = kInf;
  bool ok = false;
};

// Armijo backtracking. The first trial is refined once by the minimizer of the
// quadratic through phi(0), phi'(0) and phi(t0), which makes the search exact on
// quadratic objectives; if neither point satisfies the Armijo condition the step
// is halved (by `backtrack`) until it does.
LineSearchResult line_search(const Objective& phi, const InnerSettings& s, const GridFnd& x, const GridFnd& d,
                             double f0, double slope, double t0, InnerStats& stats) {
  auto armijo_ok = [&](double t, double ft) { return std::isfinite(ft) && ft <= f0 + s.armijo * t * slope; };
  LineSearchResult best;
  auto consider = [&](double t, double ft) {
    if (armijo_ok(t, ft) && ft < best.value) best = {t, ft, true};
  };

  double t = t0;
  double ft = safe_value(phi, axpy(t, d, x), stats);
  consider(t, ft);
  if (std::isfinite(ft)) {
    double curv = ft - f0 - slope * t;
    if (curv > 0.0) {
      double tq = -slope * t * t / (2.0 * curv);
      if (std::isfinite(tq) && tq > 0.0 && tq != t) {
        double fq = safe_value(phi, axpy(tq, d, x), stats);
        consider(tq, fq);
        if (!best.ok && tq < t) t = tq;
      }
    }
  }
  for (int b = 0; !best.ok && b < s.max_backtracks; ++b) {
    t *= s.backtrack;
    ++stats.backtracks;
    consider(t, safe_value(phi, axpy(t, d, x), stats));
  }
  return best;
}

}  // namespace

InnerResult minimize(const Objective& phi, const InnerSettings& settings, const GridFnd& x_start) {
  settings.validate();
  InnerResult out;
  InnerStats& st = out.stats;

  GridFnd x = x_start;
  double f = phi.value(x);
  ++st.evaluations;
  GridFnd g = phi.gradient(x);
  double gg = dot(g, g);
  st.value_start = f;
  st.grad_norm_start = std::sqrt(gg);
  const double tol = settings.grad_tol_rel * std::max(1.0, st.grad_norm_start);
  const int restart = settings.restart_period > 0 ? settings.restart_period : x.size();
  if (settings.record_trace) {
    st.trace.push_back(f);
    st.iterates.push_back(x);
  }
  if (std::sqrt(gg) <= tol) {
    st.converged = true;
    st.grad_norm_final = std::sqrt(gg);
    st.value_final = f;
    out.x = std::move(x);
    out.value = f;
    return out;
  }

  Preconditioner metric = settings.precondition ? phi.preconditioner(x) : Preconditioner{};
  const bool preconditioned = static_cast<bool>(metric);
  auto precondition = [&](const GridFnd& grad) { return metric ? metric(grad) : grad.retagged(Variance::Primal); };

  GridFnd z = precondition(g);
  double gz = dot(g, z);
  GridFnd d = -z;
  double prev_step = 0.0, prev_slope = 0.0;
  int since_restart = 0, since_refresh = 0;

  while (std::sqrt(gg) > tol) {
    if (st.iterations >= settings.max_iters) {
      st.max_iters_reached = true;
      break;
    }
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      // Only reachable through rounding; fall back to the (preconditioned) gradient.
      d = -z;
      slope = -gz;
      since_restart = 0;
      ++st.restarts;
    }
    st.worst_descent = std::max(st.worst_descent, slope / gz);

    double t0;
    if (st.iterations == 0 || since_restart == 0) {
      t0 = preconditioned ? 1.0 : 1.0 / std::sqrt(dot(d, d));
    } else {
      t0 = prev_step * prev_slope / slope;
    }
    auto ls = line_search(phi, settings, x, d, f, slope, t0, st);
    if (!ls.ok) {
      st.line_search_failed = true;
      break;
    }
    x = axpy(ls.step, d, x);
    f = ls.value;
    GridFnd g_new = phi.gradient(x);
    double gg_new = dot(g_new, g_new);
    ++st.iterations;
    ++since_restart;
    ++since_refresh;
    if (settings.record_trace) {
      st.trace.push_back(f);
      st.iterates.push_back(x);
    }

    prev_step = ls.step;
    prev_slope = slope;
    bool refresh = preconditioned && since_refresh >= settings.precondition_refresh;
    if (refresh) {
      metric = phi.preconditioner(x);
      since_refresh = 0;
    }
    GridFnd z_new = precondition(g_new);
    double gz_new = dot(g_new, z_new);
    if (refresh || since_restart >= restart) {
      d = -z_new;
      since_restart = 0;
      ++st.restarts;
    } else {
      // d_new = -(1 + beta <g_new, d> / <g_new, z_new>) z_new + beta d,  beta = FR
      double beta = gz_new / gz;
      double theta = gz_new > 0.0 ? beta * dot(g_new, d) / gz_new : 0.0;
      d = lincomb({-(1.0 + theta), beta}, {z_new, d});
    }
    g = std::move(g_new);
    gg = gg_new;
    z = std::move(z_new);
    gz = gz_new;
  }

  st.grad_norm_final = std::sqrt(gg);
  st.converged = st.grad_norm_final <= tol;
  st.value_final = f;
  out.x = std::move(x);
  out.value = f;
  return out;
}

// ---------------------------------------------------------------------------

InnerProblem::InnerProblem(const ForwardOp& op, GridFnd ydelta, Penaltyd theta, double alpha, GridFnd x_prev,
                           GridFnd xi_prev, double r)
    : op_(op),
      ydelta_(std::move(ydelta)),
      theta_(theta),
      alpha_(alpha),
      x_prev_(std::move(x_prev)),
      xi_prev_(std::move(xi_prev)),
      r_(r) {
  theta_.validate();
  if (!(alpha_ > 0.0)) throw ParameterError("inner problem: alpha must be positive");
  if (!(r_ > 1.0)) throw ParameterError("inner problem: r must exceed 1");
  if (!(*ydelta_.space() == *op_.range_space())) throw DimensionError("inner problem: data not in the range space");
  if (!(*x_prev_.space() == *op_.domain_space()) || !(*xi_prev_.space() == *op_.domain_space()))
    throw DimensionError("inner problem: previous iterate not in the domain space");
  if (!xi_prev_.is_dual()) throw ParameterError("inner problem: xi_prev must be a dual element");
  theta_prev_ = nitreg::value(theta_, x_prev_);
}

double InnerProblem::data_term(const GridFnd& x) const {
  return std::pow(norm(op_.apply(x) - ydelta_), r_) / r_;
}

double InnerProblem::bregman_term(const GridFnd& x) const {
  return nitreg::value(theta_, x) - theta_prev_ - pairing(xi_prev_, x - x_prev_);
}

double InnerProblem::value(const GridFnd& x) const { return data_term(x) + alpha_ * bregman_term(x); }

double InnerProblem::data_curvature() const {
  if (sigma_) return *sigma_;
  // Power iteration on F'(x_prev)^* F'(x_prev) in the weighted inner product.
  GridFnd v = GridFnd::constant(op_.domain_space(), 1.0);
  v = scale(1.0 / norm(v), v);
  double lambda = 0.0;
  for (int it = 0; it < 12; ++it) {
    GridFnd av = op_.adjoint(x_prev_, op_.deriv(x_prev_, v)).retagged(Variance::Primal);
    lambda = dot(v, av);
    double n = norm(av);
    if (!(n > 0.0)) break;
    v = scale(1.0 / n, av);
  }
  double res = norm(op_.apply(x_prev_) - ydelta_);
  double s = r_ == 2.0 ? lambda : lambda * std::pow(std::max(res, 1e-300), r_ - 2.0);
  sigma_ = std::max(s, 0.0);
  return *sigma_;
}

Preconditioner InnerProblem::preconditioner(const GridFnd& x) const {
  const auto& w = op_.domain_space()->weights();
  Eigen::SparseMatrix<double> m = alpha_ * lagged_hessian(theta_, x);
  const double sigma = data_curvature();
  for (int k = 0; k < m.rows(); ++k) m.coeffRef(k, k) += sigma * w(k);
  auto solver = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(m);
  if (solver->info() != Eigen::Success) return {};
  auto space = op_.domain_space();
  return [solver, space](const GridFnd& g) {
    Eigen::VectorXd rhs = space->weights().cwiseProduct(g.values());
    return GridFnd(space, solver->solve(rhs), Variance::Primal);
  };
}

GridFnd InnerProblem::gradient(const GridFnd& x) const {
  GridFnd res = op_.apply(x) - ydelta_;
  GridFnd g = op_.adjoint(x, duality_map(res, r_));
  return lincomb({1.0, alpha_, -alpha_}, {g, nitreg::gradient(theta_, x), xi_prev_});
}

// ---------------------------------------------------------------------------

InnerResult minimize_linear_quadratic(const InnerProblem& problem, const GridFnd& x_start, double rel_tol,
                                      int max_iters) {
  const auto& op = problem.op();
  const auto& th = problem.theta();
  if (!op.is_linear() || th.kind != PenaltyKind::Quadratic || problem.r() != 2.0 ||
      op.domain_space()->exponent() != 2.0 || op.range_space()->exponent() != 2.0)
    throw ParameterError("minimize_linear_quadratic: needs linear F, r = p = 2 and a quadratic penalty");

  const double shift = 2.0 * th.mu * problem.alpha();
  auto normal = [&](const GridFnd& v) {
    return axpy(shift, v, op.adjoint(x_start, op.apply(v).retagged(Variance::Primal)).retagged(Variance::Primal));
  };
  GridFnd rhs = axpy(problem.alpha(), problem.xi_prev(), op.adjoint(x_start, problem.ydelta()))
                    .retagged(Variance::Primal);

  InnerResult out;
  InnerStats& st = out.stats;
  GridFnd x = x_start;
  GridFnd res = rhs - normal(x);
  GridFnd p = res;
  double rr = dot(res, res);
  const double stop = rel_tol * std::sqrt(dot(rhs, rhs));
  const int cap = max_iters > 0 ? max_iters : 4 * x.size();
  st.value_start = problem.value(x_start);
  st.grad_norm_start = std::sqrt(rr);
  while (std::sqrt(rr) > stop && st.iterations < cap) {
    GridFnd ap = normal(p);
    double step = rr / dot(p, ap);
    x = axpy(step, p, x);
    res = axpy(-step, ap, res);
    double rr_new = dot(res, res);
    p = axpy(rr_new / rr, p, res);
    rr = rr_new;
    ++st.iterations;
  }
  st.max_iters_reached = std::sqrt(rr) > stop;
  st.converged = !st.max_iters_reached;
  st.grad_norm_final = std::sqrt(rr);
  out.value = problem.value(x);
  st.value_final = out.value;
  out.x = std::move(x);
  return out;
}

}  // namespace nitreg
