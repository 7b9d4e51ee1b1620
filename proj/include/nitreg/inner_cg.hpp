#pragma once

// Inner minimization of the Tikhonov functional
//
//   Phi(x) = (1/r) ||F(x) - y_delta||^r + alpha * D_{xi_prev} Theta(x, x_prev)
//
// by a Fletcher-Reeves nonlinear conjugate-gradient method in the sufficient-descent
// form of Zhang, Zhou and Li: every direction satisfies <g, d> = -<g, M^{-1} g> for
// the current metric M, so an Armijo backtracking line search is enough for global
// convergence. M is the weighted l2 metric unless the objective supplies a curvature
// model.

#include <functional>
#include <optional>
#include <vector>

#include "nitreg/operators.hpp"
#include "nitreg/penalties.hpp"

namespace nitreg {

/// Applies M^{-1} to a dual element, M a symmetric positive definite metric; the
/// result is a primal element.
using Preconditioner = std::function<GridFnd(const GridFnd&)>;

/// Smooth objective on a grid space; gradients come back as dual elements.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual const SpacePtrd& space() const = 0;
  virtual double value(const GridFnd& x) const = 0;
  virtual GridFnd gradient(const GridFnd& x) const = 0;
  /// Optional curvature model around x. An empty function means the weighted l2 metric.
  virtual Preconditioner preconditioner(const GridFnd& /*x*/) const { return {}; }
};

struct InnerSettings {
  double grad_tol_rel = 1e-8;
  int max_iters = 2000;
  int restart_period = 0;  // 0: the problem dimension
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;
  /// Run the iteration in the metric supplied by Objective::preconditioner.
  bool precondition = true;
  /// Iterations between rebuilds of the metric (each rebuild restarts the recursion).
  int precondition_refresh = 20;
  bool record_trace = false;

  void validate() const;
};

struct InnerStats {
  int iterations = 0;
  int restarts = 0;
  int backtracks = 0;
  int evaluations = 0;  // objective values, including line-search trials
  double value_start = 0.0;
  double value_final = 0.0;
  double grad_norm_start = 0.0;
  double grad_norm_final = 0.0;
  bool converged = false;
  bool max_iters_reached = false;
  bool line_search_failed = false;
  /// Largest <g_k, d_k> / <g_k, M^{-1} g_k> seen; negative means every direction descended.
  double worst_descent = -1.0;
  /// Phi(x_k), k = 0..iterations, when InnerSettings::record_trace is set.
  std::vector<double> trace;
  std::vector<GridFnd> iterates;

  bool warning() const { return line_search_failed || max_iters_reached; }
};

struct InnerResult {
  GridFnd x;
  double value = 0.0;
  InnerStats stats;
};

InnerResult minimize(const Objective& phi, const InnerSettings& settings, const GridFnd& x_start);

/// Phi_n for one outer step of the iterated Tikhonov method.
class InnerProblem final : public Objective {
 public:
  InnerProblem(const ForwardOp& op, GridFnd ydelta, Penaltyd theta, double alpha, GridFnd x_prev, GridFnd xi_prev,
               double r = 2.0);

  const SpacePtrd& space() const override { return op_.domain_space(); }
  double value(const GridFnd& x) const override;
  GridFnd gradient(const GridFnd& x) const override;
  /// M = alpha * lagged_hessian(Theta, x) + sigma * W, with sigma an estimate of the
  /// largest eigenvalue of F'(x_prev)^* F'(x_prev) scaled by ||F(x_prev) - y||^(r-2).
  Preconditioner preconditioner(const GridFnd& x) const override;
  double data_curvature() const;

  /// (1/r) ||F(x) - y_delta||^r
  double data_term(const GridFnd& x) const;
  /// D_{xi_prev} Theta(x, x_prev)
  double bregman_term(const GridFnd& x) const;

  const ForwardOp& op() const { return op_; }
  const GridFnd& ydelta() const { return ydelta_; }
  const Penaltyd& theta() const { return theta_; }
  double alpha() const { return alpha_; }
  const GridFnd& x_prev() const { return x_prev_; }
  const GridFnd& xi_prev() const { return xi_prev_; }
  double r() const { return r_; }

 private:
  const ForwardOp& op_;
  GridFnd ydelta_;
  Penaltyd theta_;
  double alpha_;
  GridFnd x_prev_;
  GridFnd xi_prev_;
  double r_;
  double theta_prev_;
  mutable std::optional<double> sigma_;
};

/// Exact route for linear F, r = 2, p = 2 and a quadratic penalty: linear CG on
///   (A^*A + 2 mu alpha I) x = A^* y_delta + alpha xi_prev
/// in the weighted inner product. Throws ParameterError for any other problem.
InnerResult minimize_linear_quadratic(const InnerProblem& problem, const GridFnd& x_start,
                                      double rel_tol = 1e-13, int max_iters = 0);

}  // namespace nitreg
