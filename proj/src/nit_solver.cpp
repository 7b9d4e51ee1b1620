#include "nitreg/nit_solver.hpp"

#include <cmath>

namespace nitreg {

const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Geometric: return "geometric";
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::Harmonic: return "harmonic";
  }
  return "?";
}

const char* to_string(StopKind k) { return k == StopKind::Discrepancy ? "discrepancy" : "rule41"; }

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Discrepancy: return "discrepancy";
    case Termination::Rule41: return "rule41";
    case Termination::MaxOuter: return "max_outer";
  }
  return "?";
}

void AlphaSchedule::validate() const {
  if (!(alpha1 > 0.0) || !std::isfinite(alpha1)) throw ParameterError("schedule: alpha1 must be positive");
  if (kind == ScheduleKind::Geometric && !(ratio > 0.0 && ratio <= 1.0))
    throw ParameterError("schedule: geometric ratio q must lie in (0, 1]");
}

double AlphaSchedule::alpha(int n) const {
  if (n < 1) throw ParameterError("schedule: alpha_n is defined for n >= 1");
  switch (kind) {
    case ScheduleKind::Geometric: return alpha1 * std::pow(ratio, n - 1);
    case ScheduleKind::Constant: return alpha1;
    case ScheduleKind::Harmonic: return alpha1 / n;
  }
  return alpha1;
}

double AlphaSchedule::ratio_constant() const {
  switch (kind) {
    case ScheduleKind::Geometric: return 1.0 / ratio;
    case ScheduleKind::Constant: return 1.0;
    case ScheduleKind::Harmonic: return 2.0;  // (n + 1) / n at n = 1
  }
  return 1.0;
}

void StoppingRule::validate() const {
  if (!(tau > 1.0)) throw ParameterError("stopping rule: tau must exceed 1");
  if (max_outer < 0) throw ParameterError("stopping rule: max_outer must be nonnegative");
  if (!(atol_zero >= 0.0)) throw ParameterError("stopping rule: atol_zero must be nonnegative");
}

namespace {

void fill_diagnostics(NitState& s, const ForwardOp& op, const Penaltyd& theta, const GridFnd& ydelta,
                      const RunOptions& options) {
  s.residual = norm(op.apply(s.x) - ydelta);
  s.theta_value = value(theta, s.x);
  s.dual_gap = norm(s.xi - gradient(theta, s.x));
  if (options.x_ref) s.bregman_to_ref = bregman(theta, *options.x_ref, s.x, s.xi);
  if (!s.x.is_finite() || !s.xi.is_finite()) throw InvalidValueError("outer step " + std::to_string(s.n) + ": non-finite iterate");
}

bool linear_quadratic(const ForwardOp& op, const Penaltyd& theta, double r) {
  return op.is_linear() && theta.kind == PenaltyKind::Quadratic && r == 2.0 && op.domain_space()->exponent() == 2.0 &&
         op.range_space()->exponent() == 2.0;
}

}  // namespace

NitState initial_state(const ForwardOp& op, const Penaltyd& theta, const GridFnd& ydelta, GridFnd x0, GridFnd xi0,
                       const RunOptions& options) {
  if (!xi0.is_dual()) throw ParameterError("initial state: xi0 must be a dual element");
  NitState s;
  s.n = 0;
  s.x = std::move(x0);
  s.xi = std::move(xi0);
  fill_diagnostics(s, op, theta, ydelta, options);
  return s;
}

NitState step(const ForwardOp& op, const Penaltyd& theta, const GridFnd& ydelta, double alpha, const NitState& prev,
              const RunOptions& options) {
  InnerProblem problem(op, ydelta, theta, alpha, prev.x, prev.xi, options.r);
  InnerResult inner = options.exact_linear_inner && linear_quadratic(op, theta, options.r)
                          ? minimize_linear_quadratic(problem, prev.x)
                          : minimize(problem, options.inner, prev.x);

  NitState s;
  s.n = prev.n + 1;
  s.alpha = alpha;
  s.x = std::move(inner.x);
  // Dual update from the optimality condition, never from re-differentiating Theta.
  GridFnd jres = duality_map(op.apply(s.x) - ydelta, options.r);
  s.xi = axpy(-1.0 / alpha, op.adjoint(s.x, jres), prev.xi);
  s.inner = std::move(inner.stats);
  fill_diagnostics(s, op, theta, ydelta, options);
  return s;
}

RunReport run(const ForwardOp& op, const Penaltyd& theta, const GridFnd& ydelta, double delta,
              const AlphaSchedule& schedule, const StoppingRule& stop, const RunOptions& options, GridFnd x0,
              std::optional<GridFnd> xi0) {
  if (!(delta >= 0.0)) throw ParameterError("run: delta must be nonnegative");
  schedule.validate();
  stop.validate();
  theta.validate();

  RunReport report;
  GridFnd xi_start = xi0 ? std::move(*xi0) : gradient(theta, x0);
  report.states.push_back(initial_state(op, theta, ydelta, std::move(x0), std::move(xi_start), options));
  report.tau_delta = stop.tau * delta;
  const double threshold = delta > 0.0 ? report.tau_delta : stop.atol_zero;

  std::optional<int> chosen;
  Termination how = Termination::MaxOuter;
  if (report.states[0].residual <= threshold) {
    chosen = 0;
    how = stop.kind == StopKind::Discrepancy ? Termination::Discrepancy : Termination::Rule41;
  }

  for (int n = 1; n <= stop.max_outer && (!chosen || options.run_past_stop); ++n) {
    NitState s;
    try {
      s = step(op, theta, ydelta, schedule.alpha(n), report.states.back(), options);
    } catch (const OperatorError& e) {
      throw OperatorError("outer step " + std::to_string(n) + ": " + e.what());
    }
    report.states.push_back(std::move(s));
    if (chosen) continue;
    const double res = report.states.back().residual;
    if (stop.kind == StopKind::Discrepancy && res <= threshold) {
      chosen = n;
      how = Termination::Discrepancy;
    } else if (stop.kind == StopKind::Rule41 && res < threshold) {
      chosen = n - 1;
      how = Termination::Rule41;
    }
  }

  if (!chosen) {
    // Safety cap hit: hand back the iterate with the smallest residual.
    int best = 0;
    for (int n = 1; n < static_cast<int>(report.states.size()); ++n)
      if (report.states[n].residual < report.states[best].residual) best = n;
    chosen = best;
  }
  report.n_delta = *chosen;
  report.terminated_by = how;
  report.x_out = report.states[report.n_delta].x;
  return report;
}

std::vector<double> diagnostics_bregman(const RunReport& report, const Penaltyd& theta, const GridFnd& x_ref) {
  std::vector<double> out;
  out.reserve(report.n_delta + 1);
  for (int n = 0; n <= report.n_delta; ++n) {
    const auto& s = report.states.at(n);
    out.push_back(bregman(theta, x_ref, s.x, s.xi));
  }
  return out;
}

double max_increase(const std::vector<double>& series, std::size_t last) {
  double worst = 0.0;
  for (std::size_t n = 1; n <= last && n < series.size(); ++n) worst = std::max(worst, series[n] - series[n - 1]);
  return worst;
}

double final_step_allowance(double eta, double tau, double delta, double r, double alpha_n_delta) {
  return (1.0 + eta) * std::pow(tau, r - 1.0) * std::pow(delta, r) / alpha_n_delta;
}

}  // namespace nitreg
