#pragma once

// Outer loop of iterated Tikhonov regularization with varying alpha_n:
//
//   x_n  in argmin (1/r) ||F(x) - y_delta||^r + alpha_n D_{xi_{n-1}} Theta(x, x_{n-1})
//   xi_n  = xi_{n-1} - (1/alpha_n) F'(x_n)^* J_r(F(x_n) - y_delta)
//
// stopped by the discrepancy principle or its "last iterate above tau*delta" variant.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nitreg/inner_cg.hpp"

namespace nitreg {

enum class ScheduleKind { Geometric, Constant, Harmonic };

/// Regularization parameters alpha_n, n >= 1. Every kind has sum 1/alpha_n = inf.
struct AlphaSchedule {
  ScheduleKind kind = ScheduleKind::Geometric;
  double alpha1 = 0.5;
  double ratio = 0.5;  // geometric only, in (0, 1]

  static AlphaSchedule geometric(double alpha1, double ratio) { return make({ScheduleKind::Geometric, alpha1, ratio}); }
  static AlphaSchedule constant(double alpha) { return make({ScheduleKind::Constant, alpha, 1.0}); }
  static AlphaSchedule harmonic(double alpha1) { return make({ScheduleKind::Harmonic, alpha1, 1.0}); }
  static AlphaSchedule make(AlphaSchedule s) {
    s.validate();
    return s;
  }

  void validate() const;
  double alpha(int n) const;
  /// Smallest c0 with alpha_n <= c0 alpha_{n+1} for all n >= 1.
  double ratio_constant() const;
};

enum class StopKind { Discrepancy, Rule41 };

struct StoppingRule {
  StopKind kind = StopKind::Discrepancy;
  double tau = 1.02;
  int max_outer = 200;
  double atol_zero = 1e-10;  // residual target when delta = 0

  void validate() const;
};

enum class Termination { Discrepancy, Rule41, MaxOuter };

const char* to_string(ScheduleKind k);
const char* to_string(StopKind k);
const char* to_string(Termination t);

struct NitState {
  int n = 0;
  GridFnd x;
  GridFnd xi;
  double residual = 0.0;
  double alpha = 0.0;  // 0 for the initial state
  double theta_value = 0.0;
  /// ||xi_n - grad Theta(x_n)||_*, the inner-solve optimality gap seen from the dual side.
  double dual_gap = 0.0;
  std::optional<double> bregman_to_ref;
  InnerStats inner;
};

struct RunReport {
  std::vector<NitState> states;
  int n_delta = 0;
  Termination terminated_by = Termination::MaxOuter;
  GridFnd x_out;
  double tau_delta = 0.0;
  std::vector<std::pair<std::string, std::string>> config;

  const NitState& final_state() const { return states.at(n_delta); }
};

struct RunOptions {
  double r = 2.0;
  InnerSettings inner;
  /// Route each inner problem through minimize_linear_quadratic when it applies.
  bool exact_linear_inner = false;
  /// Reference solution for D_{xi_n} Theta(x_ref, x_n) diagnostics.
  std::optional<GridFnd> x_ref;
  /// Keep iterating past the stopping index until max_outer (the report still
  /// records the index the rule selected).
  bool run_past_stop = false;
};

/// One outer step from `prev` with parameter alpha.
NitState step(const ForwardOp& op, const Penaltyd& theta, const GridFnd& ydelta, double alpha, const NitState& prev,
              const RunOptions& options);

/// Initial state n = 0 with the given (x0, xi0).
NitState initial_state(const ForwardOp& op, const Penaltyd& theta, const GridFnd& ydelta, GridFnd x0, GridFnd xi0,
                       const RunOptions& options);

RunReport run(const ForwardOp& op, const Penaltyd& theta, const GridFnd& ydelta, double delta,
              const AlphaSchedule& schedule, const StoppingRule& stop, const RunOptions& options, GridFnd x0,
              std::optional<GridFnd> xi0 = std::nullopt);

/// D_{xi_n} Theta(x_ref, x_n), n = 0..n_delta.
std::vector<double> diagnostics_bregman(const RunReport& report, const Penaltyd& theta, const GridFnd& x_ref);

/// Largest increase series[n] - series[n-1] over 1 <= n <= last (0 if non-increasing).
double max_increase(const std::vector<double>& series, std::size_t last);

/// Right-hand side of the final-step estimate
///   D(n_delta) <= D(n_delta - 1) + (1 + eta) tau^(r-1) delta^r / alpha_{n_delta}.
double final_step_allowance(double eta, double tau, double delta, double r, double alpha_n_delta);

}  // namespace nitreg
