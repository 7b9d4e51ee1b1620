#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "nitreg/harness.hpp"

namespace nitreg {

namespace {

GridFnd random_fn(const SpacePtrd& sp, std::mt19937_64& rng, Variance v = Variance::Primal) {
  std::normal_distribution<double> g;
  Eigen::VectorXd x(sp->node_count());
  for (int k = 0; k < x.size(); ++k) x(k) = g(rng);
  return GridFnd(sp, std::move(x), v);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

CheckResult check(std::string name, double worst, double tol) {
  return {std::move(name), worst <= tol, "worst " + sci(worst) + " (tol " + sci(tol) + ")"};
}

}  // namespace

std::vector<CheckResult> run_checks() {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(11);

  {
    double worst = 0.0;
    for (double p : {1.5, 2.0, 3.0}) {
      auto sp = GridSpaced::interval(64, p);
      for (double r : {1.5, 2.0, 3.0}) {
        for (int t = 0; t < 10; ++t) {
          GridFnd f = random_fn(sp, rng), x1 = random_fn(sp, rng), x2 = random_fn(sp, rng), x = random_fn(sp, rng);
          double nf = norm(f);
          auto j = duality_map(f, r);
          worst = std::max(worst, std::abs(norm(j) - std::pow(nf, r - 1)) / (1 + std::pow(nf, r - 1)));
          worst = std::max(worst, std::abs(pairing(j, f) - std::pow(nf, r)) / (1 + std::pow(nf, r)));
          double lhs = bregman_norm(x2, x, r) - bregman_norm(x1, x, r);
          double rhs = bregman_norm(x2, x1, r) + pairing(duality_map(x1, r) - duality_map(x, r), x2 - x1);
          double scale = 1 + std::abs(bregman_norm(x2, x, r)) + std::abs(bregman_norm(x1, x, r));
          worst = std::max(worst, std::abs(lhs - rhs) / scale);
        }
      }
    }
    out.push_back(check("duality map and three-point identities", worst, 1e-10));
  }

  {
    double worst = 0.0;
    auto sp1 = GridSpaced::interval(50);
    auto sp2 = GridSpaced::unit_square(8, 8);
    for (const auto& theta : {Penaltyd::quadratic(0.7), Penaltyd::l2_l1(0.01, 1.0, 1e-2),
                              Penaltyd::l2_tv(0.01, 1.0, 1e-2)}) {
      for (const auto& sp : {sp1, sp2}) {
        GridFnd x = random_fn(sp, rng), h = random_fn(sp, rng);
        const double t = 1e-6;
        double fd = (value(theta, x + t * h) - value(theta, x - t * h)) / (2 * t);
        double an = pairing(gradient(theta, x), h);
        worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
      }
    }
    out.push_back(check("penalty gradient vs central differences", worst, 1e-6));
  }

  {
    double worst = 0.0;
    IntegralOp integral(100);
    auto c0 = GridFnd::constant(GridSpaced::unit_square(10, 10), 0.3);
    auto elliptic = EllipticOp::with_linear_state(c0);
    for (const ForwardOp* op : {static_cast<const ForwardOp*>(&integral), static_cast<const ForwardOp*>(elliptic.get())}) {
      GridFnd x = op->is_linear() ? random_fn(op->domain_space(), rng) : c0;
      for (int t = 0; t < 5; ++t) {
        GridFnd h = random_fn(op->domain_space(), rng), w = random_fn(op->range_space(), rng);
        double a = pairing(w, op->deriv(x, h)), b = pairing(op->adjoint(x, w), h);
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, norm(op->deriv(x, h)) * norm(w)));
      }
    }
    out.push_back(check("adjoint consistency", worst, 1e-8));
  }

  {
    IntegralOp op(60);
    auto sp = op.domain_space();
    GridFnd y = op.apply(random_fn(sp, rng));
    GridFnd xp = random_fn(sp, rng);
    const double mu = 0.5, alpha = 0.1;
    auto theta = Penaltyd::quadratic(mu);
    InnerProblem prob(op, y, theta, alpha, xp, gradient(theta, xp));
    auto direct = minimize_linear_quadratic(prob, xp);
    InnerSettings s;
    s.grad_tol_rel = 1e-12;
    s.max_iters = 5000;
    auto cg = minimize(prob, s, xp);
    out.push_back(check("nonlinear CG vs linear normal equations", norm(cg.x - direct.x) / norm(direct.x), 1e-6));
  }

  {
    IntegralOp op(100);
    GridFnd y = op.apply(spikes_1d(op.domain_space()));
    GridFnd yd = add_noise(y, 1e-3, 3);
    out.push_back(check("noise level exactness", std::abs(norm(yd - y) / 1e-3 - 1.0), 1e-12));
  }

  {
    IntegralOp op(100);
    GridFnd y = op.apply(spikes_1d(op.domain_space()));
    const double delta = 1e-3;
    GridFnd yd = add_noise(y, delta, 5);
    StoppingRule stop{StopKind::Discrepancy, 1.1, 100, 1e-10};
    RunOptions opts;
    auto rep = run(op, Penaltyd::quadratic(1.0), yd, delta, AlphaSchedule::geometric(0.5, 0.5), stop, opts,
                   GridFnd::zeros(op.domain_space()));
    bool ok = rep.terminated_by == Termination::Discrepancy && rep.final_state().residual <= stop.tau * delta;
    out.push_back({"discrepancy principle terminates", ok,
                   "n_delta " + std::to_string(rep.n_delta) + ", residual " + sci(rep.final_state().residual)});
  }
  return out;
}

}  // namespace nitreg
