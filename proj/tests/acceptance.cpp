// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "nitreg/harness.hpp"

using namespace nitreg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %2d  %-34s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

GridFnd gaussian(const SpacePtrd& sp, std::mt19937_64& rng, Variance v = Variance::Primal) {
  std::normal_distribution<double> g;
  Eigen::VectorXd x(sp->node_count());
  for (int k = 0; k < x.size(); ++k) x(k) = g(rng);
  return GridFnd(sp, std::move(x), v);
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

// Shared runs, computed once.
struct Runs {
  std::map<std::string, ExperimentResult> res;
  std::map<std::string, double> secs;
  const ExperimentResult& get(const std::string& key, const ExperimentConfig& cfg) {
    auto it = res.find(key);
    if (it != res.end()) return it->second;
    auto t0 = Clock::now();
    auto r = run_experiment(cfg, false);
    secs[key] = seconds_since(t0);
    return res.emplace(key, std::move(r)).first->second;
  }
} runs;

const ExperimentResult& ex51(PenaltyKind k) {
  return runs.get(k == PenaltyKind::Quadratic ? "51q" : "51l1", example51_config(k));
}

const ExperimentResult& ex52(PenaltyKind k, double mu = 0.01) {
  std::string key = k == PenaltyKind::Quadratic ? "52q" : fmt("52tv%g", mu);
  return runs.get(key, example52_config(k, mu));
}

}  // namespace

int main() {
  report(1, "duality and Bregman identities", [] {
    auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (double p : {2.0, 1.5, 3.0}) {
      auto sp = GridSpaced::interval(100, p);
      for (double r : {2.0, 1.5, 3.0}) {
        for (int t = 0; t < 100; ++t) {
          auto f = gaussian(sp, rng), x = gaussian(sp, rng), x1 = gaussian(sp, rng), x2 = gaussian(sp, rng);
          double nf = norm(f);
          auto j = duality_map(f, r);
          worst = std::max(worst, std::abs(norm(j) - std::pow(nf, r - 1)) / (1 + std::pow(nf, r - 1)));
          worst = std::max(worst, std::abs(pairing(j, f) - std::pow(nf, r)) / (1 + std::pow(nf, r)));
          double lhs = bregman_norm(x2, x, r) - bregman_norm(x1, x, r);
          double rhs = bregman_norm(x2, x1, r) + pairing(duality_map(x1, r) - duality_map(x, r), x2 - x1);
          double s = 1 + std::abs(bregman_norm(x2, x, r)) + std::abs(bregman_norm(x1, x, r));
          worst = std::max(worst, std::abs(lhs - rhs) / s);
        }
      }
    }
    double secs = seconds_since(t0);
    return Outcome{worst <= 1e-10 && secs < 5.0, fmt("worst rel %.2e (tol 1e-10), %.2fs (limit 5s)", worst, secs)};
  });

  report(2, "adjoint consistency", [] {
    auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    double worst = 0.0;
    IntegralOp integral(400);
    auto sq = GridSpaced::unit_square(40, 40);
    auto elliptic = EllipticOp::with_linear_state(two_inclusions_2d(sq));
    auto c = GridFnd::sample(sq, [](double x, double y) { return 0.5 + x * (1 - y); });
    for (const ForwardOp* op : {static_cast<const ForwardOp*>(&integral), static_cast<const ForwardOp*>(elliptic.get())}) {
      GridFnd x = op->is_linear() ? gaussian(op->domain_space(), rng) : c;
      for (int t = 0; t < 20; ++t) {
        auto h = gaussian(op->domain_space(), rng), w = gaussian(op->range_space(), rng);
        auto dh = op->deriv(x, h);
        double a = pairing(w.retagged(Variance::Dual), dh), b = pairing(op->adjoint(x, w), h);
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, norm(dh) * norm(w)));
      }
    }
    double secs = seconds_since(t0);
    return Outcome{worst <= 1e-8 && secs < 30.0, fmt("worst scaled %.2e (tol 1e-8), %.2fs (limit 30s)", worst, secs)};
  });

  report(3, "elliptic derivative order", [] {
    std::mt19937_64 rng(303);
    auto sq = GridSpaced::unit_square(40, 40);
    auto c_true = two_inclusions_2d(sq);
    auto op = EllipticOp::with_linear_state(c_true);
    auto u = op->apply(c_true);
    double lowest = INFINITY;
    for (int t = 0; t < 5; ++t) {
      auto h = gaussian(sq, rng);
      auto dh = op->deriv(c_true, h);
      auto rem = [&](double s) { return norm(op->apply(axpy(s, h, c_true)) - u - s * dh); };
      lowest = std::min(lowest, std::log10(rem(1e-2) / rem(1e-3)));
    }
    return Outcome{lowest >= 1.9, fmt("min observed order %.3f (need >= 1.9)", lowest)};
  });

  report(4, "inner solver vs dense solve", [] {
    auto t0 = Clock::now();
    IntegralOp op(200);
    auto sp = op.domain_space();
    std::mt19937_64 rng(404);
    auto y = add_noise(op.apply(spikes_1d(sp)), 1e-3, 404);
    auto xp = gaussian(sp, rng);
    const double mu = 1.0, alpha = 0.01;
    auto th = Penaltyd::quadratic(mu);
    auto xi = gradient(th, xp);
    InnerProblem prob(op, y, th, alpha, xp, xi);
    const Eigen::MatrixXd A = op.kernel_matrix() * sp->weights().asDiagonal();
    const Eigen::MatrixXd At = op.kernel_matrix().transpose() * sp->weights().asDiagonal();
    Eigen::MatrixXd N = At * A + 2 * mu * alpha * Eigen::MatrixXd::Identity(sp->node_count(), sp->node_count());
    GridFnd direct(sp, N.partialPivLu().solve(At * y.values() + alpha * xi.values()));
    InnerSettings s;
    s.grad_tol_rel = 1e-12;
    s.max_iters = 10000;
    auto res = minimize(prob, s, xp);
    double rel = norm(res.x - direct) / norm(direct);
    double secs = seconds_since(t0);
    return Outcome{rel <= 1e-6 && secs < 10.0, fmt("rel diff %.2e (tol 1e-6), %d iterations, %.2fs (limit 10s)", rel,
                                                   res.stats.iterations, secs)};
  });

  report(5, "monotone residual and Bregman", [] {
    double worst_res = 0.0, worst_d = 0.0;
    std::string per;
    for (auto k : {PenaltyKind::Quadratic, PenaltyKind::L2L1}) {
      const auto& r = ex51(k);
      const auto& st = r.report.states;
      std::vector<double> res, d;
      for (const auto& s : st) res.push_back(s.residual);
      d = diagnostics_bregman(r.report, example51_config(k).penalty, r.x_dagger);
      worst_res = std::max(worst_res, max_increase(res, r.report.n_delta));
      worst_d = std::max(worst_d, max_increase(d, r.report.n_delta - 1));
    }
    bool ok = worst_res <= 1e-8 && worst_d <= 1e-8;
    return Outcome{ok, fmt("max residual increase %.2e, max D increase %.2e (slack 1e-8)", worst_res, worst_d)};
  });

  report(6, "discrepancy termination", [] {
    const auto& a = ex51(PenaltyKind::L2L1);
    const auto& b = ex52(PenaltyKind::L2TV, 0.01);
    double ta = runs.secs["51l1"], tb = runs.secs["52tv0.01"];
    auto ok = [](const ExperimentResult& r) {
      return r.report.terminated_by == Termination::Discrepancy && r.report.n_delta <= 40 &&
             r.report.final_state().residual <= r.report.tau_delta;
    };
    bool pass = ok(a) && ok(b) && ta < 60 && tb < 600;
    return Outcome{pass, fmt("1-D: n=%d res=%.4e<=%.4e %.1fs; 2-D: n=%d res=%.4e<=%.4e %.1fs", a.report.n_delta,
                             a.report.final_state().residual, a.report.tau_delta, ta, b.report.n_delta,
                             b.report.final_state().residual, b.report.tau_delta, tb)};
  });

  report(7, "noise-level trend", [] {
    auto cfg = example51_config(PenaltyKind::L2L1);
    auto rows = convergence_study(cfg, {4e-3, 2e-3, 1e-3, 5e-4});
    bool pass = rows.size() == 4;
    std::string detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      pass = pass && rows[i].ok;
      if (i > 0) {
        pass = pass && rows[i].error <= 1.1 * rows[i - 1].error;
        pass = pass && rows[i].n_delta >= rows[i - 1].n_delta;
      }
      detail += fmt("%sd=%.0e:n=%d,err=%.4f", i ? " " : "", rows[i].delta, rows[i].n_delta, rows[i].error);
    }
    return Outcome{pass, detail};
  });

  report(8, "penalty comparison", [] {
    double q1 = ex51(PenaltyKind::Quadratic).l2_error, l1 = ex51(PenaltyKind::L2L1).l2_error;
    double q2 = ex52(PenaltyKind::Quadratic).l2_error;
    double tv1 = ex52(PenaltyKind::L2TV, 0.01).l2_error, tv2 = ex52(PenaltyKind::L2TV, 1.0).l2_error;
    bool pass = l1 < q1 && tv1 < q2 && tv2 < q2;
    return Outcome{pass, fmt("1-D: l2_l1 %.4f < quad %.4f; 2-D: tv(0.01) %.4f, tv(1) %.4f < quad %.4f", l1, q1, tv1,
                             tv2, q2)};
  });

  report(9, "rule41 vs discrepancy", [] {
    int checked = 0, agree = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto cfg = example51_config(PenaltyKind::Quadratic);
      cfg.seed = seed;
      auto d = run_experiment(cfg, false);
      cfg.stop.kind = StopKind::Rule41;
      auto r = run_experiment(cfg, false);
      const double td = d.report.tau_delta;
      bool strict = d.report.terminated_by == Termination::Discrepancy && d.report.final_state().residual < td;
      for (const auto& s : d.report.states) strict = strict && s.residual != td;
      if (!strict) continue;
      ++checked;
      if (r.report.terminated_by == Termination::Rule41 && r.report.n_delta == d.report.n_delta - 1) ++agree;
    }
    return Outcome{checked == 10 && agree == checked, fmt("%d/%d strict runs with n_rule41 = n_discrepancy - 1", agree, checked)};
  });

  report(10, "byte-identical reruns", [] {
    auto dir = fs::temp_directory_path() / "nitreg_acceptance_repro";
    fs::remove_all(dir);
    auto cfg = example51_config(PenaltyKind::L2L1);
    cfg.out_dir = dir.string();
    run_experiment(cfg, true);
    auto first = read_dir(dir);
    fs::remove_all(dir);
    run_experiment(cfg, true);
    auto second = read_dir(dir);
    fs::remove_all(dir);
    return Outcome{!first.empty() && first == second, fmt("%zu files compared", first.size())};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
