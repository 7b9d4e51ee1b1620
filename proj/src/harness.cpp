#include "nitreg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <sstream>

namespace nitreg {

namespace {

bool inside(double t, double lo, double hi) { return t >= lo - 1e-12 && t <= hi + 1e-12; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

GridFnd spikes_1d(const SpacePtrd& space) {
  if (space->dimension() != 1) throw DimensionError("spikes_1d: needs a 1-D grid");
  return GridFnd::sample(space, [](double t) {
    if (inside(t, 0.292, 0.300)) return 0.5;
    if (inside(t, 0.500, 0.508)) return 1.0;
    if (inside(t, 0.700, 0.708)) return 0.7;
    return 0.0;
  });
}

GridFnd two_inclusions_2d(const SpacePtrd& space) {
  if (space->dimension() != 2) throw DimensionError("two_inclusions_2d: needs a 2-D grid");
  return GridFnd::sample(space, [](double x, double y) {
    if ((x - 0.3) * (x - 0.3) + (y - 0.7) * (y - 0.7) <= 0.2 * 0.2 + 1e-12) return 1.0;
    if (inside(x, 0.6, 0.8) && inside(y, 0.2, 0.5)) return 0.5;
    return 0.0;
  });
}

Problem make_problem(const ExperimentConfig& config) {
  config.validate();
  Problem p;
  SpacePtrd space = config.problem == ProblemKind::Integral1D ? GridSpaced::interval(config.n)
                                                              : GridSpaced::unit_square(config.nx, config.ny);
  switch (config.exact) {
    case ExactKind::Spikes1D: p.x_dagger = spikes_1d(space); break;
    case ExactKind::TwoInclusions2D: p.x_dagger = two_inclusions_2d(space); break;
    case ExactKind::Zero: p.x_dagger = GridFnd::zeros(space); break;
    case ExactKind::File: {
      std::ifstream in(config.exact_file);
      if (!in) throw ConfigError("problem.exact_file: cannot open '" + config.exact_file + "'");
      GridFnd f = read_gridfn_csv(in);
      if (!(*f.space() == *space))
        throw ConfigError("problem.exact_file: grid " + f.space()->describe() + " does not match " + space->describe());
      p.x_dagger = GridFnd(space, f.values());
      break;
    }
  }
  if (config.problem == ProblemKind::Integral1D) {
    p.op = std::make_unique<IntegralOp>(config.n);
  } else {
    p.op = EllipticOp::with_linear_state(p.x_dagger);
  }
  p.y_exact = p.op->apply(p.x_dagger);
  return p;
}

GridFnd add_noise(const GridFnd& y, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw ParameterError("add_noise: delta must be nonnegative");
  if (delta == 0.0) return y;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd e(y.size());
  double ne = 0.0;
  while (ne == 0.0) {
    for (int k = 0; k < e.size(); ++k) e(k) = gauss(rng);
    ne = norm(GridFnd(y.space(), e));
  }
  GridFnd yd(y.space(), y.values() + (delta / ne) * e, y.variance());
  // Rescale the realized perturbation so rounding in y + n does not bias its norm.
  for (int pass = 0; pass < 2; ++pass) {
    GridFnd realized = yd - y;
    yd = axpy(delta / norm(realized), realized, y);
  }
  return yd;
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files) {
  Problem prob = make_problem(config);
  GridFnd ydelta = add_noise(prob.y_exact, config.delta, config.seed);

  ExperimentResult out;
  if (!prob.op->is_linear()) {
    out.eta_hat = estimate_eta(*prob.op, GridFnd::zeros(prob.x_dagger.space()), 0.5, 20, config.seed);
    const double need = out.eta_hat < 1.0 ? (1.0 + out.eta_hat) / (1.0 - out.eta_hat) : INFINITY;
    if (!(config.stop.tau > need))
      out.warnings.push_back("tau = " + num(config.stop.tau) + " does not exceed (1 + eta)/(1 - eta) = " + num(need) +
                             " for the estimated eta = " + num(out.eta_hat));
  }

  RunOptions opts;
  opts.r = config.r;
  opts.inner = config.inner;
  opts.exact_linear_inner = config.exact_linear_inner;
  opts.x_ref = prob.x_dagger;

  GridFnd x0 = GridFnd::zeros(prob.op->domain_space());
  GridFnd xi0 = GridFnd::zeros(prob.op->domain_space(), Variance::Dual);
  out.report = run(*prob.op, config.penalty, ydelta, config.delta, config.schedule, config.stop, opts, x0, xi0);
  out.report.config = config.echo();
  out.x_dagger = prob.x_dagger;
  out.l2_error = norm(out.report.x_out - prob.x_dagger);
  out.theta_value = value(config.penalty, out.report.x_out);

  if (write_files) {
    std::filesystem::create_directories(config.out_dir);
    auto path = [&](const std::string& suffix) {
      return (std::filesystem::path(config.out_dir) / (config.name + suffix)).string();
    };
    auto emit = [&](const std::string& file, auto&& writer) {
      std::ofstream f(file, std::ios::binary);
      if (!f) throw ConfigError("cannot write '" + file + "'");
      writer(f);
      out.files.push_back(file);
    };
    emit(path("_iterations.csv"), [&](std::ostream& f) { write_iterations_csv(f, out.report); });
    emit(path("_reconstruction.csv"), [&](std::ostream& f) { write_gridfn_csv(f, out.report.x_out); });
    emit(path("_exact.csv"), [&](std::ostream& f) { write_gridfn_csv(f, prob.x_dagger); });
    emit(path("_data.csv"), [&](std::ostream& f) { write_gridfn_csv(f, ydelta); });
    emit(path("_summary.txt"), [&](std::ostream& f) { write_summary(f, out); });
  }
  return out;
}

std::vector<StudyRow> convergence_study(const ExperimentConfig& config, std::vector<double> deltas) {
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  auto one = [&config](double delta) {
    StudyRow row;
    row.delta = delta;
    try {
      ExperimentConfig c = config;
      c.delta = delta;
      ExperimentResult res = run_experiment(c, false);
      const auto& fin = res.report.final_state();
      row.ok = true;
      row.n_delta = res.report.n_delta;
      row.residual = fin.residual;
      row.error = res.l2_error;
      row.theta_value = res.theta_value;
      row.bregman = fin.bregman_to_ref.value_or(0.0);
      row.terminated_by = res.report.terminated_by;
    } catch (const std::exception& e) {
      row.message = e.what();
    }
    return row;
  };

  std::vector<StudyRow> rows;
  if (config.study_parallel) {
    std::vector<std::future<StudyRow>> jobs;
    for (double d : deltas) jobs.push_back(std::async(std::launch::async, one, d));
    for (auto& j : jobs) rows.push_back(j.get());
  } else {
    for (double d : deltas) rows.push_back(one(d));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

void write_gridfn_csv(std::ostream& out, const GridFnd& f) {
  const auto& sp = *f.space();
  out << "# gridfn dims=";
  for (int a = 0; a < sp.dimension(); ++a) out << (a ? "x" : "") << sp.dims()[a];
  out << " domain=";
  for (int a = 0; a < sp.dimension(); ++a) out << (a ? "," : "") << num(sp.lower(a)) << ":" << num(sp.upper(a));
  out << " exponent=" << num(sp.exponent()) << " variance=" << to_string(f.variance()) << "\n";
  out << (sp.dimension() == 1 ? "x,value\n" : "x,y,value\n");
  for (int k = 0; k < f.size(); ++k) {
    out << num(sp.coordinate(k, 0)) << ",";
    if (sp.dimension() == 2) out << num(sp.coordinate(k, 1)) << ",";
    out << num(f[k]) << "\n";
  }
}

GridFnd read_gridfn_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# gridfn ", 0) != 0)
    throw ConfigError("gridfn csv: missing '# gridfn' header line");
  std::vector<int> dims;
  std::vector<std::pair<double, double>> domain;
  double exponent = 2.0;
  Variance variance = Variance::Primal;
  std::istringstream hs(header.substr(9));
  std::string tok;
  while (hs >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("gridfn csv: bad header token '" + tok + "'");
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "dims") {
      std::replace(val.begin(), val.end(), 'x', ' ');
      std::istringstream vs(val);
      for (int d; vs >> d;) dims.push_back(d);
    } else if (key == "domain") {
      std::replace(val.begin(), val.end(), ',', ' ');
      std::replace(val.begin(), val.end(), ':', ' ');
      std::istringstream vs(val);
      for (double lo, hi; vs >> lo >> hi;) domain.emplace_back(lo, hi);
    } else if (key == "exponent") {
      exponent = std::stod(val);
    } else if (key == "variance") {
      variance = val == "dual" ? Variance::Dual : Variance::Primal;
    } else {
      throw ConfigError("gridfn csv: unknown header key '" + key + "'");
    }
  }
  if (dims.empty() || dims.size() > 2 || domain.size() != dims.size())
    throw ConfigError("gridfn csv: header needs matching dims and domain");
  SpacePtrd space;
  if (dims.size() == 1) {
    space = GridSpaced::interval(dims[0] - 1, exponent, domain[0].first, domain[0].second);
  } else {
    if (domain[0] != std::make_pair(0.0, 1.0) || domain[1] != std::make_pair(0.0, 1.0))
      throw ConfigError("gridfn csv: 2-D grids must cover the unit square");
    space = GridSpaced::unit_square(dims[0] - 1, dims[1] - 1, exponent);
  }

  std::string line;
  std::getline(in, line);  // column names
  Eigen::VectorXd v(space->node_count());
  int k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (k >= v.size()) throw ConfigError("gridfn csv: more rows than grid nodes");
    auto comma = line.rfind(',');
    v(k++) = std::stod(line.substr(comma == std::string::npos ? 0 : comma + 1));
  }
  if (k != v.size()) throw ConfigError("gridfn csv: " + std::to_string(k) + " rows for " + std::to_string(v.size()) + " nodes");
  return GridFnd(space, std::move(v), variance);
}

void write_iterations_csv(std::ostream& out, const RunReport& report) {
  for (const auto& [k, v] : report.config) out << "# " << k << "=" << v << "\n";
  out << "# n_delta=" << report.n_delta << "\n";
  out << "# terminated_by=" << to_string(report.terminated_by) << "\n";
  out << "# tau_delta=" << num(report.tau_delta) << "\n";
  out << "n,alpha,residual,theta_value,bregman_to_ref,inner_iters,dual_gap,inner_grad_norm,inner_warning\n";
  for (const auto& s : report.states) {
    out << s.n << "," << num(s.alpha) << "," << num(s.residual) << "," << num(s.theta_value) << ","
        << (s.bregman_to_ref ? num(*s.bregman_to_ref) : "") << "," << s.inner.iterations << "," << num(s.dual_gap)
        << "," << num(s.inner.grad_norm_final) << "," << (s.inner.warning() ? 1 : 0) << "\n";
  }
}

void write_summary(std::ostream& out, const ExperimentResult& result) {
  const auto& rep = result.report;
  for (const auto& [k, v] : rep.config) out << k << "=" << v << "\n";
  out << "result.n_delta=" << rep.n_delta << "\n";
  out << "result.terminated_by=" << to_string(rep.terminated_by) << "\n";
  out << "result.tau_delta=" << num(rep.tau_delta) << "\n";
  out << "result.final_residual=" << num(rep.final_state().residual) << "\n";
  out << "result.l2_error=" << num(result.l2_error) << "\n";
  out << "result.theta_value=" << num(result.theta_value) << "\n";
  out << "result.eta_hat=" << num(result.eta_hat) << "\n";
  int warnings = 0;
  for (const auto& s : rep.states) warnings += s.inner.warning() ? 1 : 0;
  out << "result.inner_warnings=" << warnings << "\n";
  for (const auto& w : result.warnings) out << "warning=" << w << "\n";
}

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << "delta,n_delta,residual,error,theta_value,bregman,terminated_by,ok,message\n";
  for (const auto& r : rows) {
    out << num(r.delta) << "," << r.n_delta << "," << num(r.residual) << "," << num(r.error) << ","
        << num(r.theta_value) << "," << num(r.bregman) << "," << to_string(r.terminated_by) << "," << (r.ok ? 1 : 0)
        << ",\"" << r.message << "\"\n";
  }
}

}  // namespace nitreg
