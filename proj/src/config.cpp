#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nitreg/harness.hpp"

namespace nitreg {

const char* to_string(ProblemKind k) { return k == ProblemKind::Integral1D ? "integral_1d" : "elliptic_2d"; }

const char* to_string(ExactKind k) {
  switch (k) {
    case ExactKind::Spikes1D: return "spikes_1d";
    case ExactKind::TwoInclusions2D: return "two_inclusions_2d";
    case ExactKind::Zero: return "zero";
    case ExactKind::File: return "file";
  }
  return "?";
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt_double(xs[i]);
  return s;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

long long to_integer(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + text + "'");
}

template <typename E>
E to_enum(const std::string& key, const std::string& text, std::initializer_list<E> options) {
  std::string allowed;
  for (E e : options) {
    if (text == to_string(e)) return e;
    allowed += std::string(allowed.empty() ? "" : ", ") + to_string(e);
  }
  throw ConfigError(key + ": unknown value '" + text + "' (expected one of " + allowed + ")");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

// Schema: section -> key -> setter. Echo order follows ExperimentConfig::echo().
const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"experiment",
       {{"name", [](auto& c, auto&, auto& v) { c.name = v; }},
        {"seed", [](auto& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_integer(k, v)); }},
        {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }}}},
      {"problem",
       {{"kind",
         [](auto& c, auto& k, auto& v) {
           c.problem = to_enum(k, v, {ProblemKind::Integral1D, ProblemKind::Elliptic2D});
         }},
        {"n", [](auto& c, auto& k, auto& v) { c.n = static_cast<int>(to_integer(k, v)); }},
        {"nx", [](auto& c, auto& k, auto& v) { c.nx = static_cast<int>(to_integer(k, v)); }},
        {"ny", [](auto& c, auto& k, auto& v) { c.ny = static_cast<int>(to_integer(k, v)); }},
        {"exact",
         [](auto& c, auto& k, auto& v) {
           c.exact = to_enum(k, v, {ExactKind::Spikes1D, ExactKind::TwoInclusions2D, ExactKind::Zero, ExactKind::File});
         }},
        {"exact_file", [](auto& c, auto&, auto& v) { c.exact_file = v; }}}},
      {"noise", {{"delta", [](auto& c, auto& k, auto& v) { c.delta = to_double(k, v); }}}},
      {"stopping",
       {{"kind",
         [](auto& c, auto& k, auto& v) { c.stop.kind = to_enum(k, v, {StopKind::Discrepancy, StopKind::Rule41}); }},
        {"tau", [](auto& c, auto& k, auto& v) { c.stop.tau = to_double(k, v); }},
        {"max_outer", [](auto& c, auto& k, auto& v) { c.stop.max_outer = static_cast<int>(to_integer(k, v)); }},
        {"atol_zero", [](auto& c, auto& k, auto& v) { c.stop.atol_zero = to_double(k, v); }}}},
      {"schedule",
       {{"kind",
         [](auto& c, auto& k, auto& v) {
           c.schedule.kind = to_enum(k, v, {ScheduleKind::Geometric, ScheduleKind::Constant, ScheduleKind::Harmonic});
         }},
        {"alpha1", [](auto& c, auto& k, auto& v) { c.schedule.alpha1 = to_double(k, v); }},
        {"ratio", [](auto& c, auto& k, auto& v) { c.schedule.ratio = to_double(k, v); }}}},
      {"penalty",
       {{"kind",
         [](auto& c, auto& k, auto& v) {
           c.penalty.kind = to_enum(k, v, {PenaltyKind::Quadratic, PenaltyKind::L2L1, PenaltyKind::L2TV});
         }},
        {"mu", [](auto& c, auto& k, auto& v) { c.penalty.mu = to_double(k, v); }},
        {"a", [](auto& c, auto& k, auto& v) { c.penalty.a = to_double(k, v); }},
        {"b", [](auto& c, auto& k, auto& v) { c.penalty.b = to_double(k, v); }},
        {"eps", [](auto& c, auto& k, auto& v) { c.penalty.eps = to_double(k, v); }}}},
      {"method",
       {{"r", [](auto& c, auto& k, auto& v) { c.r = to_double(k, v); }},
        {"exact_linear_inner", [](auto& c, auto& k, auto& v) { c.exact_linear_inner = to_bool(k, v); }}}},
      {"inner",
       {{"grad_tol_rel", [](auto& c, auto& k, auto& v) { c.inner.grad_tol_rel = to_double(k, v); }},
        {"max_iters", [](auto& c, auto& k, auto& v) { c.inner.max_iters = static_cast<int>(to_integer(k, v)); }},
        {"restart_period",
         [](auto& c, auto& k, auto& v) { c.inner.restart_period = static_cast<int>(to_integer(k, v)); }},
        {"armijo", [](auto& c, auto& k, auto& v) { c.inner.armijo = to_double(k, v); }},
        {"backtrack", [](auto& c, auto& k, auto& v) { c.inner.backtrack = to_double(k, v); }},
        {"max_backtracks",
         [](auto& c, auto& k, auto& v) { c.inner.max_backtracks = static_cast<int>(to_integer(k, v)); }},
        {"precondition", [](auto& c, auto& k, auto& v) { c.inner.precondition = to_bool(k, v); }},
        {"precondition_refresh",
         [](auto& c, auto& k, auto& v) { c.inner.precondition_refresh = static_cast<int>(to_integer(k, v)); }}}},
      {"study",
       {{"deltas",
         [](auto& c, auto& k, auto& v) {
           c.study_deltas.clear();
           std::stringstream ss(v);
           std::string item;
           while (std::getline(ss, item, ',')) {
             auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
             if (b == std::string::npos) throw ConfigError(k + ": empty entry");
             c.study_deltas.push_back(to_double(k, item.substr(b, e - b + 1)));
           }
         }},
        {"parallel", [](auto& c, auto& k, auto& v) { c.study_parallel = to_bool(k, v); }}}},
  };
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty() || name.find_first_of("/\\") != std::string::npos)
    throw ConfigError("experiment.name: must be a non-empty file stem");
  if (problem == ProblemKind::Integral1D && n < 2) throw ConfigError("problem.n: need at least 2 intervals");
  if (problem == ProblemKind::Elliptic2D && (nx < 2 || ny < 2)) throw ConfigError("problem.nx/ny: need at least 2");
  if (problem == ProblemKind::Integral1D && exact == ExactKind::TwoInclusions2D)
    throw ConfigError("problem.exact: two_inclusions_2d needs problem.kind = elliptic_2d");
  if (problem == ProblemKind::Elliptic2D && exact == ExactKind::Spikes1D)
    throw ConfigError("problem.exact: spikes_1d needs problem.kind = integral_1d");
  if (exact == ExactKind::File && exact_file.empty()) throw ConfigError("problem.exact_file: required for exact = file");
  if (!(delta >= 0.0)) throw ConfigError("noise.delta: must be nonnegative");
  if (!(r > 1.0)) throw ConfigError("method.r: must exceed 1");
  try {
    stop.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("stopping: ") + e.what());
  }
  try {
    schedule.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  try {
    penalty.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("penalty: ") + e.what());
  }
  try {
    inner.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("inner: ") + e.what());
  }
  for (double d : study_deltas)
    if (!(d >= 0.0)) throw ConfigError("study.deltas: entries must be nonnegative");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  auto i = [](long long v) { return std::to_string(v); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"experiment.name", name},
      {"experiment.seed", std::to_string(seed)},
      {"experiment.out_dir", out_dir},
      {"problem.kind", to_string(problem)},
      {"problem.n", i(n)},
      {"problem.nx", i(nx)},
      {"problem.ny", i(ny)},
      {"problem.exact", to_string(exact)},
      {"problem.exact_file", exact_file},
      {"noise.delta", fmt_double(delta)},
      {"stopping.kind", to_string(stop.kind)},
      {"stopping.tau", fmt_double(stop.tau)},
      {"stopping.max_outer", i(stop.max_outer)},
      {"stopping.atol_zero", fmt_double(stop.atol_zero)},
      {"schedule.kind", to_string(schedule.kind)},
      {"schedule.alpha1", fmt_double(schedule.alpha1)},
      {"schedule.ratio", fmt_double(schedule.ratio)},
      {"penalty.kind", to_string(penalty.kind)},
      {"penalty.mu", fmt_double(penalty.mu)},
      {"penalty.a", fmt_double(penalty.a)},
      {"penalty.b", fmt_double(penalty.b)},
      {"penalty.eps", fmt_double(penalty.eps)},
      {"method.r", fmt_double(r)},
      {"method.exact_linear_inner", b(exact_linear_inner)},
      {"inner.grad_tol_rel", fmt_double(inner.grad_tol_rel)},
      {"inner.max_iters", i(inner.max_iters)},
      {"inner.restart_period", i(inner.restart_period)},
      {"inner.armijo", fmt_double(inner.armijo)},
      {"inner.backtrack", fmt_double(inner.backtrack)},
      {"inner.max_backtracks", i(inner.max_backtracks)},
      {"inner.precondition", b(inner.precondition)},
      {"inner.precondition_refresh", i(inner.precondition_refresh)},
      {"study.deltas", join(study_deltas)},
      {"study.parallel", b(study_parallel)},
  };
}

ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig cfg;
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    auto sec = sch.find(section);
    if (sec == sch.end()) {
      if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError("config: unknown key " + section + "." + key);
      setter->second(cfg, section + "." + key, node.data());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

ExperimentConfig example51_config(PenaltyKind penalty) {
  ExperimentConfig c;
  c.problem = ProblemKind::Integral1D;
  c.n = 400;
  c.exact = ExactKind::Spikes1D;
  c.delta = 0.5e-3;
  c.stop = {StopKind::Discrepancy, 1.02, 200, 1e-10};
  c.schedule = {ScheduleKind::Geometric, 0.5, 0.5};  // alpha_n = 2^-n
  if (penalty == PenaltyKind::Quadratic) {
    c.penalty = Penaltyd::quadratic(1.0);
    c.name = "example51_quadratic";
  } else if (penalty == PenaltyKind::L2L1) {
    c.penalty = Penaltyd::l2_l1(0.01, 1.0, 1e-6);
    c.name = "example51_l2_l1";
  } else {
    throw ConfigError("example51: penalty must be quadratic or l2_l1");
  }
  return c;
}

ExperimentConfig example52_config(PenaltyKind penalty, double mu) {
  ExperimentConfig c;
  c.problem = ProblemKind::Elliptic2D;
  c.nx = c.ny = 40;
  c.exact = ExactKind::TwoInclusions2D;
  c.delta = 0.1e-3;
  c.stop = {StopKind::Discrepancy, 1.05, 200, 1e-10};
  c.schedule = {ScheduleKind::Geometric, 0.5, 0.5};
  c.study_deltas = {1e-2, 4e-3, 1e-3, 4e-4, 1e-4};
  if (penalty == PenaltyKind::Quadratic) {
    c.penalty = Penaltyd::quadratic(1.0);
    c.name = "example52_quadratic";
  } else if (penalty == PenaltyKind::L2TV) {
    c.penalty = Penaltyd::l2_tv(mu, 1.0, 1e-6);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", mu);
    c.name = std::string("example52_l2_tv_mu") + buf;
  } else {
    throw ConfigError("example52: penalty must be quadratic or l2_tv");
  }
  return c;
}

}  // namespace nitreg
