// nitreg: command-line front end for the regularization experiments.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nitreg/harness.hpp"

using namespace nitreg;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
};

void apply_overrides(ExperimentConfig& cfg, const Common& common) {
  if (common.seed) cfg.seed = *common.seed;
  if (!common.out_dir.empty()) {
    cfg.out_dir = common.out_dir;
  } else if (const char* env = std::getenv("NITREG_OUT_DIR"); env && *env) {
    cfg.out_dir = env;
  }
}

void report(const ExperimentResult& res, const Common& common) {
  for (const auto& w : res.warnings) std::fprintf(stderr, "nitreg: warning: %s\n", w.c_str());
  if (common.quiet) return;
  const auto& rep = res.report;
  std::printf("%-28s n_delta=%-3d stop=%-11s residual=%.4e (tau*delta=%.4e) L2 error=%.4e\n",
              rep.config.front().second.c_str(), rep.n_delta, to_string(rep.terminated_by),
              rep.final_state().residual, rep.tau_delta, res.l2_error);
  for (const auto& f : res.files) std::printf("  wrote %s\n", f.c_str());
}

int run_one(ExperimentConfig cfg, const Common& common) {
  apply_overrides(cfg, common);
  auto res = run_experiment(cfg, true);
  report(res, common);
  return res.report.terminated_by == Termination::MaxOuter ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterated Tikhonov regularization with Bregman-distance penalties"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Noise seed (overrides the config)");
    sub->add_option("--out-dir", common.out_dir, "Output directory (overrides NITREG_OUT_DIR and the config)");
    sub->add_flag("--quiet", common.quiet, "Suppress progress output");
  };

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment from a config file");
  run_cmd->add_option("config-file,--config", config_path, "Experiment config (INI)")->required();
  add_common(run_cmd);

  std::string study_path;
  auto* study_cmd = app.add_subcommand("study", "Noise-level sweep over [study] deltas");
  study_cmd->add_option("config-file,--config", study_path, "Experiment config (INI)")->required();
  add_common(study_cmd);

  auto* check_cmd = app.add_subcommand("check", "Run the invariant and oracle checks on small instances");
  add_common(check_cmd);

  std::string penalty51 = "both";
  auto* ex51 = app.add_subcommand("example51", "1-D integral equation with spike solution");
  ex51->add_option("--penalty", penalty51, "quadratic, l2_l1 or both")
      ->check(CLI::IsMember({"quadratic", "l2_l1", "both"}));
  add_common(ex51);

  std::string penalty52 = "all";
  std::optional<double> mu52;
  auto* ex52 = app.add_subcommand("example52", "2-D elliptic parameter identification");
  ex52->add_option("--penalty", penalty52, "quadratic, l2_tv or all")->check(CLI::IsMember({"quadratic", "l2_tv", "all"}));
  ex52->add_option("--mu", mu52, "mu for the l2_tv penalty (default: both 0.01 and 1)");
  add_common(ex52);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run_cmd) {
      ExperimentConfig cfg = load_config(config_path);
      return run_one(cfg, common);
    }
    if (*study_cmd) {
      ExperimentConfig cfg = load_config(study_path);
      apply_overrides(cfg, common);
      auto rows = convergence_study(cfg, cfg.study_deltas);
      std::filesystem::create_directories(cfg.out_dir);
      auto file = (std::filesystem::path(cfg.out_dir) / (cfg.name + "_study.csv")).string();
      std::ofstream out(file, std::ios::binary);
      write_study_csv(out, rows);
      if (!common.quiet) {
        std::printf("%10s %7s %12s %12s %12s\n", "delta", "n_delta", "residual", "L2 error", "bregman");
        for (const auto& r : rows) {
          if (r.ok) {
            std::printf("%10.3e %7d %12.4e %12.4e %12.4e\n", r.delta, r.n_delta, r.residual, r.error, r.bregman);
          } else {
            std::printf("%10.3e failed: %s\n", r.delta, r.message.c_str());
          }
        }
        std::printf("  wrote %s\n", file.c_str());
      }
      return 0;
    }
    if (*check_cmd) {
      bool all = true;
      for (const auto& c : run_checks()) {
        all = all && c.passed;
        if (!common.quiet) std::printf("[%s] %-45s %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
      }
      return all ? 0 : 1;
    }
    if (*ex51) {
      int rc = 0;
      if (penalty51 != "l2_l1") rc = std::max(rc, run_one(example51_config(PenaltyKind::Quadratic), common));
      if (penalty51 != "quadratic") rc = std::max(rc, run_one(example51_config(PenaltyKind::L2L1), common));
      return rc;
    }
    if (*ex52) {
      int rc = 0;
      if (penalty52 != "l2_tv") rc = std::max(rc, run_one(example52_config(PenaltyKind::Quadratic), common));
      if (penalty52 != "quadratic") {
        if (mu52) {
          rc = std::max(rc, run_one(example52_config(PenaltyKind::L2TV, *mu52), common));
        } else {
          for (double mu : {0.01, 1.0}) rc = std::max(rc, run_one(example52_config(PenaltyKind::L2TV, mu), common));
        }
      }
      return rc;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "nitreg: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "nitreg: aborted: %s\n", e.what());
    return 1;
  }
  return 2;
}
