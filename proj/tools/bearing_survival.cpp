// bearing_survival detect|prepare|benchmark|simulate [--config file.toml] [overrides]

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bearing_survival/pipeline.hpp"

namespace {

bool seed_on_command_line(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strncmp(argv[i], "--seed", 6) == 0) return true;
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  using bsurv::pipeline::PipelineConfig;
  PipelineConfig cfg;
  CLI::App app{"Bearing failure event annotation and survival benchmarking"};
  app.set_config("--config", "", "TOML file with the same keys as the long options");
  app.require_subcommand(1, 1);

  app.add_option("--dataset", cfg.dataset, "xjtu or pronostia")->capture_default_str();
  app.add_option("--data_path,--data-path", cfg.data_path, "archive root with one directory per bearing");
  app.add_option("--output_dir,--output-dir,-o", cfg.output_dir, "every output goes below this directory")
      ->capture_default_str();
  app.add_option("--frame_len,--frame-len", cfg.frame_len, "samples per window, 0 = one file per window")
      ->capture_default_str();
  app.add_option("--entropy_bins,--entropy-bins", cfg.entropy_bins)->capture_default_str();
  app.add_option("--breakin_windows,--breakin-windows", cfg.breakin_windows, "0 = 10% of the windows")
      ->capture_default_str();
  app.add_option("--margin", cfg.margin, "threshold = (1 + margin) * break-in maximum")->capture_default_str();
  app.add_option("--band_relative,--band-relative", cfg.band_relative, "band half-width relative to its center")
      ->capture_default_str();
  app.add_option("--n_slices,--n-slices", cfg.n_slices)->capture_default_str();
  app.add_option("--bootstrap_factor,--bootstrap-factor", cfg.bootstrap_factor)->capture_default_str();
  app.add_option("--censoring_rate,--censoring-rate", cfg.censoring_rate)->capture_default_str();
  app.add_option("--seed", cfg.seed, "also read from BEARING_SURVIVAL_SEED")->capture_default_str();
  app.add_option("--models", cfg.models, "coxph rsf coxboost weibull_aft")->delimiter(',')->capture_default_str();
  app.add_option("--train_ids,--train-ids", cfg.train_ids)->delimiter(',');
  app.add_option("--test_ids,--test-ids", cfg.test_ids)->delimiter(',');
  app.add_option("--n_iterations,--n-iterations", cfg.n_iterations)->capture_default_str();
  app.add_option("--n_folds,--n-folds", cfg.n_folds)->capture_default_str();
  app.add_option("--timing_repeats,--timing-repeats", cfg.timing_repeats)->capture_default_str();
  app.add_option("--cox_max_iter,--cox-max-iter", cfg.cox_max_iter)->delimiter(',')->capture_default_str();
  app.add_option("--cox_tol,--cox-tol", cfg.cox_tol)->delimiter(',')->capture_default_str();
  app.add_option("--rsf_trees,--rsf-trees", cfg.rsf_trees)->delimiter(',')->capture_default_str();
  app.add_option("--rsf_depth,--rsf-depth", cfg.rsf_depth, "0 = unlimited")->delimiter(',')->capture_default_str();
  app.add_option("--rsf_min_leaf,--rsf-min-leaf", cfg.rsf_min_leaf)->capture_default_str();
  app.add_option("--boost_rate,--boost-rate", cfg.boost_rate)->delimiter(',')->capture_default_str();
  app.add_option("--boost_depth,--boost-depth", cfg.boost_depth)->delimiter(',')->capture_default_str();
  app.add_option("--boost_rounds,--boost-rounds", cfg.boost_rounds)->delimiter(',')->capture_default_str();
  app.add_option("--aft_penalizer,--aft-penalizer", cfg.aft_penalizer)->delimiter(',')->capture_default_str();
  app.add_option("--rms_threshold,--rms-threshold", cfg.rms_threshold, "raw RMS split for the group curves")
      ->capture_default_str();
  app.add_option("--simulated_per_group,--simulated-per-group", cfg.simulated_per_group)->capture_default_str();
  app.add_flag("--table2", cfg.table2, "print the per-model results table");
  app.add_option("--sim_kind,--sim-kind", cfg.sim_kind, "archive or cohort")->capture_default_str();
  app.add_option("--sim_bearings,--sim-bearings", cfg.sim_bearings)->capture_default_str();
  app.add_option("--sim_censored_bearings,--sim-censored-bearings", cfg.sim_censored_bearings)->capture_default_str();
  app.add_option("--sim_windows,--sim-windows", cfg.sim_windows)->capture_default_str();
  app.add_option("--sim_window_len,--sim-window-len", cfg.sim_window_len)->capture_default_str();
  app.add_option("--sim_noise,--sim-noise", cfg.sim_noise)->capture_default_str();
  app.add_option("--sim_growth,--sim-growth", cfg.sim_growth)->capture_default_str();
  app.add_option("--cohort_records,--cohort-records", cfg.cohort_records)->capture_default_str();
  app.add_option("--cohort_bearings,--cohort-bearings", cfg.cohort_bearings)->capture_default_str();
  app.add_option("--cohort_test_bearings,--cohort-test-bearings", cfg.cohort_test_bearings)->capture_default_str();

  for (const char* name : {"detect", "prepare", "benchmark", "simulate"}) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("detect")->description("annotate failure events; writes annotations/ and traces/");
  app.get_subcommand("prepare")->description("build the survival dataset; writes data/");
  app.get_subcommand("benchmark")->description("tune, fit and evaluate models; writes report/, curves/, models/");
  app.get_subcommand("simulate")->description("write a synthetic archive or linear-hazard cohort");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? 0 : bsurv::pipeline::kExitValidation;
  }

  if (const char* env = std::getenv("BEARING_SURVIVAL_SEED"); env && !seed_on_command_line(argc, argv)) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      std::cerr << "error: BEARING_SURVIVAL_SEED: not an unsigned integer\n";
      return bsurv::pipeline::kExitValidation;
    }
  }
  return bsurv::pipeline::run(app.get_subcommands().front()->get_name(), cfg);
}
