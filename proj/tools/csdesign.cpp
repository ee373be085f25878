// Command-line front end: design, evaluate, sweep, reproduce.

#include "csdesign/designer.hpp"
#include "csdesign/experiments.hpp"
#include "csdesign/io.hpp"
#include "csdesign/metrics.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace csd;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Options shared by every subcommand that builds a config.
struct CommonOptions {
  std::string config;
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out;
  std::optional<std::string> ensemble;
  std::optional<std::string> estimator;
  std::optional<int> threads;
};

void add_common(CLI::App* app, CommonOptions& o, bool monte_carlo) {
  app->add_option("--config", o.config, "flat key = value config file (see 'csdesign keys')");
  app->add_option("--set", o.set, "override a config key, e.g. --set m=12 (repeatable)");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--ensemble", o.ensemble, "full | sampled:<count>");
  if (monte_carlo) {
    app->add_option("--trials", o.trials, "Monte Carlo trials per point (default 500; use 5000 for publication-scale curves)");
    app->add_option("--estimator", o.estimator, "omp | romp | lmmse | oracle | mmse");
    app->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  }
  app->add_option("--out", o.out, monte_carlo ? "output directory" : "output file");
}

ExperimentConfig build_config(const CommonOptions& o, ExperimentConfig base) {
  ExperimentConfig cfg = o.config.empty() ? std::move(base) : load_config_file(o.config, std::move(base));
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParameterError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.ensemble) cfg.ensemble = parse_ensemble(*o.ensemble);
  if (o.estimator) cfg.estimator = parse_estimator(*o.estimator);
  if (o.threads) cfg.threads = *o.threads;
  if (const char* env = std::getenv("CSDESIGN_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  if (o.out) cfg.output_dir = *o.out;
  validate(cfg);
  return cfg;
}

// design/evaluate work on one model: the base n, m, p_db, g; any sweep is ignored.
ExperimentConfig single_point_config(const CommonOptions& o) {
  ExperimentConfig cfg = build_config(o, {});
  cfg.sweep = SweepVariable::None;
  cfg.sweep_values.clear();
  return cfg;
}

SupportEnsemble ensemble_for(const ExperimentConfig& cfg) {
  return cfg.ensemble.sampled ? SupportEnsemble::sampled(cfg.n, cfg.k, cfg.ensemble.count, cfg.seed)
                              : SupportEnsemble::full(cfg.n, cfg.k);
}

SdrOptions sdr_options(const ExperimentConfig& cfg) {
  SdrOptions o;
  o.max_iter = cfg.sdr_max_iter;
  o.tol = cfg.sdr_tol;
  return o;
}

int run_design(const CommonOptions& o, const std::string& method_name, const std::string& trace_path,
               int realizations) {
  const ExperimentConfig cfg = single_point_config(o);
  const Matrix rx = config_source_covariance(cfg);
  const SystemModel model = model_at(cfg, 0.0, &rx);
  const DesignMethod method = parse_design_method(method_name);
  const auto ens = ensemble_for(cfg);
  Rng rng(cfg.seed);
  SensingMatrix a;
  switch (method) {
    case DesignMethod::LowerBound: a = design_lower_bound(model, ens, {sdr_options(cfg)}); break;
    case DesignMethod::UpperBound: a = design_upper_bound(model, {sdr_options(cfg)}); break;
    case DesignMethod::Gaussian: a = design_gaussian(model, rng); break;
    case DesignMethod::TightFrame: a = design_tight_frame(model, rng); break;
    case DesignMethod::Randomized: {
      const SdrResult sdr = solve_sdr(model, ens, sdr_options(cfg));
      a = design_randomized(model, ens, sdr.candidate.q, realizations, rng);
      break;
    }
    case DesignMethod::ClosedForm1: a = closed_form_case1(model); break;
    case DesignMethod::ClosedForm2: a = closed_form_case2(model); break;
    case DesignMethod::ClosedForm3: a = closed_form_case3(model); break;
    case DesignMethod::ClosedForm4: a = closed_form_case4(model, ens); break;
  }
  for (const auto& w : a.warnings) std::cerr << "warning: " << w << '\n';
  if (o.out) {
    write_matrix_file(*o.out, a);
  } else {
    write_matrix(std::cout, a);
  }
  if (!trace_path.empty()) {
    if (!a.trace) throw ParameterError("--trace is only available for solver-based designs");
    std::ofstream f(trace_path);
    if (!f) throw ParameterError("cannot write '" + trace_path + "'");
    write_trace_csv(f, *a.trace);
  }
  return 0;
}

int run_evaluate(const CommonOptions& o, const std::string& matrix_path, const std::string& terms_path) {
  const ExperimentConfig cfg = single_point_config(o);
  const SensingMatrix a = read_matrix_file(matrix_path);
  const Matrix rx = config_source_covariance(cfg);
  const SystemModel model = model_at(cfg, 0.0, &rx).with_m(a.m());
  const auto ens = ensemble_for(cfg);
  const BoundReport bound = mse_lower_bound(model, ens, a.a, !terms_path.empty());
  const CoherenceReport mu = mutual_coherence(a.a);
  std::cout << "method " << to_string(a.method) << '\n'
            << "mse_lower_bound " << format_double(bound.value) << '\n'
            << "nmse_lower_bound_db " << format_double(to_db(bound.value / model.k())) << '\n'
            << "lmmse_mse " << format_double(lmmse_mse(model, a.a)) << '\n'
            << "transmit_power " << format_double(transmit_power(model, a.a)) << '\n'
            << "power_budget " << format_double(model.p()) << '\n'
            << "mutual_coherence " << format_double(mu.value) << '\n'
            << "frame_potential " << format_double(frame_potential(a.a)) << '\n';
  if (mu.skipped_zero_columns > 0) {
    std::cerr << "warning: " << mu.skipped_zero_columns << " zero columns left out of the coherence\n";
  }
  if (!terms_path.empty()) {
    std::ofstream f(terms_path);
    if (!f) throw ParameterError("cannot write '" + terms_path + "'");
    write_bound_csv(f, bound);
  }
  return 0;
}

int run_experiment(const ExperimentConfig& cfg) {
  const ExperimentRun run = run_sweep(cfg, &std::cerr);
  emit_results(run, cfg.output_dir);
  std::cout << "wrote " << cfg.output_dir << "/results.csv\n";
  for (const auto& r : run.records) {
    if (r.status != "ok") return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-constrained compressed-sensing matrix design"};
  app.require_subcommand(1);

  CommonOptions design_opts;
  std::string method = "lower-bound";
  std::string trace_path;
  int realizations = 1000;
  auto* design = app.add_subcommand("design", "design a sensing matrix and write it as a matrix file");
  add_common(design, design_opts, false);
  design->add_option("--method", method,
                     "lower-bound | upper-bound | gaussian | tight-frame | randomized | case1..case4");
  design->add_option("--trace", trace_path, "write the solver trace as CSV");
  design->add_option("--realizations", realizations, "candidates for --method randomized");

  CommonOptions eval_opts;
  std::string matrix_path;
  std::string terms_path;
  auto* evaluate = app.add_subcommand("evaluate", "bound, power and coherence of a matrix file");
  add_common(evaluate, eval_opts, false);
  evaluate->add_option("--matrix", matrix_path, "matrix file")->required();
  evaluate->add_option("--terms", terms_path, "write per-support bound terms as CSV");

  CommonOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep from a config file");
  add_common(sweep, sweep_opts, true);

  CommonOptions repro_opts;
  std::string figure;
  auto* reproduce = app.add_subcommand("reproduce", "run a canned figure configuration");
  reproduce->add_option("figure", figure, "fig2 | fig3 | fig4 | fig5")->required();
  add_common(reproduce, repro_opts, true);

  app.add_subcommand("keys", "list the config file keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*design) return run_design(design_opts, method, trace_path, realizations);
    if (*evaluate) return run_evaluate(eval_opts, matrix_path, terms_path);
    if (*sweep) return run_experiment(build_config(sweep_opts, {}));
    if (*reproduce) return run_experiment(build_config(repro_opts, figure_config(figure)));
    std::cout << config_keys_help();
    return 0;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
