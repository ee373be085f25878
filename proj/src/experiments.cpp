#include "csdesign/experiments.hpp"

#include "csdesign/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace csd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || !std::isfinite(out)) {
    throw ParameterError("config key '" + key + "': '" + v + "' is not a finite number");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ParameterError("config key '" + key + "': '" + v + "' is not an integer");
  return out;
}

int parse_int32(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ParameterError("config key '" + key + "': value out of range");
  }
  return static_cast<int>(x);
}

std::string shortest(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::string format_db(double linear) {
  const double db = to_db(linear);
  return std::isinf(db) ? "-inf" : format_double(db);
}

constexpr EstimatorKind kEstimators[] = {EstimatorKind::Omp, EstimatorKind::RandomOmp, EstimatorKind::Lmmse,
                                         EstimatorKind::Oracle, EstimatorKind::Mmse};
constexpr SweepVariable kSweeps[] = {SweepVariable::None, SweepVariable::M, SweepVariable::PowerDb,
                                     SweepVariable::CsnrDb};

}  // namespace

std::string to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::Omp: return "omp";
    case EstimatorKind::RandomOmp: return "romp";
    case EstimatorKind::Lmmse: return "lmmse";
    case EstimatorKind::Oracle: return "oracle";
    case EstimatorKind::Mmse: return "mmse";
  }
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
  for (auto e : kEstimators) {
    if (to_string(e) == name) return e;
  }
  throw ParameterError("unknown estimator '" + name + "' (omp|romp|lmmse|oracle|mmse)");
}

std::string to_string(SweepVariable s) {
  switch (s) {
    case SweepVariable::None: return "none";
    case SweepVariable::M: return "m";
    case SweepVariable::PowerDb: return "p_db";
    case SweepVariable::CsnrDb: return "csnr_db";
  }
  return "unknown";
}

SweepVariable parse_sweep_variable(const std::string& name) {
  for (auto s : kSweeps) {
    if (to_string(s) == name) return s;
  }
  throw ParameterError("unknown sweep variable '" + name + "' (none|m|p_db|csnr_db)");
}

EnsembleSpec parse_ensemble(const std::string& text) {
  if (text == "full") return {};
  const std::string prefix = "sampled:";
  if (text.rfind(prefix, 0) == 0) {
    const long long c = parse_int("ensemble", text.substr(prefix.size()));
    if (c < 1 || c > std::numeric_limits<int>::max()) throw ParameterError("ensemble sample count must be positive");
    return {true, static_cast<int>(c)};
  }
  throw ParameterError("ensemble must be 'full' or 'sampled:<count>'");
}

std::string to_string(const EnsembleSpec& e) { return e.sampled ? "sampled:" + std::to_string(e.count) : "full"; }

std::string config_keys_help() {
  return "Config file: one 'key = value' per line, '#' starts a comment.\n"
         "  name                     run name; also the .dat file name\n"
         "  n, k, m                  source size, sparsity, measurements\n"
         "  g, sigma_v, sigma_w      channel gain and noise standard deviations\n"
         "  p_db                     power budget, 10 log10 P\n"
         "  rho                      exponential correlation of the nonzero entries\n"
         "  sweep                    none | m | p_db | csnr_db (csnr sweeps set g = sigma_w 10^(csnr_db/20))\n"
         "  sweep_values             ascending list, comma or space separated\n"
         "  designs                  list of lower-bound, upper-bound, gaussian, tight-frame,\n"
         "                           randomized, case1, case2, case3, case4\n"
         "  estimator                omp | romp | lmmse | oracle | mmse\n"
         "  romp_passes              random-OMP passes (default 20)\n"
         "  romp_temperature         random-OMP score temperature (default 1, 0 = greedy)\n"
         "  trials                   Monte Carlo trials per point\n"
         "  seed                     master seed\n"
         "  ensemble                 full | sampled:<count>\n"
         "  randomized_realizations  candidates for the randomized design\n"
         "  rx                       analytic | empirical source covariance for the designs\n"
         "  rx_draws                 source draws behind the empirical covariance\n"
         "  sdr_max_iter, sdr_tol    relaxation solver limits\n"
         "  threads                  worker threads (0 = all cores)\n"
         "  output_dir               results directory (env CSDESIGN_OUTPUT_DIR overrides)\n";
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "name") {
    if (v.empty() || v.find_first_of("/\\ ") != std::string::npos) throw ParameterError("name must be a plain word");
    cfg.name = v;
  } else if (key == "n") {
    cfg.n = parse_int32(key, v);
  } else if (key == "k") {
    cfg.k = parse_int32(key, v);
  } else if (key == "m") {
    cfg.m = parse_int32(key, v);
  } else if (key == "g") {
    cfg.g = parse_double(key, v);
  } else if (key == "sigma_v") {
    cfg.sigma_v = parse_double(key, v);
  } else if (key == "sigma_w") {
    cfg.sigma_w = parse_double(key, v);
  } else if (key == "p_db") {
    cfg.p_db = parse_double(key, v);
  } else if (key == "rho") {
    cfg.rho = parse_double(key, v);
  } else if (key == "sweep") {
    cfg.sweep = parse_sweep_variable(v);
  } else if (key == "sweep_values") {
    cfg.sweep_values.clear();
    for (const auto& item : split_list(v)) cfg.sweep_values.push_back(parse_double(key, item));
  } else if (key == "designs") {
    cfg.designs.clear();
    for (const auto& item : split_list(v)) cfg.designs.push_back(parse_design_method(item));
  } else if (key == "estimator") {
    cfg.estimator = parse_estimator(v);
  } else if (key == "romp_passes") {
    cfg.romp.passes = parse_int32(key, v);
  } else if (key == "romp_temperature") {
    cfg.romp.temperature = parse_double(key, v);
  } else if (key == "trials") {
    cfg.trials = parse_int32(key, v);
  } else if (key == "seed") {
    const long long s = parse_int(key, v);
    if (s < 0) throw ParameterError("seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "ensemble") {
    cfg.ensemble = parse_ensemble(v);
  } else if (key == "randomized_realizations") {
    cfg.randomized_realizations = parse_int32(key, v);
  } else if (key == "rx") {
    if (v != "analytic" && v != "empirical") throw ParameterError("rx must be 'analytic' or 'empirical'");
    cfg.empirical_rx = v == "empirical";
  } else if (key == "rx_draws") {
    cfg.rx_draws = parse_int32(key, v);
  } else if (key == "sdr_max_iter") {
    cfg.sdr_max_iter = parse_int32(key, v);
  } else if (key == "sdr_tol") {
    cfg.sdr_tol = parse_double(key, v);
  } else if (key == "threads") {
    cfg.threads = parse_int32(key, v);
  } else if (key == "output_dir") {
    if (v.empty()) throw ParameterError("output_dir must not be empty");
    cfg.output_dir = v;
  } else {
    throw ParameterError("unknown config key '" + key + "'");
  }
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ParameterError("config: " + msg); };
  if (cfg.n < 1) fail("n must be positive");
  if (cfg.k < 1 || cfg.k > cfg.n) fail("k must satisfy 1 <= k <= n");
  if (cfg.m < 1 || cfg.m > cfg.n) fail("m must satisfy 1 <= m <= n");
  if (!(cfg.g > 0.0)) fail("g must be positive");
  if (cfg.sigma_v < 0.0 || cfg.sigma_w < 0.0) fail("noise levels must be nonnegative");
  if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) fail("rho must lie in [0, 1)");
  if (cfg.trials < 1) fail("trials must be at least 1");
  if (cfg.designs.empty()) fail("at least one design is required");
  if (cfg.romp.passes < 1) fail("romp_passes must be at least 1");
  if (cfg.romp.temperature < 0.0) fail("romp_temperature must be nonnegative");
  if (cfg.randomized_realizations < 1) fail("randomized_realizations must be at least 1");
  if (cfg.rx_draws < 1) fail("rx_draws must be at least 1");
  if (cfg.sdr_max_iter < 1) fail("sdr_max_iter must be at least 1");
  if (!(cfg.sdr_tol > 0.0)) fail("sdr_tol must be positive");
  if (cfg.threads < 0) fail("threads must be nonnegative");
  const double supports = binomial(cfg.n, cfg.k);
  if (cfg.ensemble.sampled) {
    if (cfg.ensemble.count < 1 || cfg.ensemble.count > supports) fail("sampled ensemble size must be in [1, C(n,k)]");
  } else if (supports > SupportEnsemble::kMaxFull) {
    fail("C(n,k) exceeds the full-enumeration limit; use ensemble = sampled:<count>");
  }
  if (cfg.estimator == EstimatorKind::Mmse && supports > kMaxExhaustiveSupports) {
    fail("the exhaustive MMSE estimator needs C(n,k) <= 1e5");
  }
  if (cfg.sweep == SweepVariable::None) {
    if (!cfg.sweep_values.empty()) fail("sweep_values given without a sweep variable");
  } else {
    if (cfg.sweep_values.empty()) fail("sweep_values must not be empty");
    for (std::size_t i = 1; i < cfg.sweep_values.size(); ++i) {
      if (!(cfg.sweep_values[i] > cfg.sweep_values[i - 1])) fail("sweep_values must be strictly ascending");
    }
    if (cfg.sweep == SweepVariable::M) {
      for (double v : cfg.sweep_values) {
        if (v != std::floor(v) || v < 1 || v > cfg.n) fail("m sweep values must be integers in [1, n]");
      }
    }
    if (cfg.sweep == SweepVariable::CsnrDb && !(cfg.sigma_w > 0.0)) fail("a csnr_db sweep needs sigma_w > 0");
  }
}

ExperimentConfig parse_config(std::istream& is, ExperimentConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  validate(base);
  return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ParameterError("cannot open config file '" + path + "'");
  return parse_config(f, std::move(base));
}

std::string write_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto list = [](const auto& items, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + fmt(items[i]);
    return s;
  };
  os << "name = " << cfg.name << '\n'
     << "n = " << cfg.n << '\n'
     << "k = " << cfg.k << '\n'
     << "m = " << cfg.m << '\n'
     << "g = " << shortest(cfg.g) << '\n'
     << "sigma_v = " << shortest(cfg.sigma_v) << '\n'
     << "sigma_w = " << shortest(cfg.sigma_w) << '\n'
     << "p_db = " << shortest(cfg.p_db) << '\n'
     << "rho = " << shortest(cfg.rho) << '\n'
     << "sweep = " << to_string(cfg.sweep) << '\n'
     << "sweep_values = " << list(cfg.sweep_values, shortest) << '\n'
     << "designs = " << list(cfg.designs, [](DesignMethod d) { return to_string(d); }) << '\n'
     << "estimator = " << to_string(cfg.estimator) << '\n'
     << "romp_passes = " << cfg.romp.passes << '\n'
     << "romp_temperature = " << shortest(cfg.romp.temperature) << '\n'
     << "trials = " << cfg.trials << '\n'
     << "seed = " << cfg.seed << '\n'
     << "ensemble = " << to_string(cfg.ensemble) << '\n'
     << "randomized_realizations = " << cfg.randomized_realizations << '\n'
     << "rx = " << (cfg.empirical_rx ? "empirical" : "analytic") << '\n'
     << "rx_draws = " << cfg.rx_draws << '\n'
     << "sdr_max_iter = " << cfg.sdr_max_iter << '\n'
     << "sdr_tol = " << shortest(cfg.sdr_tol) << '\n'
     << "threads = " << cfg.threads << '\n'
     << "output_dir = " << cfg.output_dir << '\n';
  return os.str();
}

ExperimentConfig figure_config(const std::string& figure) {
  ExperimentConfig c;
  c.name = figure;
  c.empirical_rx = true;
  c.output_dir = "results/" + figure;
  if (figure == "fig2") {
    c.sweep = SweepVariable::M;
    c.sweep_values = {6, 9, 12, 15, 18, 21, 24, 27, 30, 32, 35};
  } else if (figure == "fig3") {
    c.sweep = SweepVariable::PowerDb;
    c.sweep_values = {-20, -15, -10, -5, 0, 5, 10};
  } else if (figure == "fig4") {
    c.rho = 0.5;
    c.estimator = EstimatorKind::Omp;
    c.sweep = SweepVariable::CsnrDb;
    c.sweep_values = {0, 5, 10, 15, 20, 25, 30};
  } else if (figure == "fig5") {
    c.n = 40;
    c.k = 3;
    c.rho = 0.75;
    c.estimator = EstimatorKind::Omp;
    c.ensemble = {true, 500};
    c.sweep = SweepVariable::M;
    c.sweep_values = {8, 12, 16, 20, 24, 28};
    c.designs.push_back(DesignMethod::Randomized);
  } else {
    throw ParameterError("unknown figure '" + figure + "' (fig2|fig3|fig4|fig5)");
  }
  return c;
}

SystemModel model_at(const ExperimentConfig& cfg, double sweep_value, const Matrix* rx) {
  ModelParams p;
  p.n = cfg.n;
  p.k = cfg.k;
  p.m = cfg.m;
  p.g = cfg.g;
  p.sigma_v = cfg.sigma_v;
  p.sigma_w = cfg.sigma_w;
  double p_db = cfg.p_db;
  switch (cfg.sweep) {
    case SweepVariable::None: break;
    case SweepVariable::M: p.m = static_cast<int>(sweep_value); break;
    case SweepVariable::PowerDb: p_db = sweep_value; break;
    case SweepVariable::CsnrDb: p.g = cfg.sigma_w * std::pow(10.0, sweep_value / 20.0); break;
  }
  p.p = std::pow(10.0, p_db / 10.0);
  p.r = exponential_correlation(cfg.k, cfg.rho);
  SystemModel model(std::move(p));
  return rx ? model.with_source_covariance(*rx) : model;
}

Matrix config_source_covariance(const ExperimentConfig& cfg) {
  ExperimentConfig base = cfg;
  base.sweep = SweepVariable::None;
  const SystemModel model = model_at(base, 0.0);
  if (!cfg.empirical_rx) return model.rx();
  Rng rng = Rng(cfg.seed).split(0xC0FFEEull << 32);
  return empirical_source_covariance(model, cfg.rx_draws, rng);
}

const PointResult* ExperimentRun::find(const std::string& design, double value) const {
  for (const auto& r : records) {
    if (r.design == design && r.value == value) return &r;
  }
  return nullptr;
}

namespace {

struct TrialStats {
  double nmse = 0.0;
  double stderr_nmse = 0.0;
};

// Runs `trials` independent trials of `fn(trial)` -> squared error / K over
// a worker pool and reduces them in trial order.
template <class Fn>
TrialStats run_trials(int trials, int threads, Fn&& fn) {
  std::vector<double> err(static_cast<std::size_t>(trials));
  std::vector<std::string> errors(static_cast<std::size_t>(trials));
  const int workers = std::max(1, std::min(threads, trials));
  auto body = [&](int w) {
    for (int t = w; t < trials; t += workers) {
      try {
        err[static_cast<std::size_t>(t)] = fn(t);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(t)] = e.what();
      }
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw NumericalError(e);
  }
  CompensatedSum sum;
  for (double e : err) sum.add(e);
  const double mean = sum.value() / trials;
  CompensatedSum dev;
  for (double e : err) dev.add((e - mean) * (e - mean));
  TrialStats s;
  s.nmse = mean;
  s.stderr_nmse = trials > 1 ? std::sqrt(dev.value() / (trials - 1) / trials) : 0.0;
  return s;
}

Vector estimate(const Decoder& dec, EstimatorKind kind, const RandomOmpOptions& romp, const Vector& y,
                const SparseSample& sample, Rng& rng) {
  switch (kind) {
    case EstimatorKind::Omp: return dec.omp(y).x_hat;
    case EstimatorKind::RandomOmp: return dec.random_omp(y, romp, rng).x_hat;
    case EstimatorKind::Lmmse: return dec.lmmse(y).x_hat;
    case EstimatorKind::Oracle: return dec.oracle(y, sample.support).x_hat;
    case EstimatorKind::Mmse: return dec.mmse_exhaustive(y).x_hat;
  }
  throw ParameterError("unknown estimator");
}

bool redrawn_per_trial(DesignMethod d) { return d == DesignMethod::Gaussian || d == DesignMethod::TightFrame; }

}  // namespace

ExperimentRun run_sweep(const ExperimentConfig& cfg, std::ostream* log) {
  validate(cfg);
  ExperimentRun run;
  run.config = cfg;
  const int threads =
      cfg.threads > 0 ? cfg.threads : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const Rng master(cfg.seed);
  const auto design_ens = cfg.ensemble.sampled
                              ? SupportEnsemble::sampled(cfg.n, cfg.k, cfg.ensemble.count, splitmix64(cfg.seed ^ 0x5u))
                              : SupportEnsemble::full(cfg.n, cfg.k);
  const bool full_bound = binomial(cfg.n, cfg.k) <= SupportEnsemble::kMaxFull;
  const auto bound_ens = full_bound && cfg.ensemble.sampled ? SupportEnsemble::full(cfg.n, cfg.k) : design_ens;
  SdrOptions sdr_opts;
  sdr_opts.max_iter = cfg.sdr_max_iter;
  sdr_opts.tol = cfg.sdr_tol;

  const std::vector<double> points =
      cfg.sweep == SweepVariable::None ? std::vector<double>{0.0} : cfg.sweep_values;
  // The relaxed optima do not depend on M, so an M sweep solves them once.
  std::optional<SdrResult> lb_gram;
  std::optional<SdrResult> ub_gram;

  const Matrix rx = config_source_covariance(cfg);

  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const double value = points[pi];
    const SystemModel model = model_at(cfg, value, &rx);
    if (cfg.sweep != SweepVariable::M) {
      lb_gram.reset();
      ub_gram.reset();
    }
    std::optional<Matrix> lb_matrix;
    for (std::size_t di = 0; di < cfg.designs.size(); ++di) {
      const DesignMethod method = cfg.designs[di];
      const auto t0 = std::chrono::steady_clock::now();
      PointResult rec;
      rec.design = to_string(method);
      rec.value = value;
      const Rng design_rng = master.split((static_cast<std::uint64_t>(method) + 1) << 40 | pi << 20);
      rec.seed = design_rng.seed();
      try {
        std::optional<Decoder> fixed;
        if (!redrawn_per_trial(method)) {
          SensingMatrix a;
          switch (method) {
            case DesignMethod::LowerBound:
              if (!lb_gram) lb_gram = solve_sdr(model, design_ens, sdr_opts);
              a = design_from_gram(model, *lb_gram, method);
              lb_matrix = a.a;
              break;
            case DesignMethod::UpperBound:
              if (!ub_gram) ub_gram = solve_lmmse_sdr(model, sdr_opts);
              a = design_upper_bound_from_gram(model, *ub_gram, {sdr_opts});
              break;
            case DesignMethod::Randomized: {
              if (!lb_gram) lb_gram = solve_sdr(model, design_ens, sdr_opts);
              Rng r = design_rng;
              a = design_randomized(model, design_ens, lb_gram->candidate.q, cfg.randomized_realizations, r);
              break;
            }
            case DesignMethod::ClosedForm1: a = closed_form_case1(model); break;
            case DesignMethod::ClosedForm2: a = closed_form_case2(model); break;
            case DesignMethod::ClosedForm3: a = closed_form_case3(model); break;
            case DesignMethod::ClosedForm4: a = closed_form_case4(model, design_ens); break;
            default: break;
          }
          fixed.emplace(model, a.a);
        }
        const TrialStats stats = run_trials(cfg.trials, threads, [&](int t) {
          Rng src = master.split(static_cast<std::uint64_t>(t));
          const SparseSample sample = draw_sparse_sample(model, src);
          Rng drng = design_rng.split(static_cast<std::uint64_t>(t));
          std::optional<Decoder> local;
          if (!fixed) {
            const SensingMatrix a = method == DesignMethod::Gaussian ? design_gaussian(model, drng)
                                                                     : design_tight_frame(model, drng);
            local.emplace(model, a.a);
          }
          const Decoder& dec = fixed ? *fixed : *local;
          const Vector y = simulate_channel(model, dec.a(), sample.x, src);
          const Vector xh = estimate(dec, cfg.estimator, cfg.romp, y, sample, drng);
          return (sample.x - xh).squaredNorm() / cfg.k;
        });
        rec.nmse = stats.nmse;
        rec.stderr_nmse = stats.stderr_nmse;
      } catch (const std::exception& e) {
        rec.status = std::string("failed: ") + e.what();
        rec.nmse = std::numeric_limits<double>::quiet_NaN();
        rec.stderr_nmse = std::numeric_limits<double>::quiet_NaN();
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (log) {
        *log << cfg.name << ' ' << to_string(cfg.sweep) << '=' << shortest(value) << ' ' << rec.design << ": ";
        if (rec.status == "ok") {
          *log << "NMSE " << format_db(rec.nmse) << " dB";
        } else {
          *log << rec.status;
        }
        *log << " (" << rec.seconds << " s)\n";
      }
      run.records.push_back(std::move(rec));
    }
    if (lb_matrix) {
      PointResult rec;
      rec.design = kAnalyticBoundName;
      rec.value = value;
      try {
        rec.nmse = mse_lower_bound(model, bound_ens, *lb_matrix).value / cfg.k;
      } catch (const std::exception& e) {
        rec.status = std::string("failed: ") + e.what();
        rec.nmse = std::numeric_limits<double>::quiet_NaN();
      }
      run.records.push_back(std::move(rec));
    }
  }
  return run;
}

void write_results_csv(std::ostream& os, const ExperimentRun& run) {
  os << "design,sweep_var,value,nmse,nmse_db,stderr,status\n";
  const std::string var = to_string(run.config.sweep);
  for (const auto& r : run.records) {
    os << r.design << ',' << var << ',' << format_double(r.value) << ',';
    if (r.status == "ok") {
      os << format_double(r.nmse) << ',' << format_db(r.nmse) << ',' << format_double(r.stderr_nmse);
    } else {
      os << "nan,nan,nan";
    }
    os << ',' << csv_safe(r.status) << '\n';
  }
}

void write_gnuplot(std::ostream& os, const ExperimentRun& run) {
  std::vector<std::string> order;
  for (const auto& r : run.records) {
    if (std::find(order.begin(), order.end(), r.design) == order.end()) order.push_back(r.design);
  }
  bool first = true;
  for (const auto& d : order) {
    if (!first) os << "\n\n";
    first = false;
    os << "# " << d << '\n' << "# " << to_string(run.config.sweep) << " nmse nmse_db stderr\n";
    for (const auto& r : run.records) {
      if (r.design != d || r.status != "ok") continue;
      os << format_double(r.value) << ' ' << format_double(r.nmse) << ' ' << format_db(r.nmse) << ' '
         << format_double(r.stderr_nmse) << '\n';
    }
  }
}

void emit_results(const ExperimentRun& run, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ParameterError("cannot create output directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  auto open = [&](const std::string& file) {
    std::ofstream f(base / file);
    if (!f) throw ParameterError("cannot write '" + (base / file).string() + "'");
    return f;
  };
  {
    auto f = open("results.csv");
    write_results_csv(f, run);
  }
  {
    auto f = open("config.snapshot");
    f << write_config(run.config);
  }
  {
    auto f = open(run.config.name + ".dat");
    write_gnuplot(f, run);
  }
  {
    auto f = open("timing.csv");
    f << "design,value,seconds\n";
    for (const auto& r : run.records) f << r.design << ',' << format_double(r.value) << ',' << r.seconds << '\n';
  }
}

}  // namespace csd
