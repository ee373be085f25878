#ifndef CSDESIGN_EXPERIMENTS_HPP
#define CSDESIGN_EXPERIMENTS_HPP

#include "csdesign/designer.hpp"
#include "csdesign/estimators.hpp"

#include <iosfwd>
#include <string>

namespace csd {

enum class EstimatorKind { Omp, RandomOmp, Lmmse, Oracle, Mmse };
std::string to_string(EstimatorKind e);
EstimatorKind parse_estimator(const std::string& name);

enum class SweepVariable { None, M, PowerDb, CsnrDb };
std::string to_string(SweepVariable s);
SweepVariable parse_sweep_variable(const std::string& name);

struct EnsembleSpec {
  bool sampled = false;
  int count = 0;
};
/// "full" or "sampled:<count>".
EnsembleSpec parse_ensemble(const std::string& text);
std::string to_string(const EnsembleSpec& e);

/// Everything a Monte Carlo sweep needs. P is given in dB (10 log10 P) and
/// the channel SNR g^2 / sigma_w^2 in dB; a CSNR sweep keeps sigma_w fixed
/// and sets g accordingly. H = I and L = N.
///
/// With empirical_rx the designs, power normalization and LMMSE decoder use
/// the sample second moment of rx_draws source draws instead of the exact
/// R_x. The exact R_x is nearly isotropic for weak correlation and its
/// eigenvectors are then dominated by edge effects, so rank-M truncation of
/// the relaxed optimum keeps a poor subspace. The sample estimate breaks
/// that near-degeneracy.
struct ExperimentConfig {
  std::string name = "sweep";
  int n = 36;
  int k = 3;
  int m = 18;
  double g = 0.5;
  double sigma_v = 0.0;
  double sigma_w = 0.1;
  double p_db = 10.0;
  double rho = 0.25;
  SweepVariable sweep = SweepVariable::None;
  std::vector<double> sweep_values;
  std::vector<DesignMethod> designs = {DesignMethod::LowerBound, DesignMethod::UpperBound, DesignMethod::Gaussian,
                                       DesignMethod::TightFrame};
  EstimatorKind estimator = EstimatorKind::RandomOmp;
  RandomOmpOptions romp;
  int trials = 500;
  std::uint64_t seed = 1;
  EnsembleSpec ensemble;
  int randomized_realizations = 1000;
  bool empirical_rx = false;
  int rx_draws = 100000;
  int sdr_max_iter = SdrOptions{}.max_iter;
  double sdr_tol = SdrOptions{}.tol;
  /// 0 picks std::thread::hardware_concurrency().
  int threads = 0;
  std::string output_dir = "results";
};

/// Help text listing every config key.
std::string config_keys_help();

/// Flat "key = value" text; '#' starts a comment. Unknown keys, bad values
/// and invariant violations throw ParameterError.
ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});
/// Applies one key; shared by the file parser and command-line overrides.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void validate(const ExperimentConfig& cfg);
/// Canonical key = value dump; parse_config(write_config(c)) reproduces c.
std::string write_config(const ExperimentConfig& cfg);

/// Canned configurations for the four figures ("fig2" ... "fig5").
ExperimentConfig figure_config(const std::string& figure);

/// Model at one sweep point; `rx` replaces the exact source covariance.
SystemModel model_at(const ExperimentConfig& cfg, double sweep_value, const Matrix* rx = nullptr);
/// The source covariance the config asks for: exact, or the sample second
/// moment drawn from a stream derived from the master seed.
Matrix config_source_covariance(const ExperimentConfig& cfg);

/// One (design, sweep point) cell.
struct PointResult {
  std::string design;  ///< design name, or "analytic-bound" for the lower-bound curve
  double value = 0.0;  ///< sweep-variable value
  double nmse = 0.0;   ///< linear
  double stderr_nmse = 0.0;
  std::string status = "ok";
  std::uint64_t seed = 0;  ///< stream seed of the design's randomness at this point
  double seconds = 0.0;    ///< wall clock, reported separately from the CSV
};

struct ExperimentRun {
  ExperimentConfig config;
  std::vector<PointResult> records;

  /// First record matching (design, value); nullptr if absent.
  const PointResult* find(const std::string& design, double value) const;
};

inline constexpr const char* kAnalyticBoundName = "analytic-bound";

/// Builds the designs at every sweep point, runs `trials` paired trials
/// (all designs see the same sources and noise), and records the analytic
/// bound of the lower-bound design divided by K. A design that throws
/// marks its point failed; the sweep continues.
ExperimentRun run_sweep(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Writes results.csv, config.snapshot, <name>.dat and timing.csv into dir.
void emit_results(const ExperimentRun& run, const std::string& dir);
/// The results.csv body (deterministic for a fixed config).
void write_results_csv(std::ostream& os, const ExperimentRun& run);
/// Gnuplot blocks: one per design, separated by two blank lines.
void write_gnuplot(std::ostream& os, const ExperimentRun& run);

}  // namespace csd

#endif  // CSDESIGN_EXPERIMENTS_HPP
