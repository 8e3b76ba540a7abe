#pragma once

#include <atomic>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "krono/ensembles.hpp"
#include "krono/spectra.hpp"
#include "krono/theory.hpp"
#include "krono/types.hpp"

namespace krono::experiments {

enum class Mode { theorem1, theorem2, concentration, convergence };
std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

// Fixed second factor V for the U (x) V model.
struct VSpec {
  enum class Kind { identity, dft, haar_fixed, file };
  Kind kind = Kind::identity;
  Index size = 1;
  Seed seed = 0;     // haar_fixed
  std::string path;  // file

  // "identity", "dft", "haar", "haar:SEED" or "file:PATH".
  static VSpec parse(const std::string& text, Index size);
  std::string describe() const;
  ensembles::UnitaryMatrix materialize() const;
};

// Both projections rotated by one Haar frame, or by independent frames.
enum class FrameMode { shared, independent };
std::string to_string(FrameMode frame);
FrameMode frame_from_string(const std::string& name);

struct EtaSchedule {
  double s = 1.0;
  double beta = 0.1;
  double rho = 1.0;
  double c0 = 0.25;
};

struct ExperimentConfig {
  Mode mode = Mode::theorem1;
  Index n = 64;  // factor size (n1 for theorem2)
  int k = 1;
  double p = 0.5;
  double q = 0.5;
  ensembles::ProjectionKind left_kind = ensembles::ProjectionKind::coordinate;
  ensembles::ProjectionKind right_kind = ensembles::ProjectionKind::coordinate;
  FrameMode frame = FrameMode::shared;
  VSpec v;
  std::optional<double> eta;  // direct override of the schedule
  EtaSchedule schedule;
  double kappa = 0.1;
  double eta_ceiling = 0.5;
  std::size_t grid_points = 201;
  std::size_t trials = 10;
  Seed master_seed = 0;
  unsigned threads = 0;  // 0: KRONO_THREADS, else hardware concurrency
  spectra::EigenMethod eigen_method = spectra::EigenMethod::gram;
  bool per_energy = false;  // keep per-E deviation arrays
  bool timing = false;      // record wall clock (breaks byte identity)
  Index dense_cap = kDenseCapLimit;

  // N = n^k, or n1 n2 for theorem2.
  Index dimension() const;
  // Exponent budget: 1/2 - c0 - 2 beta for theorem1, 1/2 - 2 beta for theorem2.
  double alpha() const;
};

// Threads to use: config value, else KRONO_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

// rho^(1/4) (ln n)^(s/2 + 5/2) / n^beta
double eta_schedule(double n, double s, double beta, double rho);
// sqrt(rho) (ln n1)^(s/2 + 4) / n1^beta
double eta_schedule_pair(double n1, double s, double beta, double rho);

struct ResolvedEta {
  double eta;
  double formula;  // schedule value before clamping, or the override
  bool clamped;
};
// Override when present, else the schedule for the mode, clamped to the ceiling.
ResolvedEta resolve_eta(const ExperimentConfig& config, std::vector<std::string>* warnings = nullptr);

// Warnings for the config: hypothesis flags and clamped schedules.
std::vector<std::string> config_warnings(const ExperimentConfig& config);

// Uniform grid on [l- + kappa, l+ - kappa]. DomainError when the window is empty.
std::vector<double> energy_grid(const theory::LawParams& params, double kappa, std::size_t points);

struct TrialResult {
  std::size_t trial = 0;
  Seed seed = 0;
  double sup_m_dev = 0.0;
  double sup_count_dev = 0.0;
  double ks = 0.0;
  double atom0_err = 0.0;
  double wall_ms = 0.0;
  std::vector<double> m_dev;      // per energy, when kept
  std::vector<double> count_dev;  // per energy, when kept
};

struct Aggregate {
  double mean = 0.0;
  double max = 0.0;
};

struct DeviationReport {
  ExperimentConfig config;
  double eta = 0.0;
  std::vector<double> energies;
  std::vector<TrialResult> trials;
  Aggregate sup_m_dev;
  Aggregate sup_count_dev;
  Aggregate ks;
  Aggregate atom0_err;
  double reference_bound = 0.0;  // 1 / (n^alpha kappa^2), constant taken as 1
  std::vector<std::string> warnings;
  bool interrupted = false;

  // Throws DomainError for an empty trial list.
  static DeviationReport assemble(ExperimentConfig config, double eta, std::vector<double> energies,
                                  std::vector<TrialResult> trials, std::vector<std::string> warnings);
};

// Statistics of one spectrum against the limit law.
TrialResult evaluate_spectrum(const spectra::Spectrum& spectrum, const theory::LawParams& params,
                              std::span<const double> energies, double eta, bool keep_per_energy);

// Spectrum of a single trial, with the same seeds a full run would use.
spectra::Spectrum trial_spectrum(const ExperimentConfig& config, std::size_t trial);

// Ensemble of a single trial (theorem1 or theorem2 per config.mode).
ensembles::CompressedEnsemble trial_ensemble(const ExperimentConfig& config, std::size_t trial);

// Setting *cancel stops scheduling new trials; the report then carries the
// finished ones and interrupted = true. Throws Interrupted if none finished.
DeviationReport run_theorem1(const ExperimentConfig& config, const std::atomic<bool>* cancel = nullptr);
DeviationReport run_theorem2(const ExperimentConfig& config, const std::atomic<bool>* cancel = nullptr);
// Dispatches on config.mode.
DeviationReport run_verification(const ExperimentConfig& config, const std::atomic<bool>* cancel = nullptr);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

// Least squares of log y on log x. At least 3 positive points.
SlopeFit fit_log_log_slope(std::span<const double> x, std::span<const double> y);

struct SweepPoint {
  Index n = 0;
  int k = 1;
  Index dimension = 0;
  double mean_sup_m_dev = 0.0;
  double mean_sup_count_dev = 0.0;
};

struct ConvergenceReport {
  std::vector<SweepPoint> points;
  std::vector<DeviationReport> reports;
  SlopeFit m_fit;
  SlopeFit count_fit;
};

// Fits the rate from already computed reports (sorted by N afterwards).
ConvergenceReport summarize_sweep(std::vector<DeviationReport> reports);
ConvergenceReport convergence_sweep(const std::vector<ExperimentConfig>& configs,
                                    const std::atomic<bool>* cancel = nullptr);

// Leave-one-out quadratic forms w_j* P R_j(z) P w_j of the reduced frame.
struct ConcentrationReport {
  Complex z;
  Index n = 0;
  int k = 1;
  Index dimension = 0;
  std::size_t draws = 0;
  std::vector<Index> distinct_indices;  // columns whose tuple has distinct components
  std::vector<Index> repeated_indices;
  std::vector<std::vector<Complex>> forms;  // [draw][position in distinct_indices]
  std::vector<std::vector<Complex>> repeated_forms;
  Complex d_hat;                     // pooled mean over draws and distinct indices
  std::vector<double> delta_draws;   // max_j |form_j - d_hat| per draw
  double delta_hat = 0.0;            // mean of delta_draws
  double draw_mean_variance = 0.0;   // variance across draws of the per-draw mean
  std::vector<Complex> index_mean;   // per distinct index, over draws
  std::vector<double> index_stderr;  // standard error of |.| of the per-index mean
  Complex d_theory;                  // -(1/z)(1 + (1-p)/(z m_M(z)))
  double identity_defect = 0.0;      // rank-one resolvent identity check
};

// Requires Im z >= 0.3 and N <= max_dimension.
ConcentrationReport concentration_probe(const ExperimentConfig& config, Complex z, std::size_t draws,
                                        Index max_dimension = 1024);

}  // namespace krono::experiments
