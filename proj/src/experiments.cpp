#include "krono/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "krono/errors.hpp"
#include "krono/matrix_io.hpp"
#include "krono/rng.hpp"
#include "parallel.hpp"

namespace krono::experiments {

namespace {

using ensembles::KroneckerUnitary;
using ensembles::Projection;
using ensembles::ProjectionKind;
using ensembles::UnitaryMatrix;

constexpr double kAtomThreshold = 1e-6;

struct TrialSeeds {
  Seed trial;
  Seed unitary;
  Seed left;
  Seed right;
};

TrialSeeds seeds_for(const ExperimentConfig& config, std::size_t trial) {
  TrialSeeds s{};
  s.trial = rng::mix(config.master_seed, trial, rng::Stream::trial);
  s.unitary = rng::mix(s.trial, 0, rng::Stream::unitary);
  s.left = rng::mix(s.trial, 0, rng::Stream::left_frame);
  s.right = config.frame == FrameMode::shared ? s.left : rng::mix(s.trial, 0, rng::Stream::right_frame);
  return s;
}

struct Projections {
  Projection left;
  Projection right;
};

Projections build_projections(const ExperimentConfig& config, const TrialSeeds& seeds) {
  const Index n = config.dimension();
  const auto make = [&](ProjectionKind kind, double fraction, Seed seed) {
    return ensembles::make_projection(kind, n, fraction, seed, nullptr, config.dense_cap);
  };
  const bool one_frame = config.frame == FrameMode::shared && config.left_kind == ProjectionKind::haar_rotated &&
                         config.right_kind == ProjectionKind::haar_rotated;
  if (one_frame) {
    // One sampled frame serves both sides; the smaller rank takes its leading columns.
    const Index r1 = ensembles::rank_for_fraction(n, config.p);
    const Index r2 = ensembles::rank_for_fraction(n, config.q);
    if (r1 >= r2) {
      Projection left = make(config.left_kind, config.p, seeds.left);
      Projection right = left.truncated(r2);
      return {std::move(left), std::move(right)};
    }
    Projection right = make(config.right_kind, config.q, seeds.right);
    Projection left = right.truncated(r1);
    return {std::move(left), std::move(right)};
  }
  return {make(config.left_kind, config.p, seeds.left), make(config.right_kind, config.q, seeds.right)};
}

KroneckerUnitary build_kron(const ExperimentConfig& config, const TrialSeeds& seeds,
                            const std::optional<UnitaryMatrix>& v) {
  UnitaryMatrix u = ensembles::sample_haar(config.n, seeds.unitary);
  if (config.mode == Mode::theorem2) {
    return KroneckerUnitary::pair(std::move(u), v ? *v : config.v.materialize());
  }
  return KroneckerUnitary::power(std::move(u), config.k);
}

spectra::SpectrumMetadata metadata_for(const ExperimentConfig& config, const TrialSeeds& seeds) {
  spectra::SpectrumMetadata m;
  m.n = config.n;
  m.k = config.mode == Mode::theorem2 ? 1 : config.k;
  m.n2 = config.mode == Mode::theorem2 ? config.v.size : 0;
  m.p = config.p;
  m.q = config.q;
  m.left_projection = ensembles::to_string(config.left_kind);
  m.right_projection = ensembles::to_string(config.right_kind);
  m.unitary = config.mode == Mode::theorem2 ? "haar (x) " + config.v.describe() : fmt::format("haar^(x){}", config.k);
  m.seeds = {{"master", config.master_seed}, {"trial", seeds.trial}, {"unitary", seeds.unitary}};
  if (config.left_kind == ProjectionKind::haar_rotated) m.seeds.emplace_back("left_frame", seeds.left);
  if (config.right_kind == ProjectionKind::haar_rotated) m.seeds.emplace_back("right_frame", seeds.right);
  return m;
}

void check_config(const ExperimentConfig& config) {
  if (config.n < 2) throw DomainError(fmt::format("n must be at least 2, got {}", config.n));
  if (config.k < 1) throw DomainError(fmt::format("k must be at least 1, got {}", config.k));
  if (config.trials < 1) throw DomainError("trials must be at least 1");
  if (config.grid_points < 2) throw DomainError("the energy grid needs at least 2 points");
  if (config.mode == Mode::theorem2 && config.v.size < 1) throw DomainError("V must have size at least 1");
  theory::LawParams params(config.p, config.q);
  (void)params;
  const Index n = config.dimension();
  if (n > config.dense_cap) {
    throw CapExceeded(fmt::format("N = {} exceeds the dense cap {}", n, config.dense_cap));
  }
}

ensembles::CompressedEnsemble build_trial(const ExperimentConfig& config, const TrialSeeds& seeds,
                                          const std::optional<UnitaryMatrix>& v) {
  auto projections = build_projections(config, seeds);
  return ensembles::build_ensemble(projections.left, projections.right, build_kron(config, seeds, v),
                                   config.dense_cap);
}

Aggregate aggregate(const std::vector<TrialResult>& trials, double TrialResult::*field) {
  Aggregate a;
  double sum = 0.0;
  for (const auto& t : trials) {
    sum += t.*field;
    a.max = std::max(a.max, t.*field);
  }
  a.mean = sum / static_cast<double>(trials.size());
  return a;
}

DeviationReport run_impl(ExperimentConfig config, const std::atomic<bool>* cancel) {
  check_config(config);
  std::vector<std::string> warnings = config_warnings(config);
  const double eta = resolve_eta(config).eta;
  const theory::LawParams params(config.p, config.q);
  const std::vector<double> energies = energy_grid(params, config.kappa, config.grid_points);
  const std::optional<UnitaryMatrix> v =
      config.mode == Mode::theorem2 ? std::optional<UnitaryMatrix>(config.v.materialize()) : std::nullopt;

  std::vector<TrialResult> slots(config.trials);
  const auto done = detail::run_indexed(config.trials, resolve_threads(config.threads), cancel, [&](std::size_t t) {
    const auto start = std::chrono::steady_clock::now();
    const TrialSeeds seeds = seeds_for(config, t);
    const auto ensemble = build_trial(config, seeds, v);
    spectra::EigenOptions options;
    options.method = config.eigen_method;
    const auto spectrum = spectra::eigenvalues(ensemble, options, metadata_for(config, seeds));
    TrialResult r = evaluate_spectrum(spectrum, params, energies, eta, config.per_energy);
    r.trial = t;
    r.seed = seeds.trial;
    if (config.timing) {
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    slots[t] = std::move(r);
  });

  std::vector<TrialResult> finished;
  for (std::size_t t = 0; t < slots.size(); ++t) {
    if (done[t]) finished.push_back(std::move(slots[t]));
  }
  const bool interrupted = finished.size() < config.trials;
  if (finished.empty()) throw Interrupted("run cancelled before any trial finished");
  if (interrupted) {
    warnings.push_back(fmt::format("interrupted after {} of {} trials", finished.size(), config.trials));
  }
  auto report = DeviationReport::assemble(std::move(config), eta, energies, std::move(finished), std::move(warnings));
  report.interrupted = interrupted;
  return report;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::theorem1:
      return "theorem1";
    case Mode::theorem2:
      return "theorem2";
    case Mode::concentration:
      return "concentration";
    case Mode::convergence:
      return "convergence";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name) {
  if (name == "theorem1") return Mode::theorem1;
  if (name == "theorem2") return Mode::theorem2;
  if (name == "concentration") return Mode::concentration;
  if (name == "convergence") return Mode::convergence;
  throw DomainError(fmt::format("unknown mode '{}'", name));
}

VSpec VSpec::parse(const std::string& text, Index size) {
  VSpec v;
  v.size = size;
  if (text == "identity") {
    v.kind = Kind::identity;
  } else if (text == "dft") {
    v.kind = Kind::dft;
  } else if (text == "haar" || text.rfind("haar:", 0) == 0) {
    v.kind = Kind::haar_fixed;
    if (text.size() > 5) {
      try {
        std::size_t used = 0;
        v.seed = std::stoull(text.substr(5), &used);
        if (used != text.size() - 5) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw DomainError(fmt::format("bad seed in V spec '{}'", text));
      }
    }
  } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    v.kind = Kind::file;
    v.path = text.substr(5);
  } else {
    throw DomainError(fmt::format("unknown V spec '{}' (identity | dft | haar[:SEED] | file:PATH)", text));
  }
  return v;
}

std::string VSpec::describe() const {
  switch (kind) {
    case Kind::identity:
      return "identity";
    case Kind::dft:
      return "dft";
    case Kind::haar_fixed:
      return fmt::format("haar:{}", seed);
    case Kind::file:
      return "file:" + path;
  }
  return "unknown";
}

UnitaryMatrix VSpec::materialize() const {
  switch (kind) {
    case Kind::identity:
      return UnitaryMatrix::identity(size);
    case Kind::dft:
      return UnitaryMatrix::dft(size);
    case Kind::haar_fixed:
      return ensembles::sample_haar(size, seed);
    case Kind::file: {
      UnitaryMatrix u = io::load_unitary(path);
      if (u.dimension() != size) {
        throw DataError(fmt::format("V from '{}' has size {}, expected {}", path, u.dimension(), size));
      }
      return u;
    }
  }
  throw DomainError("unknown V kind");
}

std::string to_string(FrameMode frame) { return frame == FrameMode::shared ? "shared" : "independent"; }

FrameMode frame_from_string(const std::string& name) {
  if (name == "shared") return FrameMode::shared;
  if (name == "independent") return FrameMode::independent;
  throw DomainError(fmt::format("unknown frame mode '{}' (shared | independent)", name));
}

Index ExperimentConfig::dimension() const {
  if (mode == Mode::theorem2) return n * v.size;
  Index d = 1;
  for (int i = 0; i < k; ++i) {
    if (d > kDenseCapLimit * 1024 / std::max<Index>(n, 1)) {
      throw CapExceeded(fmt::format("n^k = {}^{} is far beyond any dense cap", n, k));
    }
    d *= n;
  }
  return d;
}

double ExperimentConfig::alpha() const {
  return mode == Mode::theorem2 ? 0.5 - 2.0 * schedule.beta : 0.5 - schedule.c0 - 2.0 * schedule.beta;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("KRONO_THREADS")) {
    char* end = nullptr;
    const unsigned long value = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double eta_schedule(double n, double s, double beta, double rho) {
  if (!(n >= 2.0)) throw DomainError(fmt::format("eta_schedule: n must be at least 2, got {}", n));
  if (!(s > 0.0 && beta > 0.0 && rho > 0.0)) {
    throw DomainError(fmt::format("eta_schedule: parameters must be positive (s={}, beta={}, rho={})", s, beta, rho));
  }
  return std::pow(rho, 0.25) * std::pow(std::log(n), 0.5 * s + 2.5) / std::pow(n, beta);
}

double eta_schedule_pair(double n1, double s, double beta, double rho) {
  if (!(n1 >= 2.0)) throw DomainError(fmt::format("eta_schedule_pair: n1 must be at least 2, got {}", n1));
  if (!(s > 0.0 && beta > 0.0 && rho > 0.0)) {
    throw DomainError(
        fmt::format("eta_schedule_pair: parameters must be positive (s={}, beta={}, rho={})", s, beta, rho));
  }
  return std::sqrt(rho) * std::pow(std::log(n1), 0.5 * s + 4.0) / std::pow(n1, beta);
}

ResolvedEta resolve_eta(const ExperimentConfig& config, std::vector<std::string>* warnings) {
  if (!(config.eta_ceiling > 0.0)) throw DomainError("eta ceiling must be positive");
  if (config.eta) {
    const double eta = *config.eta;
    if (!(eta > 0.0)) throw DomainError(fmt::format("eta must be positive, got {}", eta));
    if (eta > config.eta_ceiling) {
      throw DomainError(fmt::format("eta = {} exceeds the window ceiling {}", eta, config.eta_ceiling));
    }
    return {eta, eta, false};
  }
  const auto& s = config.schedule;
  const double n = static_cast<double>(config.n);
  const double formula = config.mode == Mode::theorem2 ? eta_schedule_pair(n, s.s, s.beta, s.rho)
                                                       : eta_schedule(n, s.s, s.beta, s.rho);
  if (formula > config.eta_ceiling) {
    if (warnings) {
      warnings->push_back(
          fmt::format("eta schedule gives {:.6g} above the ceiling {}; clamped", formula, config.eta_ceiling));
    }
    return {config.eta_ceiling, formula, true};
  }
  return {formula, formula, false};
}

std::vector<std::string> config_warnings(const ExperimentConfig& config) {
  std::vector<std::string> warnings;
  if (config.mode != Mode::theorem2) {
    // Some c0 < 1/2 with k <= c0 ln n exists iff k < ln(n) / 2.
    const double bound = 0.5 * std::log(static_cast<double>(config.n));
    if (!(static_cast<double>(config.k) < bound)) {
      warnings.push_back(fmt::format("hypothesis k ≤ c₀ log n violated (k = {}, n = {}, ln(n)/2 = {:.4f})", config.k,
                                     config.n, bound));
    }
  }
  resolve_eta(config, &warnings);
  return warnings;
}

std::vector<double> energy_grid(const theory::LawParams& params, double kappa, std::size_t points) {
  if (points < 2) throw DomainError("energy_grid: need at least 2 points");
  const theory::SpectralWindow window(params, kappa, 1e-300);
  std::vector<double> grid(points);
  const double lo = window.energy_min();
  const double hi = window.energy_max();
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  grid.back() = hi;
  return grid;
}

DeviationReport DeviationReport::assemble(ExperimentConfig config, double eta, std::vector<double> energies,
                                          std::vector<TrialResult> trials, std::vector<std::string> warnings) {
  if (trials.empty()) throw DomainError("a deviation report needs at least one trial");
  DeviationReport r;
  r.sup_m_dev = aggregate(trials, &TrialResult::sup_m_dev);
  r.sup_count_dev = aggregate(trials, &TrialResult::sup_count_dev);
  r.ks = aggregate(trials, &TrialResult::ks);
  r.atom0_err = aggregate(trials, &TrialResult::atom0_err);
  r.reference_bound = 1.0 / (std::pow(static_cast<double>(config.n), config.alpha()) * config.kappa * config.kappa);
  r.config = std::move(config);
  r.eta = eta;
  r.energies = std::move(energies);
  r.trials = std::move(trials);
  r.warnings = std::move(warnings);
  return r;
}

TrialResult evaluate_spectrum(const spectra::Spectrum& spectrum, const theory::LawParams& params,
                              std::span<const double> energies, double eta, bool keep_per_energy) {
  TrialResult r;
  for (double e : energies) {
    const Complex z(e, eta);
    const double m_dev = std::abs(spectra::empirical_stieltjes(spectrum, z).value - theory::stieltjes_mM(params, z));
    const double c_dev = std::abs(spectra::counting_density(spectrum, e, eta) - theory::density(params, e));
    r.sup_m_dev = std::max(r.sup_m_dev, m_dev);
    r.sup_count_dev = std::max(r.sup_count_dev, c_dev);
    if (keep_per_energy) {
      r.m_dev.push_back(m_dev);
      r.count_dev.push_back(c_dev);
    }
  }
  r.ks = spectra::ks_distance(spectrum, params);
  const auto& v = spectrum.values();
  const auto below = std::lower_bound(v.begin(), v.end(), kAtomThreshold) - v.begin();
  r.atom0_err = std::abs(static_cast<double>(below) / static_cast<double>(v.size()) - theory::atom_masses(params).at_zero);
  return r;
}

ensembles::CompressedEnsemble trial_ensemble(const ExperimentConfig& config, std::size_t trial) {
  check_config(config);
  return build_trial(config, seeds_for(config, trial), std::nullopt);
}

spectra::Spectrum trial_spectrum(const ExperimentConfig& config, std::size_t trial) {
  check_config(config);
  const TrialSeeds seeds = seeds_for(config, trial);
  spectra::EigenOptions options;
  options.method = config.eigen_method;
  return spectra::eigenvalues(build_trial(config, seeds, std::nullopt), options, metadata_for(config, seeds));
}

DeviationReport run_theorem1(const ExperimentConfig& config, const std::atomic<bool>* cancel) {
  ExperimentConfig c = config;
  c.mode = Mode::theorem1;
  return run_impl(std::move(c), cancel);
}

DeviationReport run_theorem2(const ExperimentConfig& config, const std::atomic<bool>* cancel) {
  ExperimentConfig c = config;
  c.mode = Mode::theorem2;
  c.k = 1;
  return run_impl(std::move(c), cancel);
}

DeviationReport run_verification(const ExperimentConfig& config, const std::atomic<bool>* cancel) {
  return config.mode == Mode::theorem2 ? run_theorem2(config, cancel) : run_theorem1(config, cancel);
}

SlopeFit fit_log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("fit_log_log_slope: x and y differ in length");
  if (x.size() < 3) throw DomainError(fmt::format("fit_log_log_slope: need at least 3 points, got {}", x.size()));
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("fit_log_log_slope: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double m = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_log_log_slope: x values are all equal");
  SlopeFit fit;
  fit.points = lx.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ssr += e * e;
  }
  fit.slope_stderr = std::sqrt(ssr / (m - 2.0) / sxx);
  return fit;
}

ConvergenceReport summarize_sweep(std::vector<DeviationReport> reports) {
  if (reports.size() < 3) {
    throw DomainError(fmt::format("convergence sweep needs at least 3 sizes, got {}", reports.size()));
  }
  std::stable_sort(reports.begin(), reports.end(), [](const DeviationReport& a, const DeviationReport& b) {
    return a.config.dimension() < b.config.dimension();
  });
  ConvergenceReport out;
  std::vector<double> dims;
  std::vector<double> m_devs;
  std::vector<double> c_devs;
  for (const auto& r : reports) {
    SweepPoint pt;
    pt.n = r.config.n;
    pt.k = r.config.k;
    pt.dimension = r.config.dimension();
    pt.mean_sup_m_dev = r.sup_m_dev.mean;
    pt.mean_sup_count_dev = r.sup_count_dev.mean;
    out.points.push_back(pt);
    dims.push_back(static_cast<double>(pt.dimension));
    m_devs.push_back(pt.mean_sup_m_dev);
    c_devs.push_back(pt.mean_sup_count_dev);
  }
  out.m_fit = fit_log_log_slope(dims, m_devs);
  out.count_fit = fit_log_log_slope(dims, c_devs);
  out.reports = std::move(reports);
  return out;
}

ConvergenceReport convergence_sweep(const std::vector<ExperimentConfig>& configs, const std::atomic<bool>* cancel) {
  if (configs.size() < 3) {
    throw DomainError(fmt::format("convergence sweep needs at least 3 sizes, got {}", configs.size()));
  }
  std::vector<DeviationReport> reports;
  for (const auto& c : configs) {
    if (cancel && cancel->load()) throw Interrupted("convergence sweep cancelled");
    reports.push_back(run_verification(c, cancel));
  }
  return summarize_sweep(std::move(reports));
}

}  // namespace krono::experiments
