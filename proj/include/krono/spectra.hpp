#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "krono/ensembles.hpp"
#include "krono/theory.hpp"
#include "krono/types.hpp"

namespace krono::spectra {

struct SpectrumMetadata {
  Index n = 0;
  int k = 1;
  Index n2 = 0;  // size of the fixed second factor, 0 for tensor powers
  double p = 0.0;
  double q = 0.0;
  std::string left_projection;
  std::string right_projection;
  std::string unitary;
  std::vector<std::pair<std::string, Seed>> seeds;
};

// Sorted eigenvalues in [0, 1].
class Spectrum {
 public:
  Spectrum() = default;
  // Sorts, then clamps values within `tolerance` of [0, 1]. Larger excursions
  // throw NumericalFailure.
  static Spectrum from_values(std::vector<double> values, SpectrumMetadata metadata = {}, double tolerance = 1e-8);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const SpectrumMetadata& metadata() const { return metadata_; }

 private:
  std::vector<double> values_;
  SpectrumMetadata metadata_;
};

enum class EigenMethod {
  gram,   // eigenvalues of G G* for the compressed factor G, padded with zeros
  dense,  // full N x N materialization
};

struct EigenOptions {
  EigenMethod method = EigenMethod::gram;
  int residual_checks = 5;
  double residual_tolerance = 1e-8;
  double trace_tolerance = 1e-8;
  double hermitian_tolerance = 1e-10;
};

struct EigenDiagnostics {
  double trace_error = 0.0;
  double max_residual = 0.0;
  double hermitian_defect = 0.0;
};

// Full spectrum of the ensemble. Spot checks `residual_checks` eigenpairs with
// the matrix-free operator and the trace identity; failures throw NumericalFailure.
Spectrum eigenvalues(const ensembles::CompressedEnsemble& ensemble, const EigenOptions& options = {},
                     SpectrumMetadata metadata = {}, EigenDiagnostics* diagnostics = nullptr);

// Eigenvalues in the closed window [E - eta/2, E + eta/2].
Index count_window(const Spectrum& spectrum, double energy, double eta);

// count_window / (eta N)
double counting_density(const Spectrum& spectrum, double energy, double eta);

struct EmpiricalStieltjes {
  Complex z;
  Complex value;
};

// (1/N) sum 1 / (lambda_i - z).
EmpiricalStieltjes empirical_stieltjes(const Spectrum& spectrum, Complex z);

// (1/N) tr (C - z)^-1 from an LU factorization of the dense matrix.
Complex resolvent_trace_direct(const ensembles::CompressedEnsemble& ensemble, Complex z);

// One-sample Kolmogorov-Smirnov statistic against a continuous distribution function.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

// sup |F_N - F| over eigenvalues, their left limits and the atoms of the law.
double ks_distance(const Spectrum& spectrum, const theory::LawParams& params);

struct SpacingSummary {
  std::size_t count = 0;  // eigenvalues used
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> spacings;  // unfolded
  std::vector<double> bin_edges;
  std::vector<double> bin_density;  // normalized to unit area
};

// Spacings of eigenvalues inside [lo, hi], unfolded as (l_{i+1} - l_i) N f(l_i).
SpacingSummary spacing_stats(const Spectrum& spectrum, double lo, double hi,
                             const std::function<double(double)>& local_density, std::size_t bins = 40);
// Energy window of `window`, unfolded by the limit density.
SpacingSummary spacing_stats(const Spectrum& spectrum, const theory::SpectralWindow& window,
                             std::size_t bins = 40);

// CSV with columns index,eigenvalue and a JSON sidecar "<path>.meta.json".
void write_spectrum(const std::filesystem::path& csv_path, const Spectrum& spectrum);
// Reads the CSV, and the sidecar when present. Throws DataError with line numbers.
Spectrum read_spectrum(const std::filesystem::path& csv_path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace krono::spectra
