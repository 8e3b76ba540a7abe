#include "krono/spectra.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "krono/errors.hpp"
#include "krono/json_writer.hpp"
#include "krono/linalg.hpp"

namespace krono::spectra {

namespace {

constexpr double kAtomSnap = 1e-8;

std::vector<Index> spread_positions(Index count, int checks) {
  std::vector<Index> positions;
  if (count <= 0 || checks <= 0) return positions;
  const Index m = std::min<Index>(count, checks);
  for (Index i = 0; i < m; ++i) {
    positions.push_back(m == 1 ? count - 1 : (i * (count - 1)) / (m - 1));
  }
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  return positions;
}

// Eigenvalues of a Hermitian matrix plus eigenvectors at `positions`.
linalg::ProbedEigenvalues solve_probed(const std::function<CMatrix()>& build, const std::vector<Index>& positions) {
  try {
    return linalg::hermitian_eigenvalues_probed(build(), positions);
  } catch (const NumericalFailure&) {
    // Inverse iteration can miss vectors in tight clusters; the full solver cannot.
    CMatrix h = build();
    h.triangularView<Eigen::StrictlyUpper>() = h.adjoint().triangularView<Eigen::StrictlyUpper>();
    auto system = linalg::hermitian_eigensystem(std::move(h));
    linalg::ProbedEigenvalues out{system.values, positions, CMatrix(system.values.size(), positions.size())};
    for (std::size_t j = 0; j < positions.size(); ++j) out.vectors.col(j) = system.vectors.col(positions[j]);
    return out;
  }
}

double max_residual(const ensembles::CompressedEnsemble& ensemble, const CMatrix& vectors, const RVector& lambdas) {
  if (vectors.cols() == 0) return 0.0;
  const CMatrix image = ensemble.apply(vectors);
  double worst = 0.0;
  for (Index j = 0; j < vectors.cols(); ++j) {
    worst = std::max(worst, (image.col(j) - lambdas(j) * vectors.col(j)).norm());
  }
  return worst;
}

}  // namespace

Spectrum Spectrum::from_values(std::vector<double> values, SpectrumMetadata metadata, double tolerance) {
  for (double v : values) {
    if (!std::isfinite(v) || v < -tolerance || v > 1.0 + tolerance) {
      throw NumericalFailure(fmt::format("eigenvalue {:.17g} lies outside [0, 1] beyond tolerance {:.1e}", v, tolerance));
    }
  }
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  std::sort(values.begin(), values.end());
  Spectrum s;
  s.values_ = std::move(values);
  s.metadata_ = std::move(metadata);
  return s;
}

Spectrum eigenvalues(const ensembles::CompressedEnsemble& ensemble, const EigenOptions& options,
                     SpectrumMetadata metadata, EigenDiagnostics* diagnostics) {
  const Index n = ensemble.dimension();
  EigenDiagnostics diag;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));

  if (options.method == EigenMethod::gram) {
    const CMatrix g = ensemble.compressed_factor();
    const Index r1 = g.rows();
    const auto positions = spread_positions(r1, options.residual_checks);
    auto solved = solve_probed([&] { return linalg::gram_lower(g); }, positions);

    values.assign(static_cast<std::size_t>(n - r1), 0.0);
    for (Index i = 0; i < r1; ++i) values.push_back(solved.values(i));
    diag.trace_error = std::abs(solved.values.sum() - g.squaredNorm());

    RVector lambdas(static_cast<Index>(positions.size()));
    for (std::size_t j = 0; j < positions.size(); ++j) lambdas(static_cast<Index>(j)) = solved.values(positions[j]);
    diag.max_residual = max_residual(ensemble, ensemble.left_projection().embed(solved.vectors), lambdas);
  } else {
    const CMatrix c = ensemble.dense();
    diag.hermitian_defect = (c - c.adjoint()).cwiseAbs().maxCoeff();
    if (diag.hermitian_defect > options.hermitian_tolerance) {
      throw NumericalFailure(
          fmt::format("dense materialization is not Hermitian (defect {:.3e})", diag.hermitian_defect));
    }
    const auto positions = spread_positions(n, options.residual_checks);
    auto solved = solve_probed([&] { return c; }, positions);
    values.assign(solved.values.data(), solved.values.data() + n);
    diag.trace_error = std::abs(solved.values.sum() - c.trace().real());

    RVector lambdas(static_cast<Index>(positions.size()));
    for (std::size_t j = 0; j < positions.size(); ++j) lambdas(static_cast<Index>(j)) = solved.values(positions[j]);
    diag.max_residual = max_residual(ensemble, solved.vectors, lambdas);
  }

  if (diagnostics) *diagnostics = diag;
  if (!(diag.trace_error < options.trace_tolerance)) {
    throw NumericalFailure(fmt::format("trace identity violated by {:.3e}", diag.trace_error));
  }
  if (!(diag.max_residual <= options.residual_tolerance)) {
    throw NumericalFailure(fmt::format("eigenpair residual {:.3e} exceeds {:.1e}", diag.max_residual,
                                       options.residual_tolerance));
  }
  return Spectrum::from_values(std::move(values), std::move(metadata));
}

Index count_window(const Spectrum& spectrum, double energy, double eta) {
  if (!(eta > 0.0)) throw DomainError(fmt::format("count_window: eta must be positive, got {}", eta));
  const auto& v = spectrum.values();
  const auto lo = std::lower_bound(v.begin(), v.end(), energy - 0.5 * eta);
  const auto hi = std::upper_bound(lo, v.end(), energy + 0.5 * eta);
  return static_cast<Index>(hi - lo);
}

double counting_density(const Spectrum& spectrum, double energy, double eta) {
  if (spectrum.empty()) return 0.0;
  return static_cast<double>(count_window(spectrum, energy, eta)) / (eta * static_cast<double>(spectrum.size()));
}

EmpiricalStieltjes empirical_stieltjes(const Spectrum& spectrum, Complex z) {
  if (spectrum.empty()) throw DomainError("empirical_stieltjes: empty spectrum");
  Complex sum = 0.0;
  for (double lambda : spectrum.values()) {
    const Complex gap = lambda - z;
    if (z.imag() == 0.0 && std::abs(gap) < 1e-14) {
      throw DomainError(fmt::format("empirical_stieltjes: z = {} coincides with an eigenvalue", z.real()));
    }
    sum += 1.0 / gap;
  }
  return {z, sum / static_cast<double>(spectrum.size())};
}

Complex resolvent_trace_direct(const ensembles::CompressedEnsemble& ensemble, Complex z) {
  if (!(z.imag() > 0.0)) throw DomainError("resolvent_trace_direct: requires Im z > 0");
  CMatrix shifted = ensemble.dense();
  const Index n = shifted.rows();
  shifted.diagonal().array() -= z;
  Eigen::PartialPivLU<CMatrix> lu(shifted);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw NumericalFailure(fmt::format("resolvent at z = {}+{}i is singular (rcond {:.3e})", z.real(), z.imag(), rcond));
  }
  const CMatrix inverse = lu.solve(CMatrix::Identity(n, n));
  return inverse.trace() / static_cast<double>(n);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance(const Spectrum& spectrum, const theory::LawParams& params) {
  if (spectrum.empty()) throw DomainError("ks_distance: empty spectrum");
  std::vector<double> v = spectrum.values();
  for (double& x : v) {
    if (x < kAtomSnap) x = 0.0;
    if (x > 1.0 - kAtomSnap) x = 1.0;
  }
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  const auto check = [&](double x, double left, double right) {
    const auto below = std::lower_bound(v.begin(), v.end(), x) - v.begin();
    const auto upto = std::upper_bound(v.begin(), v.end(), x) - v.begin();
    d = std::max({d, std::abs(static_cast<double>(upto) / n - right), std::abs(static_cast<double>(below) / n - left)});
  };
  check(0.0, theory::law_cdf_left(params, 0.0), theory::law_cdf(params, 0.0));
  check(1.0, theory::law_cdf_left(params, 1.0), theory::law_cdf(params, 1.0));
  // The law is continuous on (0, 1); accumulate its distribution function over
  // consecutive distinct eigenvalues instead of integrating from the edge each time.
  double previous = 0.0;
  double cdf = theory::law_cdf(params, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && v[i] == v[i - 1]) continue;
    if (v[i] == 0.0 || v[i] == 1.0) continue;
    cdf += theory::integrate_density(params, previous, v[i]);
    previous = v[i];
    check(v[i], cdf, cdf);
  }
  return std::min(d, 1.0);
}

SpacingSummary spacing_stats(const Spectrum& spectrum, double lo, double hi,
                             const std::function<double(double)>& local_density, std::size_t bins) {
  if (bins == 0) throw DomainError("spacing_stats: need at least one bin");
  const auto& v = spectrum.values();
  const auto first = std::lower_bound(v.begin(), v.end(), lo);
  const auto last = std::upper_bound(first, v.end(), hi);
  const auto count = static_cast<std::size_t>(last - first);
  if (count < 10) {
    throw DomainError(fmt::format("spacing_stats: {} eigenvalues in [{}, {}], need at least 10", count, lo, hi));
  }
  SpacingSummary out;
  out.count = count;
  const double n = static_cast<double>(v.size());
  for (auto it = first; it + 1 != last; ++it) {
    out.spacings.push_back((*(it + 1) - *it) * n * local_density(*it));
  }
  const double m = static_cast<double>(out.spacings.size());
  out.mean = std::accumulate(out.spacings.begin(), out.spacings.end(), 0.0) / m;
  double ss = 0.0;
  for (double s : out.spacings) ss += (s - out.mean) * (s - out.mean);
  out.variance = out.spacings.size() > 1 ? ss / (m - 1.0) : 0.0;

  const double top = std::max(*std::max_element(out.spacings.begin(), out.spacings.end()), 1e-300);
  const double width = top / static_cast<double>(bins);
  out.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) out.bin_edges[b] = width * static_cast<double>(b);
  out.bin_density.assign(bins, 0.0);
  for (double s : out.spacings) {
    auto b = static_cast<std::size_t>(s / width);
    out.bin_density[std::min(b, bins - 1)] += 1.0;
  }
  for (double& h : out.bin_density) h /= m * width;
  return out;
}

SpacingSummary spacing_stats(const Spectrum& spectrum, const theory::SpectralWindow& window, std::size_t bins) {
  const auto params = window.params();
  return spacing_stats(
      spectrum, window.energy_min(), window.energy_max(),
      [params](double x) { return theory::density(params, x); }, bins);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p += ".meta.json";
  return p;
}

void write_spectrum(const std::filesystem::path& csv_path, const Spectrum& spectrum) {
  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", csv_path.string()));
  out << "index,eigenvalue\n";
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    out << i << ',' << io::format_double(spectrum.values()[i]) << '\n';
  }
  if (!out) throw DataError(fmt::format("write to '{}' failed", csv_path.string()));

  const auto& m = spectrum.metadata();
  nlohmann::json meta;
  meta["schema"] = "krono.spectrum/1";
  meta["N"] = spectrum.size();
  meta["n"] = m.n;
  meta["k"] = m.k;
  meta["n2"] = m.n2;
  meta["p"] = m.p;
  meta["q"] = m.q;
  meta["left_projection"] = m.left_projection;
  meta["right_projection"] = m.right_projection;
  meta["unitary"] = m.unitary;
  nlohmann::json seeds = nlohmann::json::object();
  for (const auto& [name, seed] : m.seeds) seeds[name] = seed;
  meta["seeds"] = seeds;
  io::write_json_file(sidecar_path(csv_path), meta);
}

Spectrum read_spectrum(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", csv_path.string()));
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError(fmt::format("{}:{}: expected 'index,eigenvalue'", csv_path.string(), line_no));
    }
    const char* begin = line.data() + comma + 1;
    const char* end = line.data() + line.size();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
      throw DataError(fmt::format("{}:{}: cannot parse eigenvalue '{}'", csv_path.string(), line_no,
                                  std::string(begin, end)));
    }
    values.push_back(value);
  }

  SpectrumMetadata meta;
  const auto side = sidecar_path(csv_path);
  if (std::filesystem::exists(side)) {
    const auto j = io::read_json_file(side);
    try {
      meta.n = j.value("n", Index{0});
      meta.k = j.value("k", 1);
      meta.n2 = j.value("n2", Index{0});
      meta.p = j.value("p", 0.0);
      meta.q = j.value("q", 0.0);
      meta.left_projection = j.value("left_projection", std::string{});
      meta.right_projection = j.value("right_projection", std::string{});
      meta.unitary = j.value("unitary", std::string{});
      if (j.contains("seeds")) {
        for (auto it = j["seeds"].begin(); it != j["seeds"].end(); ++it) {
          meta.seeds.emplace_back(it.key(), it.value().get<Seed>());
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt::format("{}: {}", side.string(), e.what()));
    }
  }
  try {
    return Spectrum::from_values(std::move(values), std::move(meta));
  } catch (const NumericalFailure& e) {
    throw DataError(fmt::format("{}: {}", csv_path.string(), e.what()));
  }
}

}  // namespace krono::spectra
