#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "krono/spectra.hpp"
#include "krono/theory.hpp"

namespace krono::plot {

inline constexpr double kAtomCut = 1e-6;

struct Histogram {
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // count / (N width), comparable with f_M
  std::vector<double> mass;     // count / N
};

// Freedman-Diaconis bin count, clamped to [1, 200]. 0 for an empty sample.
std::size_t freedman_diaconis_bins(std::span<const double> sorted_sample);

// Histogram of the bulk (eigenvalues strictly between the atom cuts), normalized by the full N.
Histogram bulk_histogram(const spectra::Spectrum& spectrum, std::optional<std::size_t> bins = std::nullopt);

// Mean over bins with positive law mass of |empirical - law| / law.
double mean_relative_bin_error(const Histogram& histogram, const theory::LawParams& params);

struct PlotOptions {
  std::optional<std::size_t> bins;
  int width = 800;
  int height = 480;
  std::string title;
};

std::string spectrum_svg(const spectra::Spectrum& spectrum, const theory::LawParams& params,
                         const PlotOptions& options = {});
void write_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace krono::plot
