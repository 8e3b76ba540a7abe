#include "krono/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "krono/errors.hpp"

namespace krono::plot {

namespace {

double quantile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::vector<double> bulk_of(const spectra::Spectrum& spectrum) {
  std::vector<double> bulk;
  for (double v : spectrum.values()) {
    if (v > kAtomCut && v < 1.0 - kAtomCut) bulk.push_back(v);
  }
  return bulk;
}

}  // namespace

std::size_t freedman_diaconis_bins(std::span<const double> sorted_sample) {
  if (sorted_sample.empty()) return 0;
  if (sorted_sample.size() < 4) return 1;
  const double iqr = quantile(sorted_sample, 0.75) - quantile(sorted_sample, 0.25);
  const double range = sorted_sample.back() - sorted_sample.front();
  if (!(iqr > 0.0) || !(range > 0.0)) return 1;
  const double h = 2.0 * iqr / std::cbrt(static_cast<double>(sorted_sample.size()));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(range / h)), 1, 200);
}

Histogram bulk_histogram(const spectra::Spectrum& spectrum, std::optional<std::size_t> bins) {
  Histogram h;
  const auto bulk = bulk_of(spectrum);
  const std::size_t count = bins ? *bins : freedman_diaconis_bins(bulk);
  if (count == 0 || bulk.empty()) return h;
  const double lo = bulk.front();
  const double hi = bulk.back() > lo ? bulk.back() : lo + 1e-3;
  const double width = (hi - lo) / static_cast<double>(count);
  h.edges.resize(count + 1);
  for (std::size_t b = 0; b <= count; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges.back() = hi;
  std::vector<double> counts(count, 0.0);
  for (double v : bulk) {
    const auto b = std::min(static_cast<std::size_t>((v - lo) / width), count - 1);
    counts[b] += 1.0;
  }
  const double n = static_cast<double>(spectrum.size());
  for (double c : counts) {
    h.mass.push_back(c / n);
    h.density.push_back(c / (n * width));
  }
  return h;
}

double mean_relative_bin_error(const Histogram& histogram, const theory::LawParams& params) {
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t b = 0; b < histogram.mass.size(); ++b) {
    const double law = theory::integrate_density(params, histogram.edges[b], histogram.edges[b + 1]);
    if (!(law > 0.0)) continue;
    sum += std::abs(histogram.mass[b] - law) / law;
    ++used;
  }
  if (used == 0) throw DomainError("mean_relative_bin_error: no bins with positive law mass");
  return sum / static_cast<double>(used);
}

std::string spectrum_svg(const spectra::Spectrum& spectrum, const theory::LawParams& params,
                         const PlotOptions& options) {
  const double width = options.width;
  const double height = options.height;
  const double left = 60;
  const double right = 20;
  const double top = options.title.empty() ? 20 : 40;
  const double bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double x_lo = -0.02;
  const double x_hi = 1.02;

  const auto edges = theory::support_edges(params);
  const auto atoms = theory::atom_masses(params);
  const Histogram hist = bulk_histogram(spectrum, options.bins);

  // Law curve sampled inside the support; the integrable edge singularities are clipped by the axis.
  std::vector<std::pair<double, double>> curve;
  const int samples = 400;
  double curve_peak = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = edges.lambda_minus + (edges.lambda_plus - edges.lambda_minus) * i / samples;
    double f = 0.0;
    if (x > 0.0 && x < 1.0) f = theory::density(params, x);
    curve.emplace_back(x, f);
  }
  std::vector<double> interior;
  for (std::size_t i = samples / 10; i <= samples - samples / 10; ++i) interior.push_back(curve[i].second);
  curve_peak = *std::max_element(interior.begin(), interior.end());
  double bar_peak = hist.density.empty() ? 0.0 : *std::max_element(hist.density.begin(), hist.density.end());
  const double y_hi = 1.15 * std::max({curve_peak, bar_peak, 1e-3});

  const auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  const auto sy = [&](double y) { return top + plot_h - std::min(y, y_hi) / y_hi * plot_h; };

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      options.width, options.height);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", options.width, options.height);
  if (!options.title.empty()) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", width / 2,
                       escape(options.title));
  }
  svg += fmt::format("<defs><clipPath id=\"plot\"><rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\"/>"
                     "</clipPath></defs>\n",
                     left, top, plot_w, plot_h);

  // Axes and ticks.
  svg += fmt::format("<g stroke=\"black\" fill=\"none\"><line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" "
                     "y2=\"{1:.1f}\"/><line x1=\"{0:.1f}\" y1=\"{3:.1f}\" x2=\"{0:.1f}\" y2=\"{1:.1f}\"/></g>\n",
                     left, top + plot_h, left + plot_w, top);
  for (int i = 0; i <= 5; ++i) {
    const double x = 0.2 * i;
    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>"
                       "<text x=\"{0:.1f}\" y=\"{3:.1f}\" text-anchor=\"middle\">{4:.1f}</text>\n",
                       sx(x), top + plot_h, top + plot_h + 5, top + plot_h + 18, x);
    const double y = y_hi / 1.15 * i / 5;
    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>"
                       "<text x=\"{3:.1f}\" y=\"{4:.1f}\" text-anchor=\"end\">{5:.2f}</text>\n",
                       left - 5, sy(y), left, left - 8, sy(y) + 4, y);
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">eigenvalue</text>\n", left + plot_w / 2,
                     height - 12);

  // Histogram of the bulk.
  svg += "<g fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\" clip-path=\"url(#plot)\">\n";
  for (std::size_t b = 0; b < hist.density.size(); ++b) {
    const double x0 = sx(hist.edges[b]);
    const double x1 = sx(hist.edges[b + 1]);
    const double y = sy(hist.density[b]);
    svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\"/>\n", x0, y, x1 - x0,
                       top + plot_h - y);
  }
  svg += "</g>\n";

  // Limit density.
  svg += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" clip-path=\"url(#plot)\" points=\"";
  for (const auto& [x, f] : curve) svg += fmt::format("{:.2f},{:.2f} ", sx(x), sy(f));
  svg += "\"/>\n";

  // Support edges.
  for (double e : {edges.lambda_minus, edges.lambda_plus}) {
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.1f}\" x2=\"{0:.2f}\" y2=\"{2:.1f}\" stroke=\"#555\" "
                       "stroke-dasharray=\"4 3\"/>\n",
                       sx(e), top, top + plot_h);
  }

  // Atoms as stems, height proportional to mass on the full axis.
  std::size_t at_zero = 0;
  std::size_t at_one = 0;
  for (double v : spectrum.values()) {
    if (v <= kAtomCut) ++at_zero;
    if (v >= 1.0 - kAtomCut) ++at_one;
  }
  const double n = spectrum.empty() ? 1.0 : static_cast<double>(spectrum.size());
  const auto stem = [&](double x, double law_mass, double empirical_mass) {
    if (law_mass <= 0.0 && empirical_mass <= 0.0) return;
    const double y = top + plot_h - law_mass * plot_h;
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.1f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#2ca02c\" "
                       "stroke-width=\"2\"/><circle cx=\"{0:.2f}\" cy=\"{2:.2f}\" r=\"4\" fill=\"#2ca02c\"/>\n",
                       sx(x), top + plot_h, y);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" fill=\"#2ca02c\">atom {:.3f} "
                       "(empirical {:.3f})</text>\n",
                       std::clamp(sx(x), left + 70, left + plot_w - 70), y - 8, law_mass, empirical_mass);
  };
  stem(0.0, atoms.at_zero, spectrum.empty() ? 0.0 : static_cast<double>(at_zero) / n);
  stem(1.0, atoms.at_one, spectrum.empty() ? 0.0 : static_cast<double>(at_one) / n);

  svg += "</svg>\n";
  return svg;
}

void write_svg(const std::filesystem::path& path, const std::string& svg) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << svg;
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace krono::plot
