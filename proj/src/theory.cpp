#include "krono/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "krono/errors.hpp"

namespace krono::theory {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

void require_upper_half_plane(Complex z, const char* where) {
  if (!(z.imag() > 0.0)) {
    throw DomainError(fmt::format("{}: requires Im z > 0, got {}{:+}i", where, z.real(), z.imag()));
  }
}

template <class F>
double gauss_kronrod(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 8, 1e-12);
}

}  // namespace

LawParams::LawParams(double p, double q) : p_(p), q_(q) {
  if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0)) {
    throw DomainError(fmt::format("LawParams: need 0 < p, q < 1, got p = {}, q = {}", p, q));
  }
}

SpectralWindow::SpectralWindow(LawParams params, double kappa, double eta_floor, double eta_ceiling)
    : params_(params), kappa_(kappa), eta_floor_(eta_floor), eta_ceiling_(eta_ceiling) {
  if (!(kappa > 0.0)) throw DomainError(fmt::format("SpectralWindow: kappa must be > 0, got {}", kappa));
  if (!(eta_floor > 0.0) || !(eta_floor <= eta_ceiling)) {
    throw DomainError(
        fmt::format("SpectralWindow: need 0 < eta_floor <= eta_ceiling, got {} and {}", eta_floor, eta_ceiling));
  }
  const auto edges = support_edges(params);
  energy_min_ = edges.lambda_minus + kappa;
  energy_max_ = edges.lambda_plus - kappa;
  if (!(energy_min_ < energy_max_)) {
    throw DomainError(fmt::format("SpectralWindow: kappa = {} leaves an empty window inside [{}, {}]", kappa,
                                  edges.lambda_minus, edges.lambda_plus));
  }
}

bool SpectralWindow::contains(Complex z) const {
  return z.real() >= energy_min_ && z.real() <= energy_max_ && z.imag() >= eta_floor_ &&
         z.imag() <= eta_ceiling_;
}

SupportEdges support_edges(const LawParams& params) {
  const double p = params.p();
  const double q = params.q();
  const double center = p + q - 2.0 * p * q;
  const double half_width = std::sqrt(4.0 * p * q * (1.0 - p) * (1.0 - q));
  // Clamp roundoff: the exact roots always lie in [0, 1].
  return {std::clamp(center - half_width, 0.0, 1.0), std::clamp(center + half_width, 0.0, 1.0)};
}

AtomMasses atom_masses(const LawParams& params) {
  const double p = params.p();
  const double q = params.q();
  return {1.0 - std::min(p, q), std::max(p + q - 1.0, 0.0)};
}

double density(const LawParams& params, double x) {
  const auto [lo, hi] = support_edges(params);
  if (!(x > lo && x < hi)) return 0.0;
  if (x == 0.0 || x == 1.0) {
    throw DomainError(fmt::format("density: x = {} is a pole inside the open support", x));
  }
  return std::sqrt((hi - x) * (x - lo)) / (2.0 * std::numbers::pi * x * (1.0 - x));
}

Complex stieltjes_mM(const LawParams& params, Complex z) {
  require_upper_half_plane(z, "stieltjes_mM");
  const auto [lo, hi] = support_edges(params);
  const double p = params.p();
  const double q = params.q();
  // sqrt(z - l-) sqrt(z - l+) is analytic off [l-, l+] and behaves like z at infinity.
  const Complex root = std::sqrt(z - lo) * std::sqrt(z - hi);
  const Complex denominator = 2.0 * z * (1.0 - z);
  const Complex analytic = (z + (p + q - 2.0) + root) / denominator;
  if (analytic.imag() > 0.0) return analytic;
  const Complex other = (z + (p + q - 2.0) - root) / denominator;
  if (other.imag() > 0.0) return other;
  throw NumericalFailure(
      fmt::format("stieltjes_mM: neither branch is Herglotz at z = {}{:+}i", z.real(), z.imag()));
}

LawEvaluation evaluate_density(const LawParams& params, double x) {
  const auto atoms = atom_masses(params);
  return {Complex(x, 0.0), Complex(density(params, x), 0.0), atoms.at_zero, atoms.at_one};
}

LawEvaluation evaluate_transform(const LawParams& params, Complex z) {
  const auto atoms = atom_masses(params);
  return {z, stieltjes_mM(params, z), atoms.at_zero, atoms.at_one};
}

Complex fixed_point_residual(Complex m, Complex z, const LawParams& params, Complex lambda) {
  if (std::abs(z) < kTiny) throw PoleError("fixed_point_residual: z = 0");
  if (std::abs(z - 1.0) < kTiny) throw PoleError("fixed_point_residual: z = 1");
  if (std::abs(m) < kTiny) throw PoleError("fixed_point_residual: m = 0");
  const double p = params.p();
  const double q = params.q();
  const Complex inner = z - (1.0 + (1.0 - p) / (z * m));
  if (std::abs(inner) < kTiny) throw PoleError("fixed_point_residual: z - (1 + (1-p)/(z m)) = 0");
  return m - (-(1.0 - q) / z - q / inner + lambda);
}

std::pair<Complex, Complex> perturbed_roots(Complex z, const LawParams& params, Complex lambda) {
  if (std::abs(z) < kTiny || std::abs(z - 1.0) < kTiny) {
    throw PoleError(fmt::format("perturbed_roots: pole at z = {}{:+}i", z.real(), z.imag()));
  }
  const double p = params.p();
  const double q = params.q();
  // Multiplying through by (z m (z-1) - (1-p)) gives a m^2 + b m + c = 0.
  const Complex shift = (1.0 - q) / z - lambda;
  const Complex a = z * (z - 1.0);
  const Complex b = shift * a + q * z - (1.0 - p);
  const Complex c = -shift * (1.0 - p);
  Complex root = std::sqrt(b * b - 4.0 * a * c);
  if ((std::conj(b) * root).real() < 0.0) root = -root;
  const Complex t = -0.5 * (b + root);
  const Complex first = t / a;
  const Complex second = std::abs(t) > kTiny ? c / t : -b / a - first;
  return {first, second};
}

Complex solve_perturbed(Complex z, const LawParams& params, Complex lambda) {
  require_upper_half_plane(z, "solve_perturbed");
  const auto [first, second] = perturbed_roots(z, params, lambda);
  // The branch is fixed by continuity from Lambda = 0, where it must be m_M.
  const Complex reference = stieltjes_mM(params, z);
  return std::abs(first - reference) <= std::abs(second - reference) ? first : second;
}

double invert_to_density(const LawParams& params, double x, double omega) {
  if (!(omega > 0.0)) throw DomainError(fmt::format("invert_to_density: omega must be > 0, got {}", omega));
  return stieltjes_mM(params, Complex(x, omega)).imag() / std::numbers::pi;
}

double integrate_density(const LawParams& params, double a, double b) {
  const auto [lo, hi] = support_edges(params);
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (!(b > a)) return 0.0;
  const double mid = 0.5 * (lo + hi);
  const double pi = std::numbers::pi;
  double total = 0.0;
  // x = lo + t^2 and x = hi - t^2 absorb the square-root edges.
  if (a < mid) {
    const auto left = [&](double t) {
      const double x = lo + t * t;
      return std::sqrt(std::max(hi - x, 0.0)) * t * t / (pi * x * (1.0 - x));
    };
    total += gauss_kronrod(left, std::sqrt(a - lo), std::sqrt(std::min(b, mid) - lo));
  }
  if (b > mid) {
    const auto right = [&](double t) {
      const double x = hi - t * t;
      return std::sqrt(std::max(x - lo, 0.0)) * t * t / (pi * x * (1.0 - x));
    };
    total += gauss_kronrod(right, std::sqrt(hi - b), std::sqrt(hi - std::max(a, mid)));
  }
  return total;
}

double law_cdf(const LawParams& params, double x) {
  if (x < 0.0) return 0.0;
  const auto atoms = atom_masses(params);
  const auto [lo, hi] = support_edges(params);
  double value = atoms.at_zero + integrate_density(params, lo, x);
  if (x >= 1.0) value += atoms.at_one;
  return std::min(value, 1.0);
}

double law_cdf_left(const LawParams& params, double x) {
  if (x <= 0.0) return 0.0;
  const auto atoms = atom_masses(params);
  const auto [lo, hi] = support_edges(params);
  double value = atoms.at_zero + integrate_density(params, lo, x);
  if (x > 1.0) value += atoms.at_one;
  return std::min(value, 1.0);
}

LowerBoundProbe law_lower_bound_probe(const SpectralWindow& window, std::size_t grid_size) {
  return law_lower_bound_probe(window, grid_size, grid_size);
}

LowerBoundProbe law_lower_bound_probe(const SpectralWindow& window, std::size_t energy_points,
                                      std::size_t eta_points) {
  if (energy_points < 2 || eta_points < 2) {
    throw DomainError("law_lower_bound_probe: grid needs at least 2 points per axis");
  }
  LowerBoundProbe probe{std::numeric_limits<double>::infinity(), 0.0};
  const double sqrt_kappa = std::sqrt(window.kappa());
  for (std::size_t i = 0; i < energy_points; ++i) {
    const double e = window.energy_min() +
                     (window.energy_max() - window.energy_min()) * static_cast<double>(i) /
                         static_cast<double>(energy_points - 1);
    for (std::size_t j = 0; j < eta_points; ++j) {
      const double eta = window.eta_floor() + (window.eta_ceiling() - window.eta_floor()) *
                                                  static_cast<double>(j) /
                                                  static_cast<double>(eta_points - 1);
      const Complex m = stieltjes_mM(window.params(), Complex(e, eta));
      probe.c_hat = std::min(probe.c_hat, m.imag() / sqrt_kappa);
      probe.C_hat = std::max(probe.C_hat, std::abs(m));
    }
  }
  return probe;
}

}  // namespace krono::theory
