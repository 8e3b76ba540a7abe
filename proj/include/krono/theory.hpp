#pragma once

#include <cstddef>
#include <utility>

#include "krono/types.hpp"

// Closed-form MANOVA limit law for two compressions of ranks p*N and q*N:
//
//   f(x) dx = (1 - min(p,q)) delta_0 + max(p+q-1, 0) delta_1
//             + sqrt((l+ - x)(x - l-)) / (2 pi x (1-x)) 1_[l-, l+](x) dx,
//   l+- = p + q - 2pq +- sqrt(4pq(1-p)(1-q)).
//
// All functions are pure and thread safe.
namespace krono::theory {

class LawParams {
 public:
  // Throws DomainError unless 0 < p < 1 and 0 < q < 1.
  LawParams(double p, double q);

  double p() const { return p_; }
  double q() const { return q_; }

  friend bool operator==(const LawParams&, const LawParams&) = default;

 private:
  double p_;
  double q_;
};

struct SupportEdges {
  double lambda_minus;
  double lambda_plus;
};

struct AtomMasses {
  double at_zero;
  double at_one;
  double continuous() const { return 1.0 - at_zero - at_one; }
};

// Evaluation region {E + i eta0 : E in [l- + kappa, l+ - kappa], eta_floor <= eta0 <= eta_ceiling}.
class SpectralWindow {
 public:
  SpectralWindow(LawParams params, double kappa, double eta_floor, double eta_ceiling = 0.5);

  const LawParams& params() const { return params_; }
  double kappa() const { return kappa_; }
  double eta_floor() const { return eta_floor_; }
  double eta_ceiling() const { return eta_ceiling_; }
  double energy_min() const { return energy_min_; }
  double energy_max() const { return energy_max_; }

  bool contains(Complex z) const;

 private:
  LawParams params_;
  double kappa_;
  double eta_floor_;
  double eta_ceiling_;
  double energy_min_;
  double energy_max_;
};

struct LawEvaluation {
  Complex point;
  Complex value;
  double atom_mass_zero;
  double atom_mass_one;
};

SupportEdges support_edges(const LawParams& params);
AtomMasses atom_masses(const LawParams& params);

// Absolutely continuous part only; 0 outside [l-, l+].
double density(const LawParams& params, double x);

// Herglotz Stieltjes transform of the full law (atoms included). Requires Im z > 0.
Complex stieltjes_mM(const LawParams& params, Complex z);

LawEvaluation evaluate_density(const LawParams& params, double x);
LawEvaluation evaluate_transform(const LawParams& params, Complex z);

// m - [ -(1-q)/z - q / (z - (1 + (1-p)/(z m))) + Lambda ]
Complex fixed_point_residual(Complex m, Complex z, const LawParams& params, Complex lambda);

// Root of the perturbed self-consistent equation continuing m_M away from Lambda = 0.
Complex solve_perturbed(Complex z, const LawParams& params, Complex lambda);

// Both roots of the quadratic obtained by clearing denominators in the
// perturbed equation, in no particular order.
std::pair<Complex, Complex> perturbed_roots(Complex z, const LawParams& params, Complex lambda);

// (1/pi) Im m_M(x + i omega).
double invert_to_density(const LawParams& params, double x, double omega);

// Integral of the continuous density over [a, b] by adaptive Gauss-Kronrod
// after substituting away the square-root edges.
double integrate_density(const LawParams& params, double a, double b);

// Right-continuous distribution function, atoms included.
double law_cdf(const LawParams& params, double x);
// Left limit F(x-).
double law_cdf_left(const LawParams& params, double x);

struct LowerBoundProbe {
  double c_hat;  // min over the grid of Im m_M / sqrt(kappa)
  double C_hat;  // max over the grid of |m_M|
};

LowerBoundProbe law_lower_bound_probe(const SpectralWindow& window, std::size_t grid_size);
LowerBoundProbe law_lower_bound_probe(const SpectralWindow& window, std::size_t energy_points,
                                      std::size_t eta_points);

}  // namespace krono::theory
