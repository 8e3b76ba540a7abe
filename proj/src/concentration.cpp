#include <cmath>

#include <fmt/format.h>

#include "krono/errors.hpp"
#include "krono/experiments.hpp"
#include "krono/rng.hpp"
#include "parallel.hpp"

namespace krono::experiments {

namespace {

struct DrawForms {
  std::vector<Complex> distinct;
  std::vector<Complex> repeated;
  double identity_defect = 0.0;
};

// Columns t_l of the top r1 rows of WW = W1* U W2 give P WW Q WW* P = sum_{l < r2} t_l t_l*.
// Everything lives on the range of P, so the r1 x r1 block suffices.
DrawForms forms_for_draw(const ExperimentConfig& config, Complex z, Seed draw_seed,
                         const std::vector<Index>& distinct, const std::vector<Index>& repeated) {
  const Index n = config.dimension();
  const Seed unitary_seed = rng::mix(draw_seed, 0, rng::Stream::unitary);
  const Seed left_seed = rng::mix(draw_seed, 0, rng::Stream::left_frame);
  const Seed right_seed =
      config.frame == FrameMode::shared ? left_seed : rng::mix(draw_seed, 0, rng::Stream::right_frame);

  auto u = ensembles::sample_haar(config.n, unitary_seed);
  auto kron = config.mode == Mode::theorem2 ? ensembles::KroneckerUnitary::pair(std::move(u), config.v.materialize())
                                            : ensembles::KroneckerUnitary::power(std::move(u), config.k);
  const auto pi1 = ensembles::make_projection(config.left_kind, n, config.p, left_seed, nullptr, config.dense_cap);
  const auto pi2 = ensembles::make_projection(config.right_kind, n, config.q, right_seed, nullptr, config.dense_cap);
  const auto reduced = ensembles::reduce_to_coordinate_frame(pi1, pi2, kron, config.dense_cap);

  const Index r1 = pi1.rank();
  const Index r2 = pi2.rank();
  const CMatrix t = reduced.apply_unitary(CMatrix::Identity(n, n)).topRows(r1);
  const CMatrix gram = t.leftCols(r2) * t.leftCols(r2).adjoint();

  CMatrix full = gram;
  full.diagonal().array() -= z;
  const Eigen::PartialPivLU<CMatrix> full_lu(full);

  DrawForms out;
  const auto form_at = [&](Index j) {
    const CVector tj = t.col(j);
    CMatrix shifted = gram - tj * tj.adjoint();
    shifted.diagonal().array() -= z;
    const Eigen::PartialPivLU<CMatrix> lu(shifted);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
      throw NumericalFailure(fmt::format("leave-one-out resolvent {} singular at z = {}+{}i (rcond {:.3e})", j,
                                         z.real(), z.imag(), rcond));
    }
    const Complex a = tj.dot(lu.solve(tj));
    // Rank-one identity: with b = t* R t for the full resolvent, a = b / (1 - b).
    const Complex b = tj.dot(full_lu.solve(tj));
    out.identity_defect = std::max(out.identity_defect, std::abs(a - b / (1.0 - b)));
    return a;
  };
  for (Index j : distinct) out.distinct.push_back(form_at(j));
  for (Index j : repeated) out.repeated.push_back(form_at(j));
  return out;
}

}  // namespace

ConcentrationReport concentration_probe(const ExperimentConfig& config, Complex z, std::size_t draws,
                                        Index max_dimension) {
  if (!(z.imag() >= 0.3)) throw DomainError(fmt::format("concentration_probe: needs Im z >= 0.3, got {}", z.imag()));
  if (draws < 2) throw DomainError("concentration_probe: needs at least 2 draws");
  const Index n = config.dimension();
  if (n > max_dimension) {
    throw CapExceeded(fmt::format("concentration_probe: N = {} exceeds the probe cap {}", n, max_dimension));
  }
  const theory::LawParams params(config.p, config.q);
  const Index r2 = ensembles::rank_for_fraction(n, config.q);
  (void)ensembles::rank_for_fraction(n, config.p);

  ConcentrationReport report;
  report.z = z;
  report.n = config.n;
  report.k = config.mode == Mode::theorem2 ? 1 : config.k;
  report.dimension = n;
  report.draws = draws;
  for (Index j = 0; j < r2; ++j) {
    const bool distinct = config.mode == Mode::theorem2 || ensembles::has_distinct_components(j, config.n, config.k);
    (distinct ? report.distinct_indices : report.repeated_indices).push_back(j);
  }
  if (report.distinct_indices.empty()) throw DomainError("concentration_probe: no distinct-tuple indices in range");

  std::vector<DrawForms> per_draw(draws);
  detail::run_indexed(draws, resolve_threads(config.threads), nullptr, [&](std::size_t d) {
    per_draw[d] = forms_for_draw(config, z, rng::mix(config.master_seed, d, rng::Stream::probe),
                                 report.distinct_indices, report.repeated_indices);
  });

  const std::size_t m = report.distinct_indices.size();
  Complex pooled = 0.0;
  std::vector<Complex> draw_means;
  for (auto& f : per_draw) {
    Complex s = 0.0;
    for (const Complex& v : f.distinct) s += v;
    draw_means.push_back(s / static_cast<double>(m));
    pooled += s;
    report.identity_defect = std::max(report.identity_defect, f.identity_defect);
    report.forms.push_back(std::move(f.distinct));
    report.repeated_forms.push_back(std::move(f.repeated));
  }
  report.d_hat = pooled / static_cast<double>(m * draws);

  for (const auto& forms : report.forms) {
    double worst = 0.0;
    for (const Complex& v : forms) worst = std::max(worst, std::abs(v - report.d_hat));
    report.delta_draws.push_back(worst);
  }
  double sum = 0.0;
  for (double d : report.delta_draws) sum += d;
  report.delta_hat = sum / static_cast<double>(draws);

  double var = 0.0;
  for (const Complex& mu : draw_means) var += std::norm(mu - report.d_hat);
  report.draw_mean_variance = var / static_cast<double>(draws - 1);

  const double dd = static_cast<double>(draws);
  for (std::size_t j = 0; j < m; ++j) {
    Complex mu = 0.0;
    for (const auto& forms : report.forms) mu += forms[j];
    mu /= dd;
    double ss = 0.0;
    for (const auto& forms : report.forms) ss += std::norm(forms[j] - mu);
    report.index_mean.push_back(mu);
    report.index_stderr.push_back(std::sqrt(ss / (dd - 1.0) / dd));
  }

  const Complex m_M = theory::stieltjes_mM(params, z);
  report.d_theory = -(1.0 / z) * (1.0 + (1.0 - config.p) / (z * m_M));
  return report;
}

}  // namespace krono::experiments
