#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "krono/ensembles.hpp"
#include "krono/errors.hpp"
#include "krono/rng.hpp"
#include "krono/spectra.hpp"
#include "krono/theory.hpp"

using namespace krono;
using namespace krono::spectra;
namespace ens = krono::ensembles;

namespace {

ens::CompressedEnsemble haar_ensemble(Index n, int k, double p, double q, Seed seed,
                                      ens::ProjectionKind kind = ens::ProjectionKind::coordinate) {
  const auto kron = ens::KroneckerUnitary::power(ens::sample_haar(n, seed), k);
  const Index big = kron.dimension();
  return ens::build_ensemble(ens::make_projection(kind, big, p, seed + 1), ens::make_projection(kind, big, q, seed + 2),
                             kron);
}

// Quantile of the full law by bisection on the distribution function.
double law_quantile(const theory::LawParams& params, double u) {
  double lo = 0.0;
  double hi = 1.0;
  if (theory::law_cdf(params, 0.0) >= u) return 0.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (theory::law_cdf(params, mid) < u ? lo : hi) = mid;
  }
  return hi;
}

Spectrum quantile_spectrum(const theory::LawParams& params, std::size_t count) {
  std::vector<double> v;
  for (std::size_t i = 0; i < count; ++i) v.push_back(law_quantile(params, (i + 0.5) / count));
  return Spectrum::from_values(v);
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "krono_test_spectra";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Spectrum, SortsAndClamps) {
  const auto s = Spectrum::from_values({0.5, -1e-10, 1.0 + 5e-9, 0.25});
  EXPECT_EQ(s.values(), (std::vector<double>{0.0, 0.25, 0.5, 1.0}));
  EXPECT_THROW(Spectrum::from_values({0.5, -1e-6}), NumericalFailure);
  EXPECT_THROW(Spectrum::from_values({1.001}), NumericalFailure);
}

TEST(CountWindow, Examples) {
  const auto s = Spectrum::from_values({0.1, 0.5, 0.9});
  EXPECT_EQ(count_window(s, 0.5, 0.81), 3);
  EXPECT_EQ(count_window(s, 0.5, 0.2), 1);
  EXPECT_EQ(count_window(s, 2.0, 0.1), 0);
  EXPECT_EQ(count_window(Spectrum::from_values({0.25, 0.75}), 0.5, 0.5), 2);
}

TEST(CountWindow, AdditiveOverAdjacentWindows) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(500);
  for (auto& x : v) x = u(gen);
  const auto s = Spectrum::from_values(v);
  // Ties at shared endpoints have probability zero for continuous samples.
  for (double e : {0.2, 0.45, 0.7}) {
    const double eta = 0.1;
    const Index whole = count_window(s, e, 3 * eta);
    const Index parts = count_window(s, e - eta, eta) + count_window(s, e, eta) + count_window(s, e + eta, eta);
    EXPECT_EQ(whole, parts);
  }
}

TEST(CountingDensity, Examples) {
  EXPECT_DOUBLE_EQ(counting_density(Spectrum::from_values({0.5}), 0.5, 0.5), 2.0);
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  EXPECT_NEAR(counting_density(Spectrum::from_values(grid), 0.5, 0.1), 1.0, 0.02);
  EXPECT_EQ(counting_density(Spectrum::from_values({0.0, 0.1}), 0.8, 0.1), 0.0);
}

TEST(EmpiricalStieltjes, Examples) {
  const auto two = empirical_stieltjes(Spectrum::from_values({0.25, 0.75}), Complex(0.5, 0.5));
  EXPECT_LT(std::abs(two.value - Complex(0.0, 1.6)), 1e-12);
  EXPECT_LT(std::abs(empirical_stieltjes(Spectrum::from_values({0.0}), Complex(0.0, 1.0)).value - Complex(0.0, 1.0)),
            1e-15);
  const Complex far(0.0, 1e6);
  const auto big = empirical_stieltjes(Spectrum::from_values({0.1, 0.3, 0.9}), far);
  EXPECT_LT(std::abs(big.value + 1.0 / far), 1e-12);
}

TEST(EmpiricalStieltjes, RealAxisCollisionAndEmpty) {
  const auto s = Spectrum::from_values({0.2, 0.6});
  EXPECT_THROW(empirical_stieltjes(s, Complex(0.6, 0.0)), DomainError);
  EXPECT_NO_THROW(empirical_stieltjes(s, Complex(1.5, 0.0)));
  EXPECT_THROW(empirical_stieltjes(Spectrum{}, Complex(0.5, 1.0)), DomainError);
}

TEST(EmpiricalStieltjes, PositiveImaginaryPart) {
  const auto s = eigenvalues(haar_ensemble(8, 2, 0.4, 0.6, 11));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> re(-1.0, 2.0);
  std::uniform_real_distribution<double> im(1e-6, 2.0);
  for (int i = 0; i < 500; ++i) EXPECT_GT(empirical_stieltjes(s, Complex(re(gen), im(gen))).value.imag(), 0.0);
}

TEST(ResolventTrace, ZeroOperator) {
  const Index n = 6;
  const auto kron = ens::KroneckerUnitary::power(ens::UnitaryMatrix::identity(n), 1);
  CMatrix tail = CMatrix::Zero(n, 3);
  for (Index j = 0; j < 3; ++j) tail(3 + j, j) = 1.0;
  const auto e = ens::build_ensemble(ens::Projection::coordinate(n, 3), ens::Projection::from_basis(tail), kron);
  EXPECT_LT(std::abs(resolvent_trace_direct(e, Complex(0.0, 1.0)) - Complex(0.0, 1.0)), 1e-14);
}

TEST(ResolventTrace, FarField) {
  const Complex z(0.0, 1e4);
  EXPECT_LT(std::abs(resolvent_trace_direct(haar_ensemble(4, 2, 0.5, 0.5, 3), z) * z + 1.0), 1e-3);
}

TEST(ResolventTrace, AgreesWithEigenvalues) {
  const auto e16 = haar_ensemble(4, 2, 0.5, 0.5, 7);
  const Complex z(0.5, 0.3);
  EXPECT_LT(std::abs(resolvent_trace_direct(e16, z) - empirical_stieltjes(eigenvalues(e16), z).value), 1e-8);

  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> re(-0.5, 1.5);
  std::uniform_real_distribution<double> im(0.01, 1.0);
  for (auto [n, k] : {std::pair{16, 2}, {6, 3}, {200, 1}}) {
    const auto e = haar_ensemble(n, k, 0.3, 0.6, 1000 + n, ens::ProjectionKind::haar_rotated);
    const auto s = eigenvalues(e);
    for (int i = 0; i < 20; ++i) {
      const Complex w(re(gen), im(gen));
      EXPECT_LT(std::abs(resolvent_trace_direct(e, w) - empirical_stieltjes(s, w).value), 1e-8) << n << " " << w;
    }
  }
}

TEST(Eigenvalues, ProjectorSpectrum) {
  const auto kron = ens::KroneckerUnitary::power(ens::UnitaryMatrix::identity(10), 1);
  for (auto method : {EigenMethod::gram, EigenMethod::dense}) {
    EigenOptions opts;
    opts.method = method;
    const auto s = eigenvalues(ens::build_ensemble(ens::Projection::coordinate(10, 4), ens::Projection::coordinate(10, 4), kron),
                               opts);
    ASSERT_EQ(s.size(), 10u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(s.values()[i], 0.0, 1e-14);
    for (std::size_t i = 6; i < 10; ++i) EXPECT_NEAR(s.values()[i], 1.0, 1e-14);
  }
}

TEST(Eigenvalues, RankOneLeftProjection) {
  const auto s = eigenvalues(haar_ensemble(5, 2, 1.0 / 25.0, 0.5, 4, ens::ProjectionKind::haar_rotated));
  EXPECT_EQ(std::count_if(s.values().begin(), s.values().end(), [](double x) { return x > 1e-12; }), 1);
}

TEST(Eigenvalues, GramMatchesDense) {
  for (auto kind : {ens::ProjectionKind::coordinate, ens::ProjectionKind::haar_rotated}) {
    for (auto [p, q] : {std::pair{0.5, 0.5}, {0.2, 0.7}, {0.8, 0.3}}) {
      const auto e = haar_ensemble(6, 2, p, q, 21, kind);
      EigenOptions dense;
      dense.method = EigenMethod::dense;
      EigenDiagnostics diag;
      const auto a = eigenvalues(e, {}, {}, &diag);
      const auto b = eigenvalues(e, dense);
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-10);
      EXPECT_LT(diag.trace_error, 1e-8);
      EXPECT_LT(diag.max_residual, 1e-8);
    }
  }
}

TEST(Eigenvalues, TraceIdentity) {
  const auto e = haar_ensemble(5, 3, 0.4, 0.4, 99, ens::ProjectionKind::haar_rotated);
  const auto s = eigenvalues(e);
  double sum = 0.0;
  for (double x : s.values()) sum += x;
  EXPECT_NEAR(sum, e.dense().trace().real(), 1e-8);
}

TEST(Eigenvalues, AtomFractionAtZero) {
  const auto s = eigenvalues(haar_ensemble(4, 2, 0.5, 0.5, 13));
  const auto zeros = std::count_if(s.values().begin(), s.values().end(), [](double x) { return x < 1e-6; });
  EXPECT_NEAR(static_cast<double>(zeros) / s.size(), 0.5, 2.0 / s.size());
}

TEST(Eigenvalues, DenseCapRespected) {
  const auto kron = ens::KroneckerUnitary::power(ens::sample_haar(3, 1), 2);
  const auto e = ens::build_ensemble(ens::Projection::coordinate(9, 4), ens::Projection::coordinate(9, 4), kron, 8);
  EigenOptions dense;
  dense.method = EigenMethod::dense;
  EXPECT_THROW(eigenvalues(e, dense), CapExceeded);
}

TEST(KsDistance, Examples) {
  const theory::LawParams half(0.5, 0.5);
  EXPECT_GE(ks_distance(Spectrum::from_values(std::vector<double>(20, 1.0)), half), 0.5);
  for (auto [p, q] : {std::pair{0.5, 0.5}, {0.3, 0.6}, {0.8, 0.7}}) {
    const theory::LawParams params(p, q);
    const std::size_t count = 400;
    EXPECT_LE(ks_distance(quantile_spectrum(params, count), params), 1.0 / count + 1e-9) << p << " " << q;
  }
}

TEST(KsDistance, SmallHaarDraw) {
  const theory::LawParams half(0.5, 0.5);
  double total = 0.0;
  for (Seed s = 0; s < 5; ++s) total += ks_distance(eigenvalues(haar_ensemble(64, 1, 0.5, 0.5, 40 + s)), half);
  EXPECT_LT(total / 5, 0.1);
}

TEST(KsStatistic, UniformSample) {
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100);
  EXPECT_NEAR(ks_statistic(grid, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.005, 1e-12);
  EXPECT_THROW(ks_statistic({}, [](double x) { return x; }), DomainError);
}

TEST(SpacingStats, RigidSpectrumHasUnitSpacings) {
  const theory::LawParams params(0.5, 0.5);
  const auto s = quantile_spectrum(params, 2000);
  const auto edges = theory::support_edges(params);
  const auto summary = spacing_stats(s, edges.lambda_minus + 0.1, edges.lambda_plus - 0.1,
                                     [&](double x) { return theory::density(params, x); });
  ASSERT_GE(summary.count, 10u);
  EXPECT_NEAR(summary.mean, 1.0, 0.05);
  for (double x : summary.spacings) EXPECT_NEAR(x, 1.0, 0.05);
}

TEST(SpacingStats, PoissonSpacingsAreExponential) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(2000);
  for (auto& x : v) x = u(gen);
  const auto summary = spacing_stats(Spectrum::from_values(v), 0.0, 1.0, [](double) { return 1.0; });
  EXPECT_NEAR(summary.mean, 1.0, 0.05);
  EXPECT_LT(ks_statistic(summary.spacings, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x); }), 0.1);
  double area = 0.0;
  for (std::size_t i = 0; i < summary.bin_density.size(); ++i)
    area += summary.bin_density[i] * (summary.bin_edges[i + 1] - summary.bin_edges[i]);
  EXPECT_NEAR(area, 1.0, 1e-12);
}

TEST(SpacingStats, TooFewEigenvalues) {
  EXPECT_THROW(spacing_stats(Spectrum::from_values({0.1, 0.2, 0.3}), 0.0, 1.0, [](double) { return 1.0; }),
               DomainError);
}

TEST(SpectrumFile, RoundTripWithSidecar) {
  SpectrumMetadata meta;
  meta.n = 4;
  meta.k = 2;
  meta.p = 0.5;
  meta.q = 0.25;
  meta.left_projection = "coordinate";
  meta.right_projection = "haar_rotated";
  meta.unitary = "haar";
  meta.seeds = {{"unitary", 123456789012345ull}, {"right", 7}};
  const auto s = Spectrum::from_values({0.0, 1.0 / 3.0, 0.123456789012345678, 1.0}, meta);
  const auto path = scratch("round.csv");
  write_spectrum(path, s);
  EXPECT_TRUE(std::filesystem::exists(sidecar_path(path)));
  const auto back = read_spectrum(path);
  EXPECT_EQ(back.values(), s.values());
  EXPECT_EQ(back.metadata().n, 4);
  EXPECT_EQ(back.metadata().k, 2);
  EXPECT_EQ(back.metadata().q, 0.25);
  EXPECT_EQ(back.metadata().right_projection, "haar_rotated");
  auto seeds = back.metadata().seeds;
  auto expected = meta.seeds;
  std::sort(seeds.begin(), seeds.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(seeds, expected);
}

TEST(SpectrumFile, CorruptInputReportsLine) {
  const auto path = scratch("corrupt.csv");
  std::filesystem::remove(sidecar_path(path));
  {
    std::ofstream out(path);
    out << "index,eigenvalue\n0,0.1\n1,abc\n";
  }
  try {
    read_spectrum(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_spectrum(scratch("missing.csv")), DataError);
}
