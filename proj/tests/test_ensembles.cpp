#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "krono/ensembles.hpp"
#include "krono/errors.hpp"
#include "krono/linalg.hpp"
#include "krono/rng.hpp"

using namespace krono;
using namespace krono::ensembles;

namespace {

CMatrix dense_kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

CMatrix dense_power(const CMatrix& u, int k) {
  CMatrix out = u;
  for (int i = 1; i < k; ++i) out = dense_kron(out, u);
  return out;
}

CMatrix random_matrix(Index rows, Index cols, Seed seed) {
  auto engine = rng::make_engine(seed);
  CMatrix x(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) x(i, j) = rng::complex_normal(engine);
  return x;
}

std::vector<double> sorted_eigenvalues(const CMatrix& c) {
  const RVector w = linalg::hermitian_eigenvalues(c);
  std::vector<double> v(w.data(), w.data() + w.size());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Rng, MixIsStableAndSeparatesStreams) {
  EXPECT_EQ(rng::mix(7, 3, rng::Stream::trial), rng::mix(7, 3, rng::Stream::trial));
  EXPECT_NE(rng::mix(7, 3, rng::Stream::trial), rng::mix(7, 3, rng::Stream::unitary));
  EXPECT_NE(rng::mix(7, 3, rng::Stream::trial), rng::mix(7, 4, rng::Stream::trial));
  EXPECT_NE(rng::mix(7, 3, rng::Stream::trial), rng::mix(8, 3, rng::Stream::trial));
}

TEST(Rng, ComplexNormalHasUnitVariance) {
  auto engine = rng::make_engine(1);
  double re2 = 0.0;
  double im2 = 0.0;
  Complex mean = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const Complex z = rng::complex_normal(engine);
    mean += z;
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
  }
  EXPECT_LT(std::abs(mean / double(draws)), 0.01);
  EXPECT_NEAR(re2 / draws, 0.5, 0.01);
  EXPECT_NEAR(im2 / draws, 0.5, 0.01);
}

TEST(UnitaryMatrix, HaarOfSizeOneIsUnimodular) {
  for (Seed s : {0ull, 1ull, 99ull}) EXPECT_NEAR(std::abs(sample_haar(1, s).matrix()(0, 0)), 1.0, 1e-14);
}

TEST(UnitaryMatrix, HaarIsUnitaryAndDeterministic) {
  const auto a = sample_haar(50, 17);
  const auto b = sample_haar(50, 17);
  EXPECT_LT(a.unitarity_defect(), 1e-12);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_EQ(a.seed(), std::optional<Seed>(17));
  EXPECT_GT((a.matrix() - sample_haar(50, 18).matrix()).norm(), 1.0);
  EXPECT_THROW(sample_haar(0, 1), DomainError);
}

TEST(UnitaryMatrix, LeadingColumnsAgreeWithFullSample) {
  const auto full = sample_haar(40, 5);
  const CMatrix cols = sample_haar_columns(40, 12, 5);
  EXPECT_LT((full.matrix().leftCols(12) - cols).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(sample_haar_columns(4, 5, 1), DomainError);
}

TEST(UnitaryMatrix, TraceMoments) {
  Complex mean = 0.0;
  double second = 0.0;
  const int draws = 2000;
  for (int s = 0; s < draws; ++s) {
    const Complex t = sample_haar(8, rng::mix(123, s, rng::Stream::unitary)).matrix().trace();
    mean += t;
    second += std::norm(t);
  }
  EXPECT_LT(std::abs(mean / double(draws)), 0.05);
  EXPECT_GE(second / draws, 0.9);
  EXPECT_LE(second / draws, 1.1);
}

TEST(UnitaryMatrix, FirstEntryFollowsBeta13) {
  std::vector<double> sample;
  for (int s = 0; s < 5000; ++s) sample.push_back(std::norm(sample_haar(4, rng::mix(77, s, rng::Stream::unitary)).matrix()(0, 0)));
  std::sort(sample.begin(), sample.end());
  double d = 0.0;
  const double n = static_cast<double>(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = 1.0 - std::pow(1.0 - sample[i], 3);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  EXPECT_LT(d, 0.05);
}

TEST(UnitaryMatrix, FromMatrixValidates) {
  CMatrix bad = CMatrix::Identity(3, 3);
  bad(0, 1) = 0.1;
  EXPECT_THROW(UnitaryMatrix::from_matrix(bad), DataError);
  EXPECT_THROW(UnitaryMatrix::from_matrix(CMatrix::Identity(3, 2)), DataError);
  EXPECT_NO_THROW(UnitaryMatrix::from_matrix(sample_haar(6, 2).matrix()));
}

TEST(UnitaryMatrix, DftIsUnitaryWithExpectedEntries) {
  const auto f = UnitaryMatrix::dft(32);
  EXPECT_LT(f.unitarity_defect(), 1e-13);
  EXPECT_NEAR(std::abs(f.matrix()(0, 0) - 1.0 / std::sqrt(32.0)), 0.0, 1e-15);
  const Complex expected = std::polar(1.0 / std::sqrt(32.0), -2.0 * M_PI * 3.0 * 5.0 / 32.0);
  EXPECT_LT(std::abs(f.matrix()(3, 5) - expected), 1e-14);
}

TEST(TupleIndex, ExamplesAndRoundTrip) {
  std::vector<Index> ones{1, 1, 1};
  EXPECT_EQ(tuple_to_flat(ones, 5), 0);
  std::vector<Index> last{5, 5, 5};
  EXPECT_EQ(tuple_to_flat(last, 5), 124);
  std::vector<Index> t{2, 3};
  EXPECT_EQ(tuple_to_flat(t, 4), 6);
  for (Index flat = 0; flat < 81; ++flat) {
    const auto tuple = flat_to_tuple(flat, 3, 4);
    EXPECT_EQ(tuple_to_flat(tuple, 3), flat);
  }
  std::vector<Index> bad{0, 1};
  EXPECT_THROW(tuple_to_flat(bad, 3), DomainError);
  std::vector<Index> big{1, 4};
  EXPECT_THROW(tuple_to_flat(big, 3), DomainError);
  EXPECT_THROW(flat_to_tuple(9, 3, 2), DomainError);
}

TEST(TupleIndex, DistinctComponents) {
  EXPECT_TRUE(has_distinct_components(tuple_to_flat(std::vector<Index>{1, 2, 3}, 3), 3, 3));
  EXPECT_FALSE(has_distinct_components(tuple_to_flat(std::vector<Index>{1, 2, 1}, 3), 3, 3));
  std::size_t distinct = 0;
  for (Index f = 0; f < 64; ++f) distinct += has_distinct_components(f, 4, 3);
  EXPECT_EQ(distinct, 24u);
}

TEST(Kronecker, IdentityFactorIsExactIdentity) {
  const auto kron = KroneckerUnitary::power(UnitaryMatrix::identity(3), 3);
  const CMatrix x = random_matrix(27, 2, 4);
  EXPECT_EQ(kron.apply(x), x);
  EXPECT_EQ(kron.apply(x, true), x);
}

TEST(Kronecker, MatchesDenseProductForSmallSizes) {
  for (auto [n, k] : {std::pair{2, 2}, {3, 2}, {3, 3}, {4, 2}, {2, 4}, {2, 8}, {4, 4}, {16, 2}}) {
    const auto u = sample_haar(n, 100 + n * 10 + k);
    const auto kron = KroneckerUnitary::power(u, k);
    const CMatrix dense = dense_power(u.matrix(), k);
    EXPECT_LT((kron.dense() - dense).cwiseAbs().maxCoeff(), 1e-12) << n << "^" << k;
    const CMatrix x = random_matrix(dense.rows(), 20, 3);
    EXPECT_LT((kron.apply(x) - dense * x).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((kron.apply(x, true) - dense.adjoint() * x).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Kronecker, CoordinateColumnIsKroneckerColumn) {
  const auto u = sample_haar(3, 8);
  const auto kron = KroneckerUnitary::power(u, 2);
  CVector e = CVector::Zero(9);
  e(0) = 1.0;
  const CVector col = kron_apply(kron, e);
  const CMatrix dense = dense_kron(u.matrix(), u.matrix());
  EXPECT_LT((col - dense.col(0)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((kron.columns(2, 5) - dense.middleCols(2, 5)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Kronecker, AdjointInvertsAndNormIsPreserved) {
  for (int n = 2; n <= 8; ++n) {
    for (int k = 1; k <= 4; ++k) {
      const auto kron = KroneckerUnitary::power(sample_haar(n, n * 7 + k), k);
      const CMatrix x = random_matrix(kron.dimension(), 1, n + k);
      const CMatrix y = kron.apply(x);
      EXPECT_NEAR(y.norm(), x.norm(), 1e-10 * x.norm());
      EXPECT_LT((kron.apply(y, true) - x).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Kronecker, PairMatchesDenseProduct) {
  const auto u = sample_haar(5, 1);
  const auto v = UnitaryMatrix::dft(3);
  const auto pair = KroneckerUnitary::pair(u, v);
  EXPECT_EQ(pair.dimension(), 15);
  EXPECT_TRUE(pair.is_pair());
  const CMatrix dense = dense_kron(u.matrix(), v.matrix());
  EXPECT_LT((pair.dense() - dense).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((pair.columns(0, 15) - dense).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Kronecker, RejectsBadShapes) {
  const auto kron = KroneckerUnitary::power(sample_haar(3, 1), 2);
  EXPECT_THROW(kron.apply(CMatrix::Zero(8, 1)), DomainError);
  EXPECT_THROW(KroneckerUnitary::power(sample_haar(3, 1), 0), DomainError);
  EXPECT_THROW(KroneckerUnitary::power(sample_haar(2, 1), 14).dense(), CapExceeded);
}

TEST(Projection, CoordinateRankRounding) {
  const auto pi = make_projection(ProjectionKind::coordinate, 8, 0.5, 0);
  EXPECT_EQ(pi.rank(), 4);
  EXPECT_EQ(std::vector<Index>(pi.mask().begin(), pi.mask().end()), (std::vector<Index>{0, 1, 2, 3}));
  EXPECT_EQ(rank_for_fraction(10, 0.26), 2);
  EXPECT_EQ(rank_for_fraction(100, 0.29), 29);
  EXPECT_THROW(rank_for_fraction(10, 0.05), DomainError);
  EXPECT_THROW(rank_for_fraction(10, 1.0), DomainError);
}

TEST(Projection, HaarRotatedIsOrthogonalProjection) {
  const auto pi = make_projection(ProjectionKind::haar_rotated, 16, 0.25, 42);
  const CMatrix d = pi.dense();
  EXPECT_LT((d * d - d).norm(), 1e-10);
  EXPECT_LT((d - d.adjoint()).norm(), 1e-10);
  EXPECT_NEAR(d.trace().real(), 4.0, 1e-10);
  const CMatrix rotation = *pi.rotation();
  CMatrix coordinate = CMatrix::Zero(16, 16);
  coordinate.topLeftCorner(4, 4).setIdentity();
  EXPECT_LT((rotation * coordinate * rotation.adjoint() - d).cwiseAbs().maxCoeff(), 1e-12);
  const auto small = pi.truncated(2);
  EXPECT_LT((small.basis() - pi.basis().leftCols(2)).norm(), 1e-15);
}

TEST(Projection, ExplicitBasisValidated) {
  CMatrix basis = sample_haar_columns(6, 2, 3);
  EXPECT_NO_THROW(Projection::from_basis(basis));
  basis(0, 0) += 0.01;
  EXPECT_THROW(Projection::from_basis(basis), DataError);
  EXPECT_THROW(make_projection(ProjectionKind::explicit_basis, 6, 0.5, 0), DomainError);
  const CMatrix wrong = sample_haar_columns(6, 2, 3);
  EXPECT_THROW(make_projection(ProjectionKind::explicit_basis, 6, 0.5, 0, &wrong), DataError);
}

TEST(Projection, KindNames) {
  EXPECT_EQ(projection_kind_from_string("coord"), ProjectionKind::coordinate);
  EXPECT_EQ(projection_kind_from_string("rotated"), ProjectionKind::haar_rotated);
  EXPECT_EQ(to_string(ProjectionKind::explicit_basis), "explicit_basis");
  EXPECT_THROW(projection_kind_from_string("diagonal"), DomainError);
}

TEST(Ensemble, CommutingCoordinateProjections) {
  const auto id = KroneckerUnitary::power(UnitaryMatrix::identity(8), 1);
  const auto c = build_ensemble(Projection::coordinate(8, 1), Projection::coordinate(8, 7), id).dense();
  const auto v = sorted_eigenvalues(c);
  EXPECT_NEAR(v.back(), 1.0, 1e-14);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) EXPECT_NEAR(v[i], 0.0, 1e-14);
  const auto same = build_ensemble(Projection::coordinate(8, 3), Projection::coordinate(8, 3), id).dense();
  const auto w = sorted_eigenvalues(same);
  EXPECT_EQ(std::count_if(w.begin(), w.end(), [](double x) { return std::abs(x - 1.0) < 1e-14; }), 3);
}

TEST(Ensemble, DenseMatchesMatrixFreeApply) {
  const auto kron = KroneckerUnitary::power(sample_haar(4, 3), 2);
  for (auto kind : {ProjectionKind::coordinate, ProjectionKind::haar_rotated}) {
    const auto e = build_ensemble(make_projection(kind, 16, 0.5, 1), make_projection(kind, 16, 0.5, 2), kron);
    const CMatrix d = e.dense();
    const CMatrix x = random_matrix(16, 20, 9);
    EXPECT_LT((d * x - e.apply(x)).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Ensemble, HermitianContractionOnProbes) {
  const auto kron = KroneckerUnitary::power(sample_haar(3, 4), 3);
  const auto e = build_ensemble(make_projection(ProjectionKind::haar_rotated, 27, 0.4, 5),
                                make_projection(ProjectionKind::coordinate, 27, 0.7, 0), kron);
  const CMatrix x = random_matrix(27, 100, 1);
  const CMatrix y = random_matrix(27, 100, 2);
  const CMatrix cx = e.apply(x);
  const CMatrix cy = e.apply(y);
  for (Index j = 0; j < 100; ++j) {
    const Complex xcy = x.col(j).dot(cy.col(j));
    const Complex ycx = y.col(j).dot(cx.col(j));
    EXPECT_LT(std::abs(xcy - std::conj(ycx)), 1e-10);
    const double q = x.col(j).dot(cx.col(j)).real();
    EXPECT_GE(q, -1e-12);
    EXPECT_LE(q, x.col(j).squaredNorm() + 1e-12);
  }
}

TEST(Ensemble, CompressedFactorReproducesOperator) {
  const auto kron = KroneckerUnitary::power(sample_haar(4, 12), 2);
  for (auto kind : {ProjectionKind::coordinate, ProjectionKind::haar_rotated}) {
    const auto pi1 = make_projection(kind, 16, 0.5, 3);
    const auto pi2 = make_projection(kind, 16, 0.25, 4);
    const auto e = build_ensemble(pi1, pi2, kron);
    const CMatrix g = e.compressed_factor();
    ASSERT_EQ(g.rows(), 8);
    ASSERT_EQ(g.cols(), 4);
    const CMatrix y1 = pi1.basis();
    EXPECT_LT((y1 * g * g.adjoint() * y1.adjoint() - e.dense()).cwiseAbs().maxCoeff(), 1e-12);
    const auto reduced = reduce_to_coordinate_frame(pi1, pi2, kron);
    const CMatrix gr = reduced.compressed_factor();
    const CMatrix cr = reduced.dense();
    EXPECT_LT((gr * gr.adjoint() - cr.topLeftCorner(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Ensemble, ReductionPreservesSpectrum) {
  for (Seed s = 0; s < 5; ++s) {
    const auto kron = KroneckerUnitary::power(sample_haar(4, 1000 + s), 2);
    const auto pi1 = make_projection(ProjectionKind::haar_rotated, 16, 0.5, 2000 + s);
    const auto pi2 = make_projection(ProjectionKind::haar_rotated, 16, 0.5, 3000 + s);
    const auto a = sorted_eigenvalues(build_ensemble(pi1, pi2, kron).dense());
    const auto b = sorted_eigenvalues(reduce_to_coordinate_frame(pi1, pi2, kron).dense());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10) << s;
  }
}

TEST(Ensemble, ReductionWithCoordinateFramesIsIdentical) {
  const auto kron = KroneckerUnitary::power(sample_haar(3, 1), 2);
  const auto pi1 = Projection::coordinate(9, 4);
  const auto pi2 = Projection::coordinate(9, 5);
  const CMatrix a = build_ensemble(pi1, pi2, kron).dense();
  const CMatrix b = reduce_to_coordinate_frame(pi1, pi2, kron).dense();
  EXPECT_EQ(a, b);
  EXPECT_THROW(reduce_to_coordinate_frame(Projection::from_basis(sample_haar_columns(9, 4, 1)), pi2, kron),
               DomainError);
}

TEST(Ensemble, RankOneLeftProjection) {
  const auto kron = KroneckerUnitary::power(sample_haar(4, 6), 2);
  const auto pi1 = make_projection(ProjectionKind::haar_rotated, 16, 1.0 / 16.0, 7);
  const auto pi2 = make_projection(ProjectionKind::haar_rotated, 16, 0.5, 8);
  for (const auto& e : {build_ensemble(pi1, pi2, kron), reduce_to_coordinate_frame(pi1, pi2, kron)}) {
    const auto v = sorted_eigenvalues(e.dense());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) EXPECT_NEAR(v[i], 0.0, 1e-12);
  }
}

TEST(Ensemble, IdentitySecondFactorIsBlockDiagonal) {
  const auto u = sample_haar(6, 31);
  const auto pair = KroneckerUnitary::pair(u, UnitaryMatrix::identity(3));
  const auto pi1 = Projection::coordinate(18, 9);
  const auto pi2 = Projection::coordinate(18, 6);
  const CMatrix c = build_ensemble(pi1, pi2, pair).dense();
  const CMatrix o = dense_kron(u.matrix(), CMatrix::Identity(3, 3));
  CMatrix p1 = CMatrix::Zero(18, 18);
  p1.topLeftCorner(9, 9).setIdentity();
  CMatrix p2 = CMatrix::Zero(18, 18);
  p2.topLeftCorner(6, 6).setIdentity();
  const auto direct = sorted_eigenvalues(p1 * o * p2 * o.adjoint() * p1);
  const auto built = sorted_eigenvalues(c);
  for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_NEAR(built[i], direct[i], 1e-10);
}

TEST(Ensemble, DimensionMismatchAndCap) {
  const auto kron = KroneckerUnitary::power(sample_haar(3, 1), 2);
  EXPECT_THROW(build_ensemble(Projection::coordinate(8, 4), Projection::coordinate(9, 4), kron), DomainError);
  const auto e = build_ensemble(Projection::coordinate(9, 4), Projection::coordinate(9, 4), kron, 8);
  EXPECT_THROW(e.dense(), CapExceeded);
}
