#include "krono/linalg.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <fmt/format.h>

#include <algorithm>
#include <mutex>
#include <vector>

#include "krono/errors.hpp"

extern "C" void openblas_set_num_threads(int);

namespace krono::linalg {

namespace {

constexpr std::size_t kBlasPadding = 8;

lapack_complex_double* as_lapack(Complex* p) { return reinterpret_cast<lapack_complex_double*>(p); }

void check_info(lapack_int info, const char* routine) {
  if (info != 0) {
    throw NumericalFailure(fmt::format("{} failed with info = {}", routine, info));
  }
}

}  // namespace

void pin_blas_threads() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

RVector hermitian_eigenvalues(CMatrix a) {
  pin_blas_threads();
  if (a.rows() != a.cols()) throw DomainError("hermitian_eigenvalues: matrix is not square");
  const auto n = static_cast<lapack_int>(a.rows());
  RVector w(n);
  if (n == 0) return w;
  check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, as_lapack(a.data()), n, w.data()), "zheevd");
  return w;
}

EigenSystem hermitian_eigensystem(CMatrix a) {
  pin_blas_threads();
  if (a.rows() != a.cols()) throw DomainError("hermitian_eigensystem: matrix is not square");
  const auto n = static_cast<lapack_int>(a.rows());
  EigenSystem out{RVector(n), CMatrix()};
  if (n > 0) {
    check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, as_lapack(a.data()), n, out.values.data()),
               "zheevd");
  }
  out.vectors = std::move(a);
  return out;
}

ProbedEigenvalues hermitian_eigenvalues_probed(CMatrix a, std::vector<Index> probes) {
  pin_blas_threads();
  if (a.rows() != a.cols()) throw DomainError("hermitian_eigenvalues_probed: matrix is not square");
  const auto n = static_cast<lapack_int>(a.rows());
  ProbedEigenvalues out{RVector(n), std::move(probes), CMatrix()};
  for (Index p : out.probes) {
    if (p < 0 || p >= n) throw DomainError(fmt::format("probe index {} outside [0, {})", p, n));
  }
  if (n == 0) return out;
  if (n == 1) {
    out.values(0) = a(0, 0).real();
    out.vectors = CMatrix::Ones(1, static_cast<Index>(out.probes.size()));
    return out;
  }

  std::vector<double> d(static_cast<std::size_t>(n));
  std::vector<double> e(static_cast<std::size_t>(n - 1));
  // zhetrd uses tau as zhemv output; the OpenBLAS kernel reads a few entries past its end.
  std::vector<Complex> tau(static_cast<std::size_t>(n - 1) + kBlasPadding);
  check_info(LAPACKE_zhetrd(LAPACK_COL_MAJOR, 'L', n, as_lapack(a.data()), n, d.data(), e.data(),
                            as_lapack(tau.data())),
             "zhetrd");

  // Bisection in block order, as zstein expects.
  lapack_int found = 0;
  lapack_int nsplit = 0;
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<lapack_int> iblock(static_cast<std::size_t>(n));
  std::vector<lapack_int> isplit(static_cast<std::size_t>(n));
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  check_info(LAPACKE_dstebz('A', 'B', n, 0.0, 0.0, 0, 0, abstol, d.data(), e.data(), &found, &nsplit, w.data(),
                            iblock.data(), isplit.data()),
             "dstebz");
  if (found != n) throw NumericalFailure(fmt::format("dstebz found {} of {} eigenvalues", found, n));

  std::vector<lapack_int> order(static_cast<std::size_t>(n));
  for (lapack_int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](lapack_int x, lapack_int y) { return w[x] < w[y]; });
  for (lapack_int i = 0; i < n; ++i) out.values(i) = w[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];

  const auto m = static_cast<lapack_int>(out.probes.size());
  if (m == 0) return out;
  // zstein needs the selected values in their block order.
  std::vector<lapack_int> picked(static_cast<std::size_t>(m));
  for (lapack_int j = 0; j < m; ++j) picked[j] = order[static_cast<std::size_t>(out.probes[j])];
  std::vector<lapack_int> by_block(picked);
  std::sort(by_block.begin(), by_block.end());
  // LAPACKE_zstein NaN-checks n entries of w, not m.
  std::vector<double> w_sel(static_cast<std::size_t>(n));
  std::vector<lapack_int> block_sel(static_cast<std::size_t>(m));
  for (lapack_int j = 0; j < m; ++j) {
    w_sel[j] = w[by_block[j]];
    block_sel[j] = iblock[by_block[j]];
  }
  CMatrix z(n, m);
  std::vector<lapack_int> ifail(static_cast<std::size_t>(m));
  check_info(LAPACKE_zstein(LAPACK_COL_MAJOR, n, d.data(), e.data(), m, w_sel.data(), block_sel.data(),
                            isplit.data(), as_lapack(z.data()), n, ifail.data()),
             "zstein");
  check_info(LAPACKE_zunmtr(LAPACK_COL_MAJOR, 'L', 'L', 'N', n, m, as_lapack(a.data()), n, as_lapack(tau.data()),
                            as_lapack(z.data()), n),
             "zunmtr");

  out.vectors.resize(n, m);
  for (lapack_int j = 0; j < m; ++j) {
    const auto pos = std::find(by_block.begin(), by_block.end(), picked[j]) - by_block.begin();
    out.vectors.col(j) = z.col(pos);
  }
  return out;
}

CMatrix gram_lower(const CMatrix& g) {
  pin_blas_threads();
  const auto n = static_cast<blasint>(g.rows());
  const auto k = static_cast<blasint>(g.cols());
  CMatrix h = CMatrix::Zero(g.rows(), g.rows());
  if (n == 0) return h;
  if (k == 0) return h;
  cblas_zherk(CblasColMajor, CblasLower, CblasNoTrans, n, k, 1.0, g.data(), n, 0.0, h.data(), n);
  return h;
}

CMatrix thin_qr(CMatrix a, CVector& diag_r) {
  pin_blas_threads();
  const auto m = static_cast<lapack_int>(a.rows());
  const auto n = static_cast<lapack_int>(a.cols());
  if (m < n) throw DomainError("thin_qr: expects rows >= cols");
  diag_r.resize(n);
  if (n == 0) return a;
  std::vector<Complex> tau(static_cast<std::size_t>(n));
  check_info(LAPACKE_zgeqrf(LAPACK_COL_MAJOR, m, n, as_lapack(a.data()), m, as_lapack(tau.data())), "zgeqrf");
  for (lapack_int j = 0; j < n; ++j) diag_r(j) = a(j, j);
  check_info(LAPACKE_zungqr(LAPACK_COL_MAJOR, m, n, n, as_lapack(a.data()), m, as_lapack(tau.data())), "zungqr");
  return a;
}

double orthonormality_defect(const CMatrix& a) {
  if (a.cols() == 0) return 0.0;
  CMatrix gram = a.adjoint() * a;
  gram -= CMatrix::Identity(a.cols(), a.cols());
  return gram.cwiseAbs().maxCoeff();
}

}  // namespace krono::linalg
