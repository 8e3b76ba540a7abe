#pragma once

#include <vector>

#include "krono/rng.hpp"
#include "krono/types.hpp"

namespace krono::linalg {

// Thin wrappers over LAPACK for the dense kernels the ensembles need.

// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
RVector hermitian_eigenvalues(CMatrix a);

struct EigenSystem {
  RVector values;   // ascending
  CMatrix vectors;  // columns are orthonormal eigenvectors
};
EigenSystem hermitian_eigensystem(CMatrix a);

// All eigenvalues plus eigenvectors for a few positions of the ascending order,
// from a single tridiagonal reduction. Cheaper than a full eigensystem when only
// spot checks are needed.
struct ProbedEigenvalues {
  RVector values;               // ascending
  std::vector<Index> probes;    // positions into values
  CMatrix vectors;              // one column per probe
};
ProbedEigenvalues hermitian_eigenvalues_probed(CMatrix a, std::vector<Index> probes);

// G G* with only the lower triangle filled (herk), ready for the eigensolvers above.
CMatrix gram_lower(const CMatrix& g);

// Householder QR of a tall matrix (rows >= cols). Returns the explicit thin Q and
// overwrites nothing the caller keeps. diag_r receives the diagonal of R.
CMatrix thin_qr(CMatrix a, CVector& diag_r);

// Largest deviation |(A* A - I)_ij| for a matrix with orthonormal columns.
double orthonormality_defect(const CMatrix& a);

// Keep BLAS single threaded so results do not depend on worker counts.
void pin_blas_threads();

}  // namespace krono::linalg
