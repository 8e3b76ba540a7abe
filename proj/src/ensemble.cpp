#include <fmt/format.h>

#include "krono/ensembles.hpp"
#include "krono/errors.hpp"
#include "krono/linalg.hpp"

namespace krono::ensembles {

CompressedEnsemble::CompressedEnsemble(Projection pi1, Projection pi2, KroneckerUnitary kron, Index dense_cap)
    : pi1_(std::move(pi1)), pi2_(std::move(pi2)), kron_(std::move(kron)), dense_cap_(dense_cap) {
  const Index n = kron_.dimension();
  if (pi1_.ambient_dimension() != n || pi2_.ambient_dimension() != n) {
    throw DomainError(fmt::format("build_ensemble: projections act on {} and {} but the unitary on {}",
                                  pi1_.ambient_dimension(), pi2_.ambient_dimension(), n));
  }
  if (dense_cap_ > kDenseCapLimit) dense_cap_ = kDenseCapLimit;
}

CMatrix CompressedEnsemble::apply_unitary(const CMatrix& x, bool conjugate_transpose) const {
  if (!conjugate_transpose) {
    CMatrix y = right_frame_ ? CMatrix(*right_frame_ * x) : x;
    y = kron_.apply(y, false);
    if (left_frame_) y = left_frame_->adjoint() * y;
    return y;
  }
  CMatrix y = left_frame_ ? CMatrix(*left_frame_ * x) : x;
  y = kron_.apply(y, true);
  if (right_frame_) y = right_frame_->adjoint() * y;
  return y;
}

CMatrix CompressedEnsemble::apply(const CMatrix& x) const {
  CMatrix y = pi1_.apply(x);
  y = apply_unitary(y, true);
  y = pi2_.apply(y);
  y = apply_unitary(y, false);
  return pi1_.apply(y);
}

CVector CompressedEnsemble::apply(const CVector& x) const {
  return apply(CMatrix(x)).col(0);
}

CMatrix CompressedEnsemble::compressed_factor() const {
  linalg::pin_blas_threads();
  CMatrix image;
  if (right_frame_) {
    // Reduced frame: Q is coordinate, so W2 Q picks the leading columns of W2.
    image = kron_.apply(right_frame_->leftCols(pi2_.rank()));
  } else if (pi2_.kind() == ProjectionKind::coordinate) {
    image = kron_.columns(0, pi2_.rank());
  } else {
    image = kron_.apply(pi2_.basis());
  }
  if (left_frame_) image = left_frame_->adjoint() * image;
  return pi1_.coefficients(image);
}

CMatrix CompressedEnsemble::dense() const {
  const Index n = dimension();
  if (n > dense_cap_) {
    throw CapExceeded(fmt::format("CompressedEnsemble::dense: N = {} exceeds cap {}", n, dense_cap_));
  }
  linalg::pin_blas_threads();
  const CMatrix unitary = apply_unitary(CMatrix::Identity(n, n), false);
  CMatrix middle = unitary * pi2_.dense() * unitary.adjoint();
  const CMatrix left = pi1_.dense();
  return left * middle * left;
}

CompressedEnsemble build_ensemble(const Projection& pi1, const Projection& pi2, const KroneckerUnitary& kron,
                                  Index dense_cap) {
  return CompressedEnsemble(pi1, pi2, kron, dense_cap);
}

CompressedEnsemble reduce_to_coordinate_frame(const Projection& pi1, const Projection& pi2,
                                              const KroneckerUnitary& kron, Index dense_cap) {
  if (pi1.kind() == ProjectionKind::explicit_basis || pi2.kind() == ProjectionKind::explicit_basis) {
    throw DomainError("reduce_to_coordinate_frame: explicit_basis projections carry no rotation");
  }
  const Index n = kron.dimension();
  CompressedEnsemble reduced(Projection::coordinate(n, pi1.rank()), Projection::coordinate(n, pi2.rank()), kron,
                             dense_cap);
  if (pi1.kind() == ProjectionKind::haar_rotated) {
    reduced.left_frame_ = std::make_shared<const CMatrix>(*pi1.rotation());
  }
  if (pi2.kind() == ProjectionKind::haar_rotated) {
    reduced.right_frame_ = std::make_shared<const CMatrix>(*pi2.rotation());
  }
  return reduced;
}

}  // namespace krono::ensembles
