#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "krono/types.hpp"

namespace krono::ensembles {

// ---------------------------------------------------------------------------
// Unitary factors
// ---------------------------------------------------------------------------

// Immutable dense unitary. Copies share storage.
class UnitaryMatrix {
 public:
  // Validates U U* = I to `tolerance` (max entry deviation); throws DataError otherwise.
  static UnitaryMatrix from_matrix(CMatrix entries, std::string label = "explicit", double tolerance = 1e-10);
  static UnitaryMatrix identity(Index n);
  // Unitary DFT, F_jk = exp(-2 pi i j k / n) / sqrt(n).
  static UnitaryMatrix dft(Index n);

  Index dimension() const { return entries_->rows(); }
  const CMatrix& matrix() const { return *entries_; }
  const std::string& label() const { return label_; }
  std::optional<Seed> seed() const { return seed_; }
  double unitarity_defect() const;

 private:
  friend UnitaryMatrix sample_haar(Index n, Seed seed);
  UnitaryMatrix(std::shared_ptr<const CMatrix> entries, std::string label, std::optional<Seed> seed)
      : entries_(std::move(entries)), label_(std::move(label)), seed_(seed) {}

  std::shared_ptr<const CMatrix> entries_;
  std::string label_;
  std::optional<Seed> seed_;
};

// Haar unitary: Gaussian matrix, Householder QR, columns rescaled by R_jj / |R_jj|.
UnitaryMatrix sample_haar(Index n, Seed seed);

// The leading `cols` columns of sample_haar(n, seed), sampled without forming the rest.
CMatrix sample_haar_columns(Index n, Index cols, Seed seed);

// ---------------------------------------------------------------------------
// Tuple indexing of the tensor-power space
// ---------------------------------------------------------------------------

// Big-endian: flat = sum_l (i_l - 1) n^(k-l), tuple components are 1-based.
Index tuple_to_flat(std::span<const Index> tuple, Index n);
std::vector<Index> flat_to_tuple(Index flat, Index n, int k);
// True when all components of the tuple of `flat` are distinct.
bool has_distinct_components(Index flat, Index n, int k);

// ---------------------------------------------------------------------------
// Kronecker unitary U^{(x)k} or U (x) V, applied by mode contractions
// ---------------------------------------------------------------------------

class KroneckerUnitary {
 public:
  static KroneckerUnitary power(UnitaryMatrix u, int k);
  static KroneckerUnitary pair(UnitaryMatrix u, UnitaryMatrix v);

  Index dimension() const { return dimension_; }
  // k for U^{(x)k}; 1 for the U (x) V pair.
  int power() const { return power_; }
  bool is_pair() const { return v_.has_value(); }
  const UnitaryMatrix& factor_u() const { return u_; }
  const std::optional<UnitaryMatrix>& factor_v() const { return v_; }
  // Mode sizes, most significant first.
  std::vector<Index> mode_sizes() const;

  // Applies the operator (or its adjoint) to every column of x.
  CMatrix apply(const CMatrix& x, bool conjugate_transpose = false) const;

  // Columns first .. first+count-1 of the operator, built as Kronecker products of factor columns.
  CMatrix columns(Index first, Index count) const;

  // Explicit N x N matrix through the contraction kernel. N must not exceed `cap`.
  CMatrix dense(Index cap = kDenseCapLimit) const;

 private:
  KroneckerUnitary(UnitaryMatrix u, std::optional<UnitaryMatrix> v, int power);
  const UnitaryMatrix& factor(std::size_t mode) const;
  std::size_t modes() const { return v_ ? 2 : static_cast<std::size_t>(power_); }

  UnitaryMatrix u_;
  std::optional<UnitaryMatrix> v_;
  int power_;
  Index dimension_;
};

CVector kron_apply(const KroneckerUnitary& kron, const CVector& x, bool conjugate_transpose = false);

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

enum class ProjectionKind { coordinate, haar_rotated, explicit_basis };

std::string to_string(ProjectionKind kind);
ProjectionKind projection_kind_from_string(const std::string& name);

// r = floor(fraction * N); DomainError unless 1 <= r <= N - 1.
Index rank_for_fraction(Index ambient, double fraction);

class Projection {
 public:
  // First `rank` coordinates.
  static Projection coordinate(Index ambient, Index rank);
  // W P W* with P the first `rank` coordinates and W the Haar unitary sample_haar(ambient, seed).
  // Only the leading columns of W are sampled; the full rotation is regenerated on demand.
  static Projection haar_rotated(Index ambient, Index rank, Seed seed, Index dense_cap = kDenseCapLimit);
  // Range of an orthonormal basis (ambient x rank), validated to `tolerance`.
  static Projection from_basis(CMatrix basis, double tolerance = 1e-10);

  // Same frame, leading `rank` directions. Not available for explicit bases.
  Projection truncated(Index rank) const;

  ProjectionKind kind() const { return kind_; }
  Index ambient_dimension() const { return ambient_; }
  Index rank() const { return rank_; }
  std::optional<Seed> seed() const { return seed_; }

  // Coordinates spanned by the projection in its own frame (first `rank` for rotated kinds).
  std::span<const Index> mask() const { return mask_; }

  CMatrix apply(const CMatrix& x) const;
  // Y* x and Y c for the range basis Y, without materializing Y for the coordinate kind.
  CMatrix coefficients(const CMatrix& x) const;
  CMatrix embed(const CMatrix& c) const;
  // Orthonormal basis of the range, ambient x rank.
  CMatrix basis() const;
  CMatrix dense() const;
  // Rotation W with Pi = W P W* for coordinate (identity) and haar_rotated kinds;
  // nullopt for explicit bases that carry no rotation.
  std::optional<CMatrix> rotation() const;

 private:
  Projection() = default;

  ProjectionKind kind_ = ProjectionKind::coordinate;
  Index ambient_ = 0;
  Index rank_ = 0;
  std::vector<Index> mask_;
  std::shared_ptr<const CMatrix> basis_;  // rotated and explicit kinds
  std::optional<Seed> seed_;
};

Projection make_projection(ProjectionKind kind, Index ambient, double fraction, Seed seed,
                           const CMatrix* explicit_basis = nullptr, Index dense_cap = kDenseCapLimit);

// ---------------------------------------------------------------------------
// Compressed ensemble Pi1 O Pi2 O* Pi1 with O = L (U^{(x)k}) R
// ---------------------------------------------------------------------------

class CompressedEnsemble {
 public:
  Index dimension() const { return kron_.dimension(); }
  const Projection& left_projection() const { return pi1_; }
  const Projection& right_projection() const { return pi2_; }
  const KroneckerUnitary& kron() const { return kron_; }
  bool in_coordinate_frame() const { return left_frame_ != nullptr || right_frame_ != nullptr; }
  Index dense_cap() const { return dense_cap_; }

  // O x and O* x, including coordinate-frame rotations when present.
  CMatrix apply_unitary(const CMatrix& x, bool conjugate_transpose = false) const;

  // C x, matrix free.
  CMatrix apply(const CMatrix& x) const;
  CVector apply(const CVector& x) const;

  // Y1* O Y2 with Y the range bases; C = Y1 G G* Y1*. Size rank1 x rank2.
  CMatrix compressed_factor() const;

  // Explicit N x N matrix. Throws CapExceeded above dense_cap().
  CMatrix dense() const;

 private:
  friend CompressedEnsemble build_ensemble(const Projection&, const Projection&, const KroneckerUnitary&, Index);
  friend CompressedEnsemble reduce_to_coordinate_frame(const Projection&, const Projection&,
                                                       const KroneckerUnitary&, Index);
  CompressedEnsemble(Projection pi1, Projection pi2, KroneckerUnitary kron, Index dense_cap);

  Projection pi1_;
  Projection pi2_;
  KroneckerUnitary kron_;
  std::shared_ptr<const CMatrix> left_frame_;   // W1 (applied as W1*)
  std::shared_ptr<const CMatrix> right_frame_;  // W2
  Index dense_cap_;
};

CompressedEnsemble build_ensemble(const Projection& pi1, const Projection& pi2, const KroneckerUnitary& kron,
                                  Index dense_cap = kDenseCapLimit);

// P WW Q WW* P with WW = W1* U^{(x)k} W2, where Pi_i = W_i (coordinate) W_i*.
CompressedEnsemble reduce_to_coordinate_frame(const Projection& pi1, const Projection& pi2,
                                              const KroneckerUnitary& kron, Index dense_cap = kDenseCapLimit);

}  // namespace krono::ensembles
