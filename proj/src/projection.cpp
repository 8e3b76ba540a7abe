#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "krono/ensembles.hpp"
#include "krono/errors.hpp"
#include "krono/linalg.hpp"

namespace krono::ensembles {

namespace {

void check_rank(Index ambient, Index rank, const char* where) {
  if (rank < 1 || rank > ambient - 1) {
    throw DomainError(fmt::format("{}: rank {} outside [1, {}] for ambient dimension {}", where, rank,
                                  ambient - 1, ambient));
  }
}

std::vector<Index> leading_mask(Index rank) {
  std::vector<Index> mask(static_cast<std::size_t>(rank));
  std::iota(mask.begin(), mask.end(), Index{0});
  return mask;
}

}  // namespace

std::string to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::coordinate:
      return "coordinate";
    case ProjectionKind::haar_rotated:
      return "haar_rotated";
    case ProjectionKind::explicit_basis:
      return "explicit_basis";
  }
  return "unknown";
}

ProjectionKind projection_kind_from_string(const std::string& name) {
  if (name == "coordinate" || name == "coord") return ProjectionKind::coordinate;
  if (name == "haar_rotated" || name == "rotated") return ProjectionKind::haar_rotated;
  if (name == "explicit_basis" || name == "explicit") return ProjectionKind::explicit_basis;
  throw DomainError(fmt::format("unknown projection kind '{}'", name));
}

Index rank_for_fraction(Index ambient, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DomainError(fmt::format("projection fraction must lie in (0, 1), got {}", fraction));
  }
  // The small offset keeps products like 0.29 * 100 = 28.999999999999996 at 29.
  const auto rank = static_cast<Index>(std::floor(fraction * static_cast<double>(ambient) + 1e-9));
  check_rank(ambient, rank, "rank_for_fraction");
  return rank;
}

Projection Projection::coordinate(Index ambient, Index rank) {
  check_rank(ambient, rank, "Projection::coordinate");
  Projection pi;
  pi.kind_ = ProjectionKind::coordinate;
  pi.ambient_ = ambient;
  pi.rank_ = rank;
  pi.mask_ = leading_mask(rank);
  return pi;
}

Projection Projection::haar_rotated(Index ambient, Index rank, Seed seed, Index dense_cap) {
  check_rank(ambient, rank, "Projection::haar_rotated");
  if (ambient > dense_cap) {
    throw CapExceeded(
        fmt::format("Projection::haar_rotated: N = {} exceeds the dense cap {}", ambient, dense_cap));
  }
  Projection pi;
  pi.kind_ = ProjectionKind::haar_rotated;
  pi.ambient_ = ambient;
  pi.rank_ = rank;
  pi.mask_ = leading_mask(rank);
  pi.basis_ = std::make_shared<const CMatrix>(sample_haar_columns(ambient, rank, seed));
  pi.seed_ = seed;
  return pi;
}

Projection Projection::from_basis(CMatrix basis, double tolerance) {
  check_rank(basis.rows(), basis.cols(), "Projection::from_basis");
  const double defect = linalg::orthonormality_defect(basis);
  if (!(defect <= tolerance)) {
    throw DataError(fmt::format("Projection::from_basis: basis is not orthonormal (defect {:.3e})", defect));
  }
  Projection pi;
  pi.kind_ = ProjectionKind::explicit_basis;
  pi.ambient_ = basis.rows();
  pi.rank_ = basis.cols();
  pi.mask_ = leading_mask(pi.rank_);
  pi.basis_ = std::make_shared<const CMatrix>(std::move(basis));
  return pi;
}

Projection Projection::truncated(Index rank) const {
  if (rank > rank_) {
    throw DomainError(fmt::format("Projection::truncated: rank {} exceeds current rank {}", rank, rank_));
  }
  switch (kind_) {
    case ProjectionKind::coordinate:
      return coordinate(ambient_, rank);
    case ProjectionKind::haar_rotated: {
      check_rank(ambient_, rank, "Projection::truncated");
      Projection pi = *this;
      pi.rank_ = rank;
      pi.mask_ = leading_mask(rank);
      pi.basis_ = std::make_shared<const CMatrix>(basis_->leftCols(rank));
      return pi;
    }
    case ProjectionKind::explicit_basis:
      break;
  }
  throw DomainError("Projection::truncated: explicit bases have no canonical ordering");
}

CMatrix Projection::apply(const CMatrix& x) const {
  if (x.rows() != ambient_) {
    throw DomainError(fmt::format("Projection::apply: length {} does not match N = {}", x.rows(), ambient_));
  }
  if (kind_ == ProjectionKind::coordinate) {
    CMatrix y = CMatrix::Zero(x.rows(), x.cols());
    y.topRows(rank_) = x.topRows(rank_);
    return y;
  }
  const CMatrix coefficients = basis_->adjoint() * x;
  return *basis_ * coefficients;
}

CMatrix Projection::coefficients(const CMatrix& x) const {
  if (x.rows() != ambient_) {
    throw DomainError(fmt::format("Projection::coefficients: length {} does not match N = {}", x.rows(), ambient_));
  }
  if (kind_ == ProjectionKind::coordinate) return x.topRows(rank_);
  return basis_->adjoint() * x;
}

CMatrix Projection::embed(const CMatrix& c) const {
  if (c.rows() != rank_) {
    throw DomainError(fmt::format("Projection::embed: length {} does not match rank {}", c.rows(), rank_));
  }
  if (kind_ == ProjectionKind::coordinate) {
    CMatrix y = CMatrix::Zero(ambient_, c.cols());
    y.topRows(rank_) = c;
    return y;
  }
  return *basis_ * c;
}

CMatrix Projection::basis() const {
  if (kind_ == ProjectionKind::coordinate) return CMatrix::Identity(ambient_, rank_);
  return *basis_;
}

CMatrix Projection::dense() const {
  if (kind_ == ProjectionKind::coordinate) {
    CMatrix d = CMatrix::Zero(ambient_, ambient_);
    d.topLeftCorner(rank_, rank_).setIdentity();
    return d;
  }
  return *basis_ * basis_->adjoint();
}

std::optional<CMatrix> Projection::rotation() const {
  switch (kind_) {
    case ProjectionKind::coordinate:
      return CMatrix::Identity(ambient_, ambient_);
    case ProjectionKind::haar_rotated:
      return sample_haar(ambient_, *seed_).matrix();
    case ProjectionKind::explicit_basis:
      return std::nullopt;
  }
  return std::nullopt;
}

Projection make_projection(ProjectionKind kind, Index ambient, double fraction, Seed seed,
                           const CMatrix* explicit_basis, Index dense_cap) {
  const Index rank = rank_for_fraction(ambient, fraction);
  switch (kind) {
    case ProjectionKind::coordinate:
      return Projection::coordinate(ambient, rank);
    case ProjectionKind::haar_rotated:
      return Projection::haar_rotated(ambient, rank, seed, dense_cap);
    case ProjectionKind::explicit_basis:
      if (explicit_basis == nullptr) throw DomainError("make_projection: explicit_basis kind needs a basis");
      if (explicit_basis->rows() != ambient || explicit_basis->cols() != rank) {
        throw DataError(fmt::format("make_projection: basis is {}x{}, expected {}x{}", explicit_basis->rows(),
                                    explicit_basis->cols(), ambient, rank));
      }
      return Projection::from_basis(*explicit_basis);
  }
  throw DomainError("make_projection: unknown kind");
}

}  // namespace krono::ensembles
