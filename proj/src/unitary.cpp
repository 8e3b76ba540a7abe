#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "krono/ensembles.hpp"
#include "krono/errors.hpp"
#include "krono/linalg.hpp"
#include "krono/rng.hpp"

namespace krono::ensembles {

namespace {

// Column-major fill so the leading columns only depend on the leading draws.
CMatrix gaussian_matrix(Index rows, Index cols, rng::Engine& engine) {
  CMatrix z(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) z(i, j) = rng::complex_normal(engine);
  }
  return z;
}

CMatrix haar_columns(Index n, Index cols, Seed seed) {
  auto engine = rng::make_engine(seed);
  CVector diag_r;
  CMatrix q = linalg::thin_qr(gaussian_matrix(n, cols, engine), diag_r);
  // Fix the QR gauge so the diagonal of R is positive; without this Q is not Haar.
  for (Index j = 0; j < cols; ++j) {
    const double modulus = std::abs(diag_r(j));
    if (modulus > 0.0) q.col(j) *= diag_r(j) / modulus;
  }
  return q;
}

}  // namespace

UnitaryMatrix UnitaryMatrix::from_matrix(CMatrix entries, std::string label, double tolerance) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw DataError(fmt::format("unitary '{}': expected a nonempty square matrix, got {}x{}", label,
                                entries.rows(), entries.cols()));
  }
  UnitaryMatrix u(std::make_shared<const CMatrix>(std::move(entries)), std::move(label), std::nullopt);
  const double defect = u.unitarity_defect();
  if (!(defect <= tolerance)) {
    throw DataError(fmt::format("unitary '{}': U U* deviates from I by {:.3e} (tolerance {:.1e})", u.label_,
                                defect, tolerance));
  }
  return u;
}

UnitaryMatrix UnitaryMatrix::identity(Index n) {
  if (n < 1) throw DomainError("UnitaryMatrix::identity: n must be >= 1");
  return UnitaryMatrix(std::make_shared<const CMatrix>(CMatrix::Identity(n, n)), "identity", std::nullopt);
}

UnitaryMatrix UnitaryMatrix::dft(Index n) {
  if (n < 1) throw DomainError("UnitaryMatrix::dft: n must be >= 1");
  CMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      // Reduce j*k mod n first to keep the phase argument small.
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      f(j, k) = std::polar(scale, angle);
    }
  }
  return UnitaryMatrix(std::make_shared<const CMatrix>(std::move(f)), "dft", std::nullopt);
}

double UnitaryMatrix::unitarity_defect() const {
  return linalg::orthonormality_defect(*entries_);
}

UnitaryMatrix sample_haar(Index n, Seed seed) {
  if (n < 1) throw DomainError("sample_haar: n must be >= 1");
  UnitaryMatrix u(std::make_shared<const CMatrix>(haar_columns(n, n, seed)), "haar", seed);
#ifndef NDEBUG
  if (n <= 512 && u.unitarity_defect() > 1e-10) throw NumericalFailure("sample_haar: result is not unitary");
#endif
  return u;
}

CMatrix sample_haar_columns(Index n, Index cols, Seed seed) {
  if (n < 1) throw DomainError("sample_haar_columns: n must be >= 1");
  if (cols < 0 || cols > n) {
    throw DomainError(fmt::format("sample_haar_columns: cols = {} outside [0, {}]", cols, n));
  }
  return haar_columns(n, cols, seed);
}

}  // namespace krono::ensembles
