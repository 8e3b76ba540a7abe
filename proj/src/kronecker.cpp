#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "krono/ensembles.hpp"
#include "krono/errors.hpp"
#include "krono/linalg.hpp"

namespace krono::ensembles {

Index tuple_to_flat(std::span<const Index> tuple, Index n) {
  if (n < 1) throw DomainError("tuple_to_flat: n must be >= 1");
  Index flat = 0;
  for (const Index component : tuple) {
    if (component < 1 || component > n) {
      throw DomainError(fmt::format("tuple_to_flat: component {} outside 1..{}", component, n));
    }
    flat = flat * n + (component - 1);
  }
  return flat;
}

std::vector<Index> flat_to_tuple(Index flat, Index n, int k) {
  if (n < 1 || k < 1) throw DomainError("flat_to_tuple: need n >= 1 and k >= 1");
  std::vector<Index> tuple(static_cast<std::size_t>(k));
  Index rest = flat;
  for (int l = k - 1; l >= 0; --l) {
    tuple[static_cast<std::size_t>(l)] = rest % n + 1;
    rest /= n;
  }
  if (flat < 0 || rest != 0) throw DomainError(fmt::format("flat_to_tuple: index {} outside 0..n^k-1", flat));
  return tuple;
}

bool has_distinct_components(Index flat, Index n, int k) {
  auto tuple = flat_to_tuple(flat, n, k);
  std::sort(tuple.begin(), tuple.end());
  return std::adjacent_find(tuple.begin(), tuple.end()) == tuple.end();
}

namespace {

// One mode contraction on a big-endian tensor of shape (left, s, right):
// out[a, i, b] = sum_j A[i, j] in[a, j, b] (or with A*).
void contract_mode(const Complex* in, Complex* out, Index left, Index s, Index right, const CMatrix& a,
                   bool adjoint) {
  using ConstMap = Eigen::Map<const CMatrix>;
  using Map = Eigen::Map<CMatrix>;
  if (right == 1) {
    ConstMap x(in, s, left);
    Map y(out, s, left);
    if (adjoint) {
      y.noalias() = a.adjoint() * x;
    } else {
      y.noalias() = a * x;
    }
    return;
  }
  const Index block = s * right;
  for (Index t = 0; t < left; ++t) {
    ConstMap x(in + t * block, right, s);
    Map y(out + t * block, right, s);
    if (adjoint) {
      y.noalias() = x * a.conjugate();
    } else {
      y.noalias() = x * a.transpose();
    }
  }
}

}  // namespace

KroneckerUnitary::KroneckerUnitary(UnitaryMatrix u, std::optional<UnitaryMatrix> v, int power)
    : u_(std::move(u)), v_(std::move(v)), power_(power), dimension_(1) {
  for (const Index size : mode_sizes()) {
    if (dimension_ > std::numeric_limits<Index>::max() / size) {
      throw DomainError("KroneckerUnitary: ambient dimension overflows");
    }
    dimension_ *= size;
  }
}

KroneckerUnitary KroneckerUnitary::power(UnitaryMatrix u, int k) {
  if (k < 1) throw DomainError(fmt::format("KroneckerUnitary::power: k must be >= 1, got {}", k));
  return KroneckerUnitary(std::move(u), std::nullopt, k);
}

KroneckerUnitary KroneckerUnitary::pair(UnitaryMatrix u, UnitaryMatrix v) {
  return KroneckerUnitary(std::move(u), std::move(v), 1);
}

std::vector<Index> KroneckerUnitary::mode_sizes() const {
  if (v_) return {u_.dimension(), v_->dimension()};
  return std::vector<Index>(static_cast<std::size_t>(power_), u_.dimension());
}

const UnitaryMatrix& KroneckerUnitary::factor(std::size_t mode) const {
  return (v_ && mode == 1) ? *v_ : u_;
}

CMatrix KroneckerUnitary::apply(const CMatrix& x, bool conjugate_transpose) const {
  if (x.rows() != dimension_) {
    throw DomainError(
        fmt::format("kron_apply: vector length {} does not match dimension {}", x.rows(), dimension_));
  }
  linalg::pin_blas_threads();
  const auto sizes = mode_sizes();
  CMatrix current = x;
  CMatrix next(x.rows(), x.cols());
  // The column index acts as the most significant mode.
  Index left = x.cols();
  Index right = dimension_;
  for (std::size_t mode = 0; mode < modes(); ++mode) {
    const Index s = sizes[mode];
    right /= s;
    contract_mode(current.data(), next.data(), left, s, right, factor(mode).matrix(), conjugate_transpose);
    current.swap(next);
    left *= s;
  }
  return current;
}

CMatrix KroneckerUnitary::columns(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > dimension_) {
    throw DomainError(fmt::format("KroneckerUnitary::columns: range [{}, {}) outside 0..{}", first, first + count,
                                  dimension_));
  }
  const auto sizes = mode_sizes();
  CMatrix out(dimension_, count);
  CVector column;
  CVector scratch;
  for (Index c = 0; c < count; ++c) {
    // Split the column index into per-mode indices, most significant first.
    std::vector<Index> digits(sizes.size());
    Index rest = first + c;
    for (std::size_t mode = sizes.size(); mode-- > 0;) {
      digits[mode] = rest % sizes[mode];
      rest /= sizes[mode];
    }
    column = factor(0).matrix().col(digits[0]);
    for (std::size_t mode = 1; mode < sizes.size(); ++mode) {
      const auto& next = factor(mode).matrix();
      const Index s = sizes[mode];
      scratch.resize(column.size() * s);
      for (Index i = 0; i < column.size(); ++i) {
        scratch.segment(i * s, s) = column(i) * next.col(digits[mode]);
      }
      column.swap(scratch);
    }
    out.col(c) = column;
  }
  return out;
}

CMatrix KroneckerUnitary::dense(Index cap) const {
  if (dimension_ > cap) {
    throw CapExceeded(fmt::format("KroneckerUnitary::dense: N = {} exceeds cap {}", dimension_, cap));
  }
  return apply(CMatrix::Identity(dimension_, dimension_));
}

CVector kron_apply(const KroneckerUnitary& kron, const CVector& x, bool conjugate_transpose) {
  return kron.apply(CMatrix(x), conjugate_transpose).col(0);
}

}  // namespace krono::ensembles
