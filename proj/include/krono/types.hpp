#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace krono {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Seed = std::uint64_t;

// Hard ceiling on N for anything that materializes an N x N matrix.
inline constexpr Index kDenseCapLimit = 8192;

}  // namespace krono
