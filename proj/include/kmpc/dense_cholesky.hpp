#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "kmpc/flops.hpp"

namespace kmpc::linalg {

/// Exact operation count of cholesky_factor on an n x n matrix:
/// n^3/3 + n^2/2 + n/6.
constexpr std::uint64_t cholesky_flops(std::uint64_t n) {
    return n * (n + 1) * (2 * n + 1) / 6;
}

/// Exact operation count of one forward plus one backward substitution.
constexpr std::uint64_t substitution_flops(std::uint64_t n) { return 2 * n * n; }

/// Overwrites the lower triangle of `a` with its Cholesky factor L (a = L L^T).
/// The strict upper triangle is neither read nor written. Returns false when a
/// pivot is not strictly positive; `a` is then left partially factored.
bool cholesky_factor(Eigen::Ref<Eigen::MatrixXd> a, FlopCounter* flops = nullptr);

/// Solves L L^T x = b in place given the factor produced by cholesky_factor.
void cholesky_solve(const Eigen::Ref<const Eigen::MatrixXd>& factor,
                    Eigen::Ref<Eigen::VectorXd> b,
                    FlopCounter* flops = nullptr);

}  // namespace kmpc::linalg
