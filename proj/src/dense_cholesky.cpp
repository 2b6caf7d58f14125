#include "kmpc/dense_cholesky.hpp"

#include <cmath>

namespace kmpc::linalg {

// Right-looking, column oriented to match Eigen's storage order.
bool cholesky_factor(Eigen::Ref<Eigen::MatrixXd> a, FlopCounter* flops) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double pivot = a(j, j);
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            return false;
        }
        const double ljj = std::sqrt(pivot);
        a(j, j) = ljj;
        const Eigen::Index m = n - j - 1;
        if (m == 0) {
            continue;
        }
        a.col(j).tail(m) /= ljj;
        for (Eigen::Index k = j + 1; k < n; ++k) {
            const double ljk = a(k, j);
            a.col(k).segment(k, n - k).noalias() -= ljk * a.col(j).segment(k, n - k);
        }
    }
    count_flops(flops, cholesky_flops(static_cast<std::uint64_t>(n)));
    return true;
}

void cholesky_solve(const Eigen::Ref<const Eigen::MatrixXd>& factor,
                    Eigen::Ref<Eigen::VectorXd> b,
                    FlopCounter* flops) {
    const Eigen::Index n = factor.rows();
    // L y = b
    for (Eigen::Index j = 0; j < n; ++j) {
        b(j) /= factor(j, j);
        const Eigen::Index m = n - j - 1;
        if (m > 0) {
            b.tail(m).noalias() -= b(j) * factor.col(j).tail(m);
        }
    }
    // L^T x = y
    for (Eigen::Index j = n - 1; j >= 0; --j) {
        const Eigen::Index m = n - j - 1;
        double acc = b(j);
        if (m > 0) {
            acc -= factor.col(j).tail(m).dot(b.tail(m));
        }
        b(j) = acc / factor(j, j);
    }
    count_flops(flops, substitution_flops(static_cast<std::uint64_t>(n)));
}

}  // namespace kmpc::linalg
