#pragma once

// Independent reference computations for the unit tests.  Nothing here calls
// into the library except for plain types.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

/// (-1)^j binom(alpha, j) through the Gamma function.
inline double gl_weight(double alpha, int j) {
    if (j == 0) return 1.0;
    // binom(alpha, j) = Gamma(alpha+1) / (Gamma(j+1) Gamma(alpha-j+1)), evaluated by the product form
    double b = 1.0;
    for (int i = 0; i < j; ++i) b *= (alpha - i) / (i + 1.0);
    return (j % 2 == 0 ? 1.0 : -1.0) * b;
}

/// Dense B built entry by entry from the stencil definition.
inline Eigen::MatrixXd toeplitz(double alpha, int n, double h) {
    Eigen::MatrixXd b(n, n);
    const double s = 1.0 / (2.0 * std::pow(h, alpha));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int k = std::abs(i - j);
            double v;
            if (k == 0) {
                v = 2.0 * gl_weight(alpha, 1);
            } else if (k == 1) {
                v = gl_weight(alpha, 0) + gl_weight(alpha, 2);
            } else {
                v = gl_weight(alpha, k + 1);
            }
            b(i, j) = v * s;
        }
    }
    return b;
}

/// Triple-loop product.
inline Eigen::MatrixXd naive_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            long double acc = 0.0L;
            for (Eigen::Index k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
            c(i, j) = static_cast<double>(acc);
        }
    }
    return c;
}

/// Kronecker product.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return k;
}

inline Eigen::VectorXd vec(const Eigen::MatrixXd& u) { return Eigen::Map<const Eigen::VectorXd>(u.data(), u.size()); }

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

/// Assembled W = I (x) Bx^2 + By^2 (x) I + lambda_bar I on vec(U) (column-major).
inline Eigen::MatrixXd assembled_W(const Eigen::MatrixXd& bx, const Eigen::MatrixXd& by, double lambda_bar) {
    const Eigen::Index n = bx.rows();
    const Eigen::Index m = by.rows();
    const Eigen::MatrixXd in = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd im = Eigen::MatrixXd::Identity(m, m);
    return kron(im, bx * bx) + kron(by * by, in) + lambda_bar * Eigen::MatrixXd::Identity(n * m, n * m);
}

/// Minimiser of |d| + |d - b|^2 / (2t) by exhaustive search: a lattice of
/// spacing `coarse` over the disc |d| <= |b|, then spacing `fine` around the
/// coarse winner.
inline Eigen::Vector2d lattice_shrink(const Eigen::Vector2d& b, double t, double coarse = 1e-2, double fine = 1e-4) {
    auto f = [&](const Eigen::Vector2d& d) { return d.norm() + (d - b).squaredNorm() / (2.0 * t); };
    auto search = [&](const Eigen::Vector2d& centre, double radius, double step) {
        Eigen::Vector2d best = centre;
        double best_val = f(centre);
        const int k = static_cast<int>(std::ceil(radius / step));
        for (int i = -k; i <= k; ++i) {
            for (int j = -k; j <= k; ++j) {
                const Eigen::Vector2d d = centre + Eigen::Vector2d(i * step, j * step);
                const double v = f(d);
                if (v < best_val) {
                    best_val = v;
                    best = d;
                }
            }
        }
        return best;
    };
    const Eigen::Vector2d c = search(Eigen::Vector2d::Zero(), b.norm() + coarse, coarse);
    return search(c, 2.0 * coarse, fine);
}

} // namespace oracle
