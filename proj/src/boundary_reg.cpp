#include "fractv/boundary_reg.hpp"

#include "fractv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fractv {

namespace {

double grid_coord(Index i, Index n) { return static_cast<double>(i) / static_cast<double>(n - 1); }

void require_edge_length(const std::vector<double>& e, Index n, const char* name) {
    if (static_cast<Index>(e.size()) != n) {
        throw ShapeError(std::string("edge_surface: edge ") + name + " has length " + std::to_string(e.size()) +
                         ", expected " + std::to_string(n));
    }
}

} // namespace

Corners estimate_corners(const ImageGrid& z, int k) {
    const Index n = z.rows();
    const Index m = z.cols();
    if (k < 1 || 2 * static_cast<Index>(k) >= std::min(n, m)) {
        throw DomainError("estimate_corners: window " + std::to_string(k) + " too large for " + std::to_string(n) +
                          "x" + std::to_string(m) + " image");
    }
    const double area = static_cast<double>(k) * k;
    return {z.topLeftCorner(k, k).sum() / area, z.topRightCorner(k, k).sum() / area,
            z.bottomLeftCorner(k, k).sum() / area, z.bottomRightCorner(k, k).sum() / area};
}

ImageGrid bilinear_surface(const Corners& c, Index rows, Index cols) {
    if (rows < 2 || cols < 2) {
        throw DomainError("bilinear_surface: grid must be at least 2x2");
    }
    // a + (c-a)x + (b-a)y + (d+a-c-b)xy in Lagrange form, exact at the corners
    ImageGrid e1(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        const double y = grid_coord(j, cols);
        for (Index i = 0; i < rows; ++i) {
            const double x = grid_coord(i, rows);
            e1(i, j) = (1.0 - x) * (1.0 - y) * c.a + (1.0 - x) * y * c.b + x * (1.0 - y) * c.c + x * y * c.d;
        }
    }
    return e1;
}

std::vector<double> denoise_edge_1d(const std::vector<double>& signal, FracOrder alpha, double lambda1d,
                                    const SolverConfig& cfg) {
    const Index len = static_cast<Index>(signal.size());
    if (len < 4) {
        throw DomainError("denoise_edge_1d: signal length must be >= 4");
    }
    if (signal.front() != 0.0 || signal.back() != 0.0) {
        throw DomainError("denoise_edge_1d: endpoints must be zero (lift the corners first)");
    }
    if (!(lambda1d > 0.0)) {
        throw DomainError("denoise_edge_1d: lambda1d must be positive");
    }

    const Index n = len - 2;
    const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(signal.data() + 1, n);
    std::vector<double> out(signal.size(), 0.0);
    if (z.squaredNorm() == 0.0) {
        return out;
    }

    const auto op = FracOperator::build(alpha, n);
    const Eigen::MatrixXd& b = op.dense();
    // The minimizer does not depend on mu, only the convergence rate does.  Start from
    // cfg.mu scaled to the signal amplitude and rebalance primal and dual residuals.
    double mu = cfg.mu / std::min(1.0, z.cwiseAbs().maxCoeff());
    Eigen::LLT<Eigen::MatrixXd> chol;
    auto factor = [&] {
        Eigen::MatrixXd w = op.dense_squared();
        w.diagonal().array() += lambda1d / mu;
        chol.compute(w);
        if (chol.info() != Eigen::Success) {
            throw ConvergenceError("denoise_edge_1d: W not positive definite", 0.0);
        }
    };
    factor();

    // Bregman variable kept in the shrinkage form: d = shrink(Bu + bb, 1/mu).
    Eigen::VectorXd u = z;
    // small lambda1d shrinks u far below z, so z floors the relative scale
    const double znorm = z.norm();
    Eigen::VectorXd bb = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd d = b * u;
    double change = 0.0;
    for (int it = 0; it < cfg.edge_max_iter; ++it) {
        const Eigen::VectorXd d_prev = d;
        d = (b * u + bb).unaryExpr([t = 1.0 / mu](double v) {
            return std::copysign(std::max(std::abs(v) - t, 0.0), v);
        });
        const Eigen::VectorXd next = chol.solve((lambda1d / mu) * z + b * (d - bb));
        const Eigen::VectorXd bnext = b * next;
        bb += cfg.gamma * (bnext - d);

        change = (next - u).norm() / std::max(next.norm(), znorm);
        u = next;
        // energy stationarity is too loose a test here, the edges feed the whole lift
        if (change < cfg.edge_tol) {
            std::copy_n(u.data(), n, out.begin() + 1);
            return out;
        }

        if (it % 10 == 9) {
            const double primal = (bnext - d).norm();
            const double dual = mu * (b * (d - d_prev)).norm();
            double scale = 1.0;
            if (primal > 10.0 * dual) scale = 2.0;
            if (dual > 10.0 * primal) scale = 0.5;
            if (scale != 1.0) {
                mu *= scale;
                bb /= scale;
                factor();
            }
        }
    }
    throw ConvergenceError("denoise_edge_1d: no convergence in " + std::to_string(cfg.edge_max_iter) +
                               " iterations (relative change " + std::to_string(change) + ")",
                           change);
}

ImageGrid edge_surface(const EdgeSignals& edges, Index rows, Index cols) {
    if (rows < 2 || cols < 2) {
        throw DomainError("edge_surface: grid must be at least 2x2");
    }
    require_edge_length(edges.x0, cols, "x0");
    require_edge_length(edges.x1, cols, "x1");
    require_edge_length(edges.y0, rows, "y0");
    require_edge_length(edges.y1, rows, "y1");
    ImageGrid e2(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        const double y = grid_coord(j, cols);
        for (Index i = 0; i < rows; ++i) {
            const double x = grid_coord(i, rows);
            e2(i, j) = (1.0 - x) * edges.x0[j] + x * edges.x1[j] + (1.0 - y) * edges.y0[i] + y * edges.y1[i];
        }
    }
    return e2;
}

LiftResult lift(const ImageGrid& z, FracOrder alpha, double lambda1d, const SolverConfig& cfg) {
    require_finite(z, "lift");
    const Index n = z.rows();
    const Index m = z.cols();
    if (n < 4 || m < 4) {
        throw DomainError("lift: image must be at least 4x4");
    }

    LiftResult res;
    BoundaryLift& lf = res.lift;
    lf.corners = estimate_corners(z, cfg.corner_window);
    lf.e1 = bilinear_surface(lf.corners, n, m);
    const ImageGrid r = z - lf.e1;

    auto edge = [&](auto vec) {
        std::vector<double> s(vec.size());
        for (Index i = 0; i < vec.size(); ++i) s[i] = vec[i];
        s.front() = 0.0;
        s.back() = 0.0;
        return denoise_edge_1d(s, alpha, lambda1d, cfg);
    };
    lf.edges.x0 = edge(r.row(0));
    lf.edges.x1 = edge(r.row(n - 1));
    lf.edges.y0 = edge(r.col(0));
    lf.edges.y1 = edge(r.col(m - 1));
    lf.e2 = edge_surface(lf.edges, n, m);

    res.lifted = z - lf.e1 - lf.e2;
    res.lifted.row(0).setZero();
    res.lifted.row(n - 1).setZero();
    res.lifted.col(0).setZero();
    res.lifted.col(m - 1).setZero();
    return res;
}

LiftResult identity_lift(const ImageGrid& z) {
    require_finite(z, "identity_lift");
    const Index n = z.rows();
    const Index m = z.cols();
    if (n < 4 || m < 4) {
        throw DomainError("identity_lift: image must be at least 4x4");
    }
    LiftResult res;
    res.lift.e1 = ImageGrid::Zero(n, m);
    res.lift.e2 = ImageGrid::Zero(n, m);
    res.lift.edges = {std::vector<double>(m, 0.0), std::vector<double>(m, 0.0), std::vector<double>(n, 0.0),
                      std::vector<double>(n, 0.0)};
    res.lifted = z;
    res.lifted.row(0).setZero();
    res.lifted.row(n - 1).setZero();
    res.lifted.col(0).setZero();
    res.lifted.col(m - 1).setZero();
    return res;
}

ImageGrid restore(const ImageGrid& u_solved, const BoundaryLift& lift) {
    if (u_solved.rows() != lift.e1.rows() || u_solved.cols() != lift.e1.cols()) {
        throw ShapeError("restore: solution is " + std::to_string(u_solved.rows()) + "x" +
                         std::to_string(u_solved.cols()) + ", lift is " + std::to_string(lift.e1.rows()) + "x" +
                         std::to_string(lift.e1.cols()));
    }
    return u_solved + lift.e1 + lift.e2;
}

} // namespace fractv
