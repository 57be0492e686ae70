#include "fractv/solver_sb.hpp"

#include "fractv/errors.hpp"
#include "fractv/model.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace fractv {

namespace {

void check_shape(const ImageGrid& u, Index rows, Index cols, const char* what) {
    if (u.rows() != rows || u.cols() != cols) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                         ", got " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()));
    }
}

} // namespace

VectorField shrink(const VectorField& b, double t) {
    if (!(t > 0.0)) {
        throw DomainError("shrink: threshold must be positive");
    }
    check_shape(b.y, b.x.rows(), b.x.cols(), "shrink");
    const Eigen::ArrayXXd mag = (b.x.array().square() + b.y.array().square()).sqrt();
    const Eigen::ArrayXXd factor = (mag > t).select((mag - t) / mag, 0.0);
    return {(b.x.array() * factor).matrix(), (b.y.array() * factor).matrix()};
}

ImageGrid apply_W(const ImageGrid& u, const FracOperator& opx, const FracOperator& opy, double lambda_bar) {
    check_shape(u, opx.size(), opy.size(), "apply_W");
    ImageGrid out = opx.apply_left_sq(u);
    out += opy.apply_right_sq(u);
    out += lambda_bar * u;
    return out;
}

ImageGrid assemble_rhs(const ImageGrid& z, const VectorField& d, const VectorField& p, double lambda, double mu,
                       const FracOperator& opx, const FracOperator& opy) {
    check_shape(z, opx.size(), opy.size(), "assemble_rhs");
    check_shape(d.x, z.rows(), z.cols(), "assemble_rhs");
    check_shape(p.x, z.rows(), z.cols(), "assemble_rhs");
    ImageGrid f = (lambda / mu) * z;
    f += frac_div_adjoint(d, opx, opy);
    f += (1.0 / mu) * frac_div_adjoint(p, opx, opy);
    return f;
}

CgResult cg_solve(const LinearOperator& apply, const ImageGrid& f, double tol, int maxit, const ImageGrid* initial,
                  const CgObserver& observer) {
    CgResult res;
    const double fnorm = f.norm();
    if (fnorm == 0.0) {
        res.u = ImageGrid::Zero(f.rows(), f.cols());
        res.reached_tol = true;
        return res;
    }
    if (initial != nullptr) {
        check_shape(*initial, f.rows(), f.cols(), "cg_solve");
        res.u = *initial;
    } else {
        res.u = ImageGrid::Zero(f.rows(), f.cols());
    }

    ImageGrid r = initial != nullptr ? ImageGrid(f - apply(res.u)) : f;
    ImageGrid p = r;
    double rr = r.squaredNorm();
    res.relative_residual = std::sqrt(rr) / fnorm;
    while (res.relative_residual > tol && res.iterations < maxit) {
        const ImageGrid ap = apply(p);
        const double curvature = (p.array() * ap.array()).sum();
        if (!(curvature > 0.0)) {
            throw ConvergenceError("cg_solve: non-positive curvature (operator not SPD)", res.relative_residual);
        }
        const double step = rr / curvature;
        res.u += step * p;
        r -= step * ap;
        const double rr_next = r.squaredNorm();
        p = r + (rr_next / rr) * p;
        rr = rr_next;
        ++res.iterations;
        res.relative_residual = std::sqrt(rr) / fnorm;
        if (observer) observer(res.iterations, res.u, res.relative_residual);
    }
    res.reached_tol = res.relative_residual <= tol;
    return res;
}

std::pair<ImageGrid, RunReport> split_bregman_denoise(const ImageGrid& z, const SolverConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    RunReport report = make_report("sb", cfg);
    const Problem pb = make_problem(z, cfg);
    const FracOperator& opx = pb.opx;
    const FracOperator& opy = pb.opy;
    const double lambda = pb.lambda;
    const double mu = cfg.mu;
    const double lambda_bar = lambda / mu;

    const LinearOperator w = [&](const ImageGrid& v) { return apply_W(v, opx, opy, lambda_bar); };

    ImageGrid u = pb.z;
    VectorField du = frac_grad(u, opx, opy);
    VectorField d = du;
    VectorField b = VectorField::zeros(u.rows(), u.cols());

    double energy = model_energy(du, u, pb.z, lambda);
    report.energy_trace.push_back(energy);
    StopRule stop(cfg, pb.offset, energy);

    for (int k = 0; k < cfg.max_outer; ++k) {
        d = shrink(du + b, 1.0 / mu);
        const VectorField p = -mu * b;
        const ImageGrid f = assemble_rhs(pb.z, d, p, lambda, mu, opx, opy);
        CgResult cg = cg_solve(w, f, cfg.tol_residual, cfg.max_inner, &u);
        report.cg_iters_total += cg.iterations;

        du = frac_grad(cg.u, opx, opy);
        b += cfg.gamma * (du - d);

        energy = model_energy(du, cg.u, pb.z, lambda);
        report.energy_trace.push_back(energy);
        report.outer_iters = k + 1;
        const bool done = stop.update(u, cg.u, energy);
        u = std::move(cg.u);
        if (done) break;
    }

    report.converged = stop.converged();
    report.stop_reason = stop.reason();
    ImageGrid out = finish(pb, u);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(out), std::move(report)};
}

} // namespace fractv
