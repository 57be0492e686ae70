#include "fractv/model.hpp"

#include "fractv/errors.hpp"

#include <cmath>

namespace fractv {

Problem make_problem(const ImageGrid& z, const SolverConfig& cfg) {
    cfg.validate();
    require_finite(z, "denoise");
    const Index n = z.rows();
    const Index m = z.cols();
    if (n < 4 || m < 4) {
        throw DomainError("denoise: image must be at least 4x4");
    }
    LiftResult lr = cfg.boundary_lift ? lift(z, cfg.alpha, cfg.lambda1d, cfg) : identity_lift(z);
    const GridScaling sc = unit_square_scaling(n, m, cfg.alpha);
    auto opx = FracOperator::build(cfg.alpha, n - 2, sc.hx);
    auto opy = FracOperator::build(cfg.alpha, m - 2, sc.hy);

    Problem p{std::move(lr), ImageGrid(), ImageGrid(), std::move(opx), std::move(opy), cfg.lambda * sc.lambda_scale};
    p.z = p.lifted.lifted.block(1, 1, n - 2, m - 2);
    p.offset = (p.lifted.lift.e1 + p.lifted.lift.e2).block(1, 1, n - 2, m - 2);
    return p;
}

ImageGrid finish(const Problem& p, const ImageGrid& u_interior) {
    ImageGrid full = ImageGrid::Zero(p.lifted.lifted.rows(), p.lifted.lifted.cols());
    full.block(1, 1, u_interior.rows(), u_interior.cols()) = u_interior;
    return restore(full, p.lifted.lift);
}

namespace {

double magnitude_sum(const VectorField& g) { return (g.x.array().square() + g.y.array().square()).sqrt().sum(); }

} // namespace

double tv_alpha(const ImageGrid& u, const FracOperator& opx, const FracOperator& opy) {
    return magnitude_sum(frac_grad(u, opx, opy));
}

double model_energy(const ImageGrid& u, const ImageGrid& z, double lambda, const FracOperator& opx,
                    const FracOperator& opy) {
    return tv_alpha(u, opx, opy) + 0.5 * lambda * (u - z).squaredNorm();
}

double model_energy(const VectorField& du, const ImageGrid& u, const ImageGrid& z, double lambda) {
    return magnitude_sum(du) + 0.5 * lambda * (u - z).squaredNorm();
}

StopRule::StopRule(const SolverConfig& cfg, const ImageGrid& offset, double initial_energy)
    : tol_error_(cfg.tol_error), tol_residual_(cfg.tol_residual), offset_(offset), energy_(initial_energy) {}

bool StopRule::update(const ImageGrid& u_prev, const ImageGrid& u_next, double energy) {
    const double scale = (u_next + offset_).norm();
    const double diff = (u_next - u_prev).norm();
    last_change_ = scale > 0.0 ? diff / scale : diff;
    const double stationarity = energy > 0.0 ? std::abs(energy - energy_) / energy : 0.0;
    energy_ = energy;
    if (last_change_ < tol_error_) {
        converged_ = true;
        reason_ = "relative_error";
    } else if (stationarity < tol_residual_) {
        converged_ = true;
        reason_ = "relative_residual";
    }
    return converged_;
}

} // namespace fractv
