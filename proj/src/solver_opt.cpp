#include "fractv/solver_opt.hpp"

#include "fractv/errors.hpp"
#include "fractv/model.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>

namespace fractv {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double nesterov_b_cap = 1e200;

struct Setup {
    Problem pb;
    Box box;
    double opnorm_sq;
    double beta;  // Lipschitz constant of grad f2
};

Setup prepare(const ImageGrid& z, const SolverConfig& cfg, const ProxConfig& pc) {
    pc.validate();
    Problem pb = make_problem(z, cfg);
    // The lifted variable is not an intensity; widen the box around its range.
    const Box box{pb.z.minCoeff() - 0.1, pb.z.maxCoeff() + 0.1};
    const double opnorm = pc.fixed_lipschitz ? 16.0 : operator_norm_sq(pb.opx, pb.opy);
    const double beta = pb.lambda;
    return {std::move(pb), box, opnorm, beta};
}

ImageGrid grad_f2(const ImageGrid& x, const Problem& pb) { return pb.lambda * (x - pb.z); }

std::pair<ImageGrid, RunReport> finalize(const Setup& s, const ImageGrid& x, RunReport report, const StopRule& stop,
                                         Clock::time_point start) {
    report.converged = stop.converged();
    report.stop_reason = stop.reason();
    ImageGrid out = proj_box(finish(s.pb, x));
    report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return {std::move(out), std::move(report)};
}

} // namespace

ImageGrid proj_box(const ImageGrid& u, const Box& box) { return u.cwiseMax(box.lo).cwiseMin(box.hi); }

VectorField proj_unit(const VectorField& phi) {
    if (phi.y.rows() != phi.x.rows() || phi.y.cols() != phi.x.cols()) {
        throw ShapeError("proj_unit: components differ in shape");
    }
    const Eigen::ArrayXXd scale = (phi.x.array().square() + phi.y.array().square()).sqrt().max(1.0);
    return {(phi.x.array() / scale).matrix(), (phi.y.array() / scale).matrix()};
}

double dual_lipschitz(double gamma, double opnorm_sq, const ProxConfig& pc) {
    if (pc.fixed_lipschitz) return 16.0 * gamma * gamma;
    return gamma * gamma * opnorm_sq * 1.01;
}

ProxResult prox_f1(const ImageGrid& x_k, double gamma, const ProxConfig& pc, const FracOperator& opx,
                   const FracOperator& opy, const Box& box, const DualState* warm, double opnorm_sq) {
    if (!(gamma > 0.0)) {
        throw DomainError("prox_f1: gamma must be positive");
    }
    if (x_k.rows() != opx.size() || x_k.cols() != opy.size()) {
        throw ShapeError("prox_f1: image shape does not match operators");
    }
    if (!pc.fixed_lipschitz && opnorm_sq <= 0.0) {
        opnorm_sq = operator_norm_sq(opx, opy);
    }
    const double step = pc.step_scale / dual_lipschitz(gamma, opnorm_sq, pc);

    ProxResult res;
    if (warm != nullptr && pc.warm_start) {
        res.dual = *warm;
    } else {
        res.dual.phi = VectorField::zeros(x_k.rows(), x_k.cols());
    }
    VectorField& phi = res.dual.phi;
    for (int it = 0; it < pc.inner_steps; ++it) {
        const ImageGrid x = proj_box(x_k - gamma * frac_div_adjoint(phi, opx, opy), box);
        VectorField g = frac_grad(x, opx, opy);
        g *= 2.0 * step * gamma;
        phi = proj_unit(phi + g);
    }
    res.x = proj_box(x_k - gamma * frac_div_adjoint(phi, opx, opy), box);
    return res;
}

double fista_next_t(double t) { return 0.5 * (1.0 + std::sqrt(4.0 * t * t + 1.0)); }

double nesterov_step(double b, double beta) {
    // a^2 - c a - c b = 0 with c = 2 (1 + b) / beta, root written to avoid c^2 overflowing
    const double c = 2.0 * (1.0 + b) / beta;
    const double q = 1.0 + 4.0 * b / c;
    assert(q >= 0.0);
    return 0.5 * c * (1.0 + std::sqrt(q));
}

std::pair<ImageGrid, RunReport> fb_denoise(const ImageGrid& z, const SolverConfig& cfg, const ProxConfig& pc) {
    const auto start = Clock::now();
    RunReport report = make_report("fb", cfg);
    const Setup s = prepare(z, cfg, pc);
    const Problem& pb = s.pb;
    const double gamma_k = 1.0 / s.beta;

    ImageGrid x = pb.z;
    DualState dual{VectorField::zeros(x.rows(), x.cols())};
    double energy = model_energy(x, pb.z, pb.lambda, pb.opx, pb.opy);
    report.energy_trace.push_back(energy);
    StopRule stop(cfg, pb.offset, energy);

    for (int k = 0; k < cfg.max_outer; ++k) {
        const ImageGrid y = x - gamma_k * grad_f2(x, pb);
        ProxResult pr = prox_f1(y, gamma_k, pc, pb.opx, pb.opy, s.box, &dual, s.opnorm_sq);
        report.cg_iters_total += pc.inner_steps;
        dual = std::move(pr.dual);

        energy = model_energy(pr.x, pb.z, pb.lambda, pb.opx, pb.opy);
        report.energy_trace.push_back(energy);
        report.outer_iters = k + 1;
        const bool done = stop.update(x, pr.x, energy);
        x = std::move(pr.x);
        if (done) break;
    }
    return finalize(s, x, std::move(report), stop, start);
}

std::pair<ImageGrid, RunReport> nesterov_denoise(const ImageGrid& z, const SolverConfig& cfg, const ProxConfig& pc) {
    const auto start = Clock::now();
    RunReport report = make_report("nesterov", cfg);
    const Setup s = prepare(z, cfg, pc);
    const Problem& pb = s.pb;
    const double beta = s.beta;

    const ImageGrid x0 = pb.z;
    ImageGrid x = x0;
    const bool accumulated = pc.nesterov_point == NesterovPoint::accumulated;
    ImageGrid y = accumulated ? ImageGrid(ImageGrid::Zero(x.rows(), x.cols())) : x0;
    double b = pc.nesterov_b0;
    DualState dual_v{VectorField::zeros(x.rows(), x.cols())};
    DualState dual_x{VectorField::zeros(x.rows(), x.cols())};

    double energy = model_energy(x, pb.z, pb.lambda, pb.opx, pb.opy);
    report.energy_trace.push_back(energy);
    StopRule stop(cfg, pb.offset, energy);

    for (int k = 0; k < cfg.max_outer; ++k) {
        const double a = nesterov_step(b, beta);
        const ImageGrid anchor = accumulated ? ImageGrid(x0 - y) : ImageGrid(x - y);
        ProxResult pv = prox_f1(anchor, b, pc, pb.opx, pb.opy, s.box, &dual_v, s.opnorm_sq);
        dual_v = std::move(pv.dual);

        const double theta = 1.0 / (1.0 + b / a);  // a / (b + a)
        const ImageGrid zk = x + theta * (pv.x - x);
        const ImageGrid fwd = zk - grad_f2(zk, pb) / beta;
        ProxResult px = prox_f1(fwd, 1.0 / beta, pc, pb.opx, pb.opy, s.box, &dual_x, s.opnorm_sq);
        dual_x = std::move(px.dual);
        report.cg_iters_total += 2L * pc.inner_steps;

        y += a * grad_f2(px.x, pb);
        // b grows geometrically for beta < 2; past the cap theta has converged and
        // further growth would only overflow
        b = std::min(b + a, nesterov_b_cap);

        energy = model_energy(px.x, pb.z, pb.lambda, pb.opx, pb.opy);
        report.energy_trace.push_back(energy);
        report.outer_iters = k + 1;
        const bool done = stop.update(x, px.x, energy);
        x = std::move(px.x);
        if (done) break;
    }
    return finalize(s, x, std::move(report), stop, start);
}

std::pair<ImageGrid, RunReport> fista_denoise(const ImageGrid& z, const SolverConfig& cfg, const ProxConfig& pc) {
    const auto start = Clock::now();
    RunReport report = make_report("fista", cfg);
    const Setup s = prepare(z, cfg, pc);
    const Problem& pb = s.pb;
    const double beta = s.beta;

    ImageGrid x = pb.z;
    ImageGrid zk = x;
    double t = 1.0;
    DualState dual{VectorField::zeros(x.rows(), x.cols())};

    double energy = model_energy(x, pb.z, pb.lambda, pb.opx, pb.opy);
    report.energy_trace.push_back(energy);
    StopRule stop(cfg, pb.offset, energy);

    for (int k = 0; k < cfg.max_outer; ++k) {
        const ImageGrid y = zk - grad_f2(zk, pb) / beta;
        ProxResult pr = prox_f1(y, 1.0 / beta, pc, pb.opx, pb.opy, s.box, &dual, s.opnorm_sq);
        report.cg_iters_total += pc.inner_steps;
        dual = std::move(pr.dual);

        const double t_next = fista_next_t(t);
        if (pc.momentum == FistaMomentum::printed) {
            zk = x + (1.0 + (t - 1.0) / t) * (pr.x - x);
        } else {
            zk = pr.x + ((t - 1.0) / t_next) * (pr.x - x);
        }
        t = t_next;

        energy = model_energy(pr.x, pb.z, pb.lambda, pb.opx, pb.opy);
        report.energy_trace.push_back(energy);
        report.outer_iters = k + 1;
        const bool done = stop.update(x, pr.x, energy);
        x = std::move(pr.x);
        if (done) break;
    }
    return finalize(s, x, std::move(report), stop, start);
}

} // namespace fractv
