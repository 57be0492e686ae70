#pragma once

// Proximal solvers for  min_x f1(x) + f2(x),
//     f1(x) = TV_alpha(x) + indicator of a box,   f2(x) = (lambda/2)||x - z||^2.
//
// The prox of gamma*f1 is evaluated through its dual,
//     x = Proj_box(x_k - gamma D* Phi),   |Phi_ij| <= 1,
// with projected gradient ascent on Phi.

#include "fractv/config.hpp"
#include "fractv/frac_ops.hpp"
#include "fractv/report.hpp"

#include <utility>

namespace fractv {

struct Box {
    double lo = 0.0;
    double hi = 1.0;
};

struct DualState {
    VectorField phi;
};

struct ProxResult {
    ImageGrid x;
    DualState dual;
};

/// Clamp to [box.lo, box.hi] (default [0,1]).
ImageGrid proj_box(const ImageGrid& u, const Box& box = {});

/// Per-pixel Phi / max(1, |Phi|).
VectorField proj_unit(const VectorField& phi);

/// Dual step bound L = gamma^2 * opnorm_sq * 1.01, or 16 gamma^2 with
/// pc.fixed_lipschitz.
double dual_lipschitz(double gamma, double opnorm_sq, const ProxConfig& pc);

/// prox of gamma*f1 at x_k by pc.inner_steps projected dual steps
///     Phi <- Proj_unit(Phi + 2 s gamma D Proj_box(x_k - gamma D* Phi)),  s = step_scale / L.
/// `warm` (if given and pc.warm_start) seeds Phi, otherwise Phi starts at 0.
/// opnorm_sq <= 0 means: compute ||D||^2 here.
ProxResult prox_f1(const ImageGrid& x_k, double gamma, const ProxConfig& pc, const FracOperator& opx,
                   const FracOperator& opy, const Box& box = {}, const DualState* warm = nullptr,
                   double opnorm_sq = 0.0);

/// t_{k+1} = (1 + sqrt(4 t_k^2 + 1)) / 2.
double fista_next_t(double t);

/// Positive root a of a^2 / (2(b + a)) = (1 + b) / beta.
double nesterov_step(double b, double beta);

std::pair<ImageGrid, RunReport> fb_denoise(const ImageGrid& z, const SolverConfig& cfg, const ProxConfig& pc);
std::pair<ImageGrid, RunReport> nesterov_denoise(const ImageGrid& z, const SolverConfig& cfg, const ProxConfig& pc);
std::pair<ImageGrid, RunReport> fista_denoise(const ImageGrid& z, const SolverConfig& cfg, const ProxConfig& pc);

} // namespace fractv
