#pragma once

// Split-Bregman solver for the fractional TV model.
//
// With d = DU and the multiplier p, each outer step is
//
//     d <- shrink(DU + b, 1/mu)
//     solve  W U = F  by CG,  W U = B^2 U + U B^2 + (lambda/mu) U
//     b <- b + gamma (DU - d)
//
// where F = (lambda/mu) Z + D*d + (1/mu) D*p.  The Bregman variable b and p
// are related by p = -mu b.

#include "fractv/config.hpp"
#include "fractv/frac_ops.hpp"
#include "fractv/report.hpp"

#include <functional>
#include <utility>

namespace fractv {

/// Per-pixel vector soft threshold, (b/|b|) max(|b| - t, 0).
VectorField shrink(const VectorField& b, double t);

/// B^T B U + U B^T B + lambda_bar U.
ImageGrid apply_W(const ImageGrid& u, const FracOperator& opx, const FracOperator& opy, double lambda_bar);

/// (lambda/mu) Z + D*d + (1/mu) D*p.
ImageGrid assemble_rhs(const ImageGrid& z, const VectorField& d, const VectorField& p, double lambda, double mu,
                       const FracOperator& opx, const FracOperator& opy);

struct CgResult {
    ImageGrid u;
    int iterations = 0;
    double relative_residual = 0.0;
    bool reached_tol = false;  ///< false: stopped on maxit
};

using LinearOperator = std::function<ImageGrid(const ImageGrid&)>;

/// Called after every CG step with the iteration count, the current iterate
/// and its relative residual.
using CgObserver = std::function<void(int, const ImageGrid&, double)>;

/// Matrix-free conjugate gradients for a symmetric positive definite `apply`.
/// Stops when ||A u - f|| / ||f|| <= tol or after maxit steps.  f = 0 returns
/// zero immediately.  Throws ConvergenceError on a non-positive curvature
/// direction.
CgResult cg_solve(const LinearOperator& apply, const ImageGrid& f, double tol, int maxit,
                  const ImageGrid* initial = nullptr, const CgObserver& observer = {});

std::pair<ImageGrid, RunReport> split_bregman_denoise(const ImageGrid& z, const SolverConfig& cfg);

} // namespace fractv
