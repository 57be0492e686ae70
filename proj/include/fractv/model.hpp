#pragma once

// The discrete model shared by all solvers:
//
//     E(U) = sum_ij |(DU)_ij| + (lambda / 2) ||U - Z||_F^2
//
// posed on the interior of a lifted image.  The image covers the unit square;
// operators are built in pixel units and lambda is rescaled accordingly (see
// unit_square_scaling).

#include "fractv/boundary_reg.hpp"
#include "fractv/config.hpp"
#include "fractv/frac_ops.hpp"

#include <string>

namespace fractv {

struct Problem {
    LiftResult lifted;
    ImageGrid z;    ///< interior of the lifted image, (N-2) x (M-2)
    ImageGrid offset;  ///< interior of e1 + e2
    FracOperator opx;
    FracOperator opy;
    double lambda = 0.0;  ///< fidelity weight in solver (pixel) units
};

/// Lifts z (or drops its boundary when cfg.boundary_lift is false) and builds
/// the interior operators.  z must be at least 4x4.
Problem make_problem(const ImageGrid& z, const SolverConfig& cfg);

/// Full-size image from an interior solution: zero boundary, then restore.
ImageGrid finish(const Problem& p, const ImageGrid& u_interior);

/// Per-pixel |DU| summed over the grid.
double tv_alpha(const ImageGrid& u, const FracOperator& opx, const FracOperator& opy);

double model_energy(const ImageGrid& u, const ImageGrid& z, double lambda, const FracOperator& opx,
                    const FracOperator& opy);
/// Same, with DU already at hand.
double model_energy(const VectorField& du, const ImageGrid& u, const ImageGrid& z, double lambda);

/// Outer stopping rule shared by the four solvers.
///
/// Stops when the relative change ||U_{k+1} - U_k|| / ||U_{k+1} + E|| falls
/// below tol_error (E = lift offset, so the norm is on the restored scale), or
/// when the energy is stationary, |E_{k+1} - E_k| / E_{k+1} < tol_residual.
class StopRule {
public:
    StopRule(const SolverConfig& cfg, const ImageGrid& offset, double initial_energy);

    /// Records one outer step; returns true when the loop should stop.
    bool update(const ImageGrid& u_prev, const ImageGrid& u_next, double energy);

    bool converged() const noexcept { return converged_; }
    const std::string& reason() const noexcept { return reason_; }
    double last_change() const noexcept { return last_change_; }

private:
    double tol_error_;
    double tol_residual_;
    const ImageGrid& offset_;
    double energy_;
    double last_change_ = 0.0;
    bool converged_ = false;
    std::string reason_ = "max_outer";
};

} // namespace fractv
