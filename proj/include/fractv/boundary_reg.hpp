#pragma once

// Reduction of a nonzero Dirichlet boundary to a zero one.
//
// The observed image z is split as z = u~ + e1 + e2, where e1 is the bilinear
// interpolant of four (smoothed) corner values and e2 blends the four
// corner-corrected, denoised edge signals linearly into the interior.  The
// solvers only ever see u~, whose boundary is zero.
//
// Edge naming follows the grid axes: x runs down the rows, y along the
// columns, so edge x0 is row 0, x1 is row N-1, y0 is column 0, y1 column M-1.

#include "fractv/config.hpp"
#include "fractv/frac_ops.hpp"

#include <array>
#include <vector>

namespace fractv {

/// Corner values a = u(0,0), b = u(0,1), c = u(1,0), d = u(1,1) in (x,y).
struct Corners {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
};

struct EdgeSignals {
    std::vector<double> x0;  ///< row 0, length M
    std::vector<double> x1;  ///< row N-1, length M
    std::vector<double> y0;  ///< column 0, length N
    std::vector<double> y1;  ///< column M-1, length N
};

struct BoundaryLift {
    ImageGrid e1;
    ImageGrid e2;
    Corners corners;
    EdgeSignals edges;  ///< denoised, corner-corrected edge signals
};

struct LiftResult {
    ImageGrid lifted;  ///< z - e1 - e2, boundary exactly zero
    BoundaryLift lift;
};

/// Mean of the k x k block in each corner. Requires k >= 1 and 2k < min(N,M).
Corners estimate_corners(const ImageGrid& z, int k);

ImageGrid bilinear_surface(const Corners& corners, Index rows, Index cols);

/// 1D Split-Bregman solve of min |D^a u|_1 + (lambda1d/2)|u - s|^2 on the
/// interior of `signal` (endpoints must be zero and stay zero).  Starts from
/// cfg.mu and rebalances it; stops when the relative change drops below
/// cfg.edge_tol.  Throws ConvergenceError after cfg.edge_max_iter steps.
std::vector<double> denoise_edge_1d(const std::vector<double>& signal, FracOrder alpha, double lambda1d,
                                    const SolverConfig& cfg);

/// e2(x,y) = (1-x) x0(y) + x x1(y) + (1-y) y0(x) + y y1(x).
ImageGrid edge_surface(const EdgeSignals& edges, Index rows, Index cols);

LiftResult lift(const ImageGrid& z, FracOrder alpha, double lambda1d, const SolverConfig& cfg);

/// No boundary treatment: e1 = e2 = 0, the boundary of z is simply dropped
/// (zero Dirichlet data assumed as given).
LiftResult identity_lift(const ImageGrid& z);

/// u_solved + e1 + e2.
ImageGrid restore(const ImageGrid& u_solved, const BoundaryLift& lift);

} // namespace fractv
