#pragma once

#include "fractv/frac_ops.hpp"

#include <cstdint>
#include <string>

namespace fractv {

enum class Criterion { gsc, ssc };

enum class SolverKind { sb, fb, nesterov, fista };

std::string to_string(Criterion c);
std::string to_string(SolverKind s);
/// Throws std::invalid_argument on unknown names.
Criterion parse_criterion(const std::string& name);
SolverKind parse_solver(const std::string& name);

struct SolverConfig {
    double lambda = 12000.0;
    double mu = 1.1;
    double gamma = 1.0;
    FracOrder alpha{1.6};
    double tol_residual = 1e-4;
    double tol_error = 1e-8;
    int max_outer = 1000;
    int max_inner = 10;
    std::uint64_t seed = 0;
    Criterion criterion = Criterion::gsc;

    double lambda1d = 0.1;       ///< edge problems, pixel units
    int corner_window = 5;
    bool boundary_lift = true;
    double edge_tol = 1e-6;      ///< relative change that ends an edge solve
    int edge_max_iter = 20000;

    /// Config with the tolerance bundle of the given criterion.
    static SolverConfig with_criterion(Criterion c);
    void set_criterion(Criterion c);

    /// Throws DomainError on out-of-range fields.
    void validate() const;
};

enum class FistaMomentum {
    printed,   ///< z = x_k + (1 + (t_k - 1)/t_k)(x_{k+1} - x_k)
    standard   ///< z = x_{k+1} + ((t_k - 1)/t_{k+1})(x_{k+1} - x_k)
};

enum class NesterovPoint {
    accumulated,  ///< v = prox^{b_k}(x_0 - y_k), y_0 = 0
    printed       ///< v = prox^{b_k}(x_k - y_k), y_0 = x_0
};

struct ProxConfig {
    int inner_steps = 10;
    double step_scale = 0.9;
    bool warm_start = true;
    bool fixed_lipschitz = false;  ///< L = 16 gamma^2 instead of the power-iteration bound
    FistaMomentum momentum = FistaMomentum::printed;
    NesterovPoint nesterov_point = NesterovPoint::accumulated;
    double nesterov_b0 = 1.0;

    static ProxConfig for_criterion(Criterion c);
    void validate() const;
};

} // namespace fractv
