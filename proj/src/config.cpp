#include "fractv/config.hpp"

#include "fractv/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace fractv {

std::string to_string(Criterion c) { return c == Criterion::gsc ? "gsc" : "ssc"; }

std::string to_string(SolverKind s) {
    switch (s) {
    case SolverKind::sb:
        return "sb";
    case SolverKind::fb:
        return "fb";
    case SolverKind::nesterov:
        return "nesterov";
    case SolverKind::fista:
        return "fista";
    }
    return "?";
}

Criterion parse_criterion(const std::string& name) {
    if (name == "gsc" || name == "GSC") return Criterion::gsc;
    if (name == "ssc" || name == "SSC") return Criterion::ssc;
    throw std::invalid_argument("unknown criterion '" + name + "' (expected gsc or ssc)");
}

SolverKind parse_solver(const std::string& name) {
    if (name == "sb") return SolverKind::sb;
    if (name == "fb") return SolverKind::fb;
    if (name == "nesterov") return SolverKind::nesterov;
    if (name == "fista") return SolverKind::fista;
    throw std::invalid_argument("unknown solver '" + name + "' (expected sb, fb, nesterov or fista)");
}

SolverConfig SolverConfig::with_criterion(Criterion c) {
    SolverConfig cfg;
    cfg.set_criterion(c);
    return cfg;
}

void SolverConfig::set_criterion(Criterion c) {
    criterion = c;
    if (c == Criterion::gsc) {
        tol_residual = 1e-4;
        tol_error = 1e-8;
        max_inner = 10;
    } else {
        tol_residual = 1e-7;
        tol_error = 1e-10;
        max_inner = 25;
    }
}

void SolverConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(lambda)) throw DomainError("lambda must be positive");
    if (!positive(mu)) throw DomainError("mu must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0, 1]");
    if (!positive(tol_residual) || !positive(tol_error)) throw DomainError("tolerances must be positive");
    if (max_outer < 1 || max_inner < 1) throw DomainError("iteration caps must be >= 1");
    if (!positive(lambda1d)) throw DomainError("lambda1d must be positive");
    if (corner_window < 1) throw DomainError("corner window must be >= 1");
    if (edge_max_iter < 1) throw DomainError("edge_max_iter must be >= 1");
    if (!positive(edge_tol)) throw DomainError("edge_tol must be positive");
}

ProxConfig ProxConfig::for_criterion(Criterion c) {
    ProxConfig pc;
    pc.inner_steps = c == Criterion::gsc ? 10 : 25;
    return pc;
}

void ProxConfig::validate() const {
    if (inner_steps < 1) throw DomainError("inner_steps must be >= 1");
    if (!(step_scale > 0.0 && step_scale <= 1.0)) throw DomainError("step_scale must lie in (0, 1]");
    if (!(nesterov_b0 > 0.0)) throw DomainError("nesterov b0 must be positive");
}

} // namespace fractv
