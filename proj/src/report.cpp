#include "fractv/report.hpp"

#include <cmath>

namespace fractv {

namespace {

nlohmann::json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? number(*v) : nlohmann::json(nullptr);
}

} // namespace

RunReport make_report(const std::string& solver, const SolverConfig& cfg) {
    RunReport r;
    r.solver = solver;
    r.alpha = cfg.alpha.value();
    r.lambda = cfg.lambda;
    r.mu = cfg.mu;
    r.gamma = cfg.gamma;
    r.criterion = to_string(cfg.criterion);
    return r;
}

nlohmann::json to_json(const RunReport& r) {
    nlohmann::json trace = nlohmann::json::array();
    for (double e : r.energy_trace) trace.push_back(number(e));
    return {
        {"solver", r.solver},
        {"alpha", r.alpha},
        {"lambda", r.lambda},
        {"mu", r.mu},
        {"gamma", r.gamma},
        {"outer_iters", r.outer_iters},
        {"cg_iters_total", r.cg_iters_total},
        {"energy_trace", trace},
        {"psnr", optional_number(r.psnr)},
        {"snr", optional_number(r.snr)},
        {"wall_seconds", r.wall_seconds},
        {"criterion", r.criterion},
        {"converged", r.converged},
        {"stop_reason", r.stop_reason},
    };
}

} // namespace fractv
