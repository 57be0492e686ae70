#pragma once

#include "fractv/config.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fractv {

struct RunReport {
    std::string solver;
    double alpha = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double gamma = 0.0;
    int outer_iters = 0;
    long cg_iters_total = 0;  ///< CG steps (sb) or dual projection steps (opt solvers)
    std::vector<double> energy_trace;
    std::optional<double> psnr;  ///< filled in when a reference image is known
    std::optional<double> snr;
    double wall_seconds = 0.0;
    std::string criterion;
    bool converged = false;
    std::string stop_reason;
};

RunReport make_report(const std::string& solver, const SolverConfig& cfg);

/// Non-finite metrics are written as the strings "inf" / "-inf" / "nan".
nlohmann::json to_json(const RunReport& r);

} // namespace fractv
