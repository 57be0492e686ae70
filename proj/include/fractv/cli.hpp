#pragma once

// Command-line front end: synth, denoise and bench.

#include "fractv/config.hpp"
#include "fractv/image_pipeline.hpp"
#include "fractv/report.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace fractv::cli {

enum ExitCode : int { exit_ok = 0, exit_io = 1, exit_usage = 2, exit_nonconvergence = 3 };

struct BenchSpec {
    std::vector<std::string> images{"parabolic", "saddle"};
    std::vector<SolverKind> solvers{SolverKind::sb, SolverKind::fb, SolverKind::nesterov, SolverKind::fista};
    std::vector<double> alphas{1.6};
    std::vector<double> lambdas{12000.0};
    std::vector<std::uint64_t> seeds{1};
    Index size = 256;
};

/// Fully resolved run description; embedded in every report.
struct RunManifest {
    std::string command;
    std::string input;      ///< PGM path (denoise)
    std::string generator;  ///< parabolic | saddle (synth, bench)
    Index rows = 256;
    Index cols = 256;
    NoiseSpec noise;
    SolverKind solver = SolverKind::sb;
    SolverConfig config;
    ProxConfig prox;
    BenchSpec bench;
    std::string reference;  ///< optional clean image for metrics (denoise)
    std::string out;
    std::string report;
    int threads = 1;
};

nlohmann::json to_json(const RunManifest& m);
/// Fields missing from `j` keep the values of `base`.
RunManifest manifest_from_json(const nlohmann::json& j, RunManifest base = {});

/// Dispatch to one of the four solvers.
std::pair<ImageGrid, RunReport> denoise(const ImageGrid& z, SolverKind kind, const SolverConfig& cfg,
                                        const ProxConfig& pc);

/// Synthetic test surface by name; throws std::invalid_argument for unknown names.
ImageGrid generate(const std::string& name, Index rows, Index cols);

struct BenchRow {
    std::string image;
    std::string solver;
    double alpha = 0.0;
    double lambda = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    double psnr = 0.0;
    double snr = 0.0;
    int outer_iters = 0;
    double wall_seconds = 0.0;
    std::string error;  ///< non-empty when the row failed
};

std::string csv_header();
std::string csv_row(const BenchRow& row);

/// One row per (image, solver, alpha, lambda, seed), in that nesting order.
/// Rows run on up to `threads` workers; each row is independent, so results
/// do not depend on the thread count (apart from wall_seconds).
std::vector<BenchRow> run_bench(const RunManifest& m, int threads);

/// Thread count from the flag, else FRACTV_THREADS, else 1.
int resolve_threads(int flag_value);

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace fractv::cli
