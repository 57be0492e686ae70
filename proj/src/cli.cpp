#include "fractv/cli.hpp"

#include "fractv/errors.hpp"
#include "fractv/solver_opt.hpp"
#include "fractv/solver_sb.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace fractv::cli {

namespace {

using nlohmann::json;

std::string momentum_name(FistaMomentum m) { return m == FistaMomentum::printed ? "printed" : "standard"; }
std::string point_name(NesterovPoint p) { return p == NesterovPoint::accumulated ? "accumulated" : "printed"; }

FistaMomentum parse_momentum(const std::string& s) {
    if (s == "printed") return FistaMomentum::printed;
    if (s == "standard") return FistaMomentum::standard;
    throw std::invalid_argument("unknown FISTA momentum '" + s + "' (expected printed or standard)");
}

NesterovPoint parse_point(const std::string& s) {
    if (s == "accumulated") return NesterovPoint::accumulated;
    if (s == "printed") return NesterovPoint::printed;
    throw std::invalid_argument("unknown Nesterov point '" + s + "' (expected accumulated or printed)");
}

template <typename T>
void read_if(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream ss;
    ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw IoError("write error on '" + path + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw IoError("config '" + path + "': " + e.what());
    }
}

// Flags shared by denoise and bench.  Values are applied only when given, so
// a config file supplies the defaults.
struct SolverFlags {
    double alpha = 1.6;
    double lambda = 12000;
    double lambda1d = 0.1;
    double mu = 1.1;
    double gamma = 1.0;
    std::string solver = "sb";
    std::string criterion = "gsc";
    std::uint64_t seed = 0;
    double sigma = 0;
    int max_outer = 1000;
    int inner_steps = 10;
    std::string momentum = "printed";
    std::string nesterov_point = "accumulated";

    CLI::Option* o_alpha = nullptr;
    CLI::Option* o_lambda = nullptr;
    CLI::Option* o_lambda1d = nullptr;
    CLI::Option* o_mu = nullptr;
    CLI::Option* o_gamma = nullptr;
    CLI::Option* o_solver = nullptr;
    CLI::Option* o_criterion = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_sigma = nullptr;
    CLI::Option* o_nolift = nullptr;
    CLI::Option* o_max_outer = nullptr;
    CLI::Option* o_inner = nullptr;
    CLI::Option* o_momentum = nullptr;
    CLI::Option* o_point = nullptr;
    CLI::Option* o_fixed_l = nullptr;

    void add(CLI::App* app, bool scalar_sweep_flags) {
        if (scalar_sweep_flags) {
            o_alpha = app->add_option("--alpha", alpha, "fractional order, 1 < alpha < 2");
            o_lambda = app->add_option("--lambda", lambda, "fidelity weight");
            o_solver = app->add_option("--solver", solver, "sb | fb | nesterov | fista");
            o_seed = app->add_option("--seed", seed, "noise seed");
        }
        o_lambda1d = app->add_option("--lambda1d", lambda1d, "fidelity weight of the edge problems");
        o_mu = app->add_option("--mu", mu, "Split-Bregman penalty");
        o_gamma = app->add_option("--gamma", gamma, "multiplier step, 0 < gamma <= 1");
        o_criterion = app->add_option("--criterion", criterion, "stopping bundle: gsc | ssc");
        o_sigma = app->add_option("--sigma", sigma, "standard deviation of added Gaussian noise");
        o_nolift = app->add_flag("--no-boundary-lift", "skip boundary regularization");
        o_max_outer = app->add_option("--max-outer", max_outer, "outer iteration cap");
        o_inner = app->add_option("--inner-steps", inner_steps, "dual steps per prox evaluation");
        o_momentum = app->add_option("--momentum", momentum, "FISTA momentum: printed | standard");
        o_point = app->add_option("--nesterov-point", nesterov_point, "accumulated | printed");
        o_fixed_l = app->add_flag("--fixed-lipschitz", "dual step from L = 16 gamma^2");
    }

    void apply(RunManifest& m) const {
        auto given = [](const CLI::Option* o) { return o != nullptr && o->count() > 0; };
        if (given(o_criterion)) {
            const Criterion c = parse_criterion(criterion);
            m.config.set_criterion(c);
            m.prox.inner_steps = ProxConfig::for_criterion(c).inner_steps;
        }
        if (given(o_alpha)) m.config.alpha = FracOrder(alpha);
        if (given(o_lambda)) m.config.lambda = lambda;
        if (given(o_lambda1d)) m.config.lambda1d = lambda1d;
        if (given(o_mu)) m.config.mu = mu;
        if (given(o_gamma)) m.config.gamma = gamma;
        if (given(o_solver)) m.solver = parse_solver(solver);
        if (given(o_seed)) {
            m.config.seed = seed;
            m.noise.seed = seed;
        }
        if (given(o_sigma)) m.noise.sigma = sigma;
        if (given(o_nolift)) m.config.boundary_lift = false;
        if (given(o_max_outer)) m.config.max_outer = max_outer;
        if (given(o_inner)) m.prox.inner_steps = inner_steps;
        if (given(o_momentum)) m.prox.momentum = parse_momentum(momentum);
        if (given(o_point)) m.prox.nesterov_point = parse_point(nesterov_point);
        if (given(o_fixed_l)) m.prox.fixed_lipschitz = true;
    }
};

int synth_command(const RunManifest& m, int maxval, std::ostream& out) {
    if (m.rows < 8 || m.cols < 8) {
        throw DomainError("synth: rows and cols must be >= 8");
    }
    ImageGrid u = generate(m.generator, m.rows, m.cols);
    u = add_noise(u, m.noise);
    save_pgm(m.out, u, maxval);
    out << "wrote " << m.out << " (" << m.rows << "x" << m.cols << ")\n";
    return exit_ok;
}

int denoise_command(RunManifest m, std::ostream& out) {
    if (m.input.empty()) throw std::invalid_argument("denoise: input path required");
    if (m.out.empty()) throw std::invalid_argument("denoise: --out required");
    m.config.validate();
    m.prox.validate();

    const ImageGrid input = load_pgm(m.input);
    ImageGrid reference;
    if (!m.reference.empty()) {
        reference = load_pgm(m.reference);
    } else if (m.noise.sigma > 0.0) {
        reference = input;
    }
    const ImageGrid z = add_noise(input, m.noise);

    auto [u, report] = denoise(z, m.solver, m.config, m.prox);
    if (reference.size() > 0) {
        report.psnr = psnr(u, reference);
        report.snr = snr(u, reference);
    }
    save_pgm(m.out, u, 65535);
    if (!m.report.empty()) {
        json doc{{"manifest", to_json(m)}, {"report", to_json(report)}};
        write_text(m.report, doc.dump(2) + "\n");
    }
    out << report.solver << ": " << report.outer_iters << " outer iterations, " << report.stop_reason;
    if (report.psnr) out << ", psnr " << format_number(*report.psnr) << " dB";
    out << "\n";
    return report.converged ? exit_ok : exit_nonconvergence;
}

int bench_command(const RunManifest& m, std::ostream& out, std::ostream& err) {
    m.config.validate();
    m.prox.validate();
    const auto rows = run_bench(m, m.threads);
    std::string csv = csv_header() + "\n";
    for (const auto& r : rows) csv += csv_row(r) + "\n";
    if (m.out.empty()) {
        out << csv;
    } else {
        write_text(m.out, csv);
    }
    int failures = 0;
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            ++failures;
            err << "row " << r.image << "/" << r.solver << "/alpha=" << r.alpha << "/lambda=" << r.lambda
                << "/seed=" << r.seed << " failed: " << r.error << "\n";
        }
    }
    if (!m.report.empty()) {
        json jrows = json::array();
        for (const auto& r : rows) {
            jrows.push_back({{"image", r.image},
                             {"solver", r.solver},
                             {"alpha", r.alpha},
                             {"lambda", r.lambda},
                             {"sigma", r.sigma},
                             {"seed", r.seed},
                             {"psnr", format_number(r.psnr)},
                             {"snr", format_number(r.snr)},
                             {"outer_iters", r.outer_iters},
                             {"wall_seconds", r.wall_seconds},
                             {"error", r.error}});
        }
        write_text(m.report, json{{"manifest", to_json(m)}, {"rows", jrows}}.dump(2) + "\n");
    }
    return failures == 0 ? exit_ok : exit_nonconvergence;
}

} // namespace

json to_json(const RunManifest& m) {
    const SolverConfig& c = m.config;
    const ProxConfig& p = m.prox;
    json solvers = json::array();
    for (auto s : m.bench.solvers) solvers.push_back(to_string(s));
    return {
        {"command", m.command},
        {"input", m.input},
        {"generator", m.generator},
        {"rows", m.rows},
        {"cols", m.cols},
        {"noise", {{"sigma", m.noise.sigma}, {"seed", m.noise.seed}}},
        {"solver", to_string(m.solver)},
        {"config",
         {{"alpha", c.alpha.value()},
          {"lambda", c.lambda},
          {"mu", c.mu},
          {"gamma", c.gamma},
          {"criterion", to_string(c.criterion)},
          {"tol_residual", c.tol_residual},
          {"tol_error", c.tol_error},
          {"max_outer", c.max_outer},
          {"max_inner", c.max_inner},
          {"seed", c.seed},
          {"lambda1d", c.lambda1d},
          {"corner_window", c.corner_window},
          {"boundary_lift", c.boundary_lift},
          {"edge_tol", c.edge_tol},
          {"edge_max_iter", c.edge_max_iter}}},
        {"prox",
         {{"inner_steps", p.inner_steps},
          {"step_scale", p.step_scale},
          {"warm_start", p.warm_start},
          {"fixed_lipschitz", p.fixed_lipschitz},
          {"momentum", momentum_name(p.momentum)},
          {"nesterov_point", point_name(p.nesterov_point)},
          {"nesterov_b0", p.nesterov_b0}}},
        {"bench",
         {{"images", m.bench.images},
          {"solvers", solvers},
          {"alphas", m.bench.alphas},
          {"lambdas", m.bench.lambdas},
          {"seeds", m.bench.seeds},
          {"size", m.bench.size}}},
        {"reference", m.reference},
        {"out", m.out},
        {"report", m.report},
        {"threads", m.threads},
    };
}

RunManifest manifest_from_json(const json& j, RunManifest m) {
    read_if(j, "command", m.command);
    read_if(j, "input", m.input);
    read_if(j, "generator", m.generator);
    read_if(j, "rows", m.rows);
    read_if(j, "cols", m.cols);
    read_if(j, "reference", m.reference);
    read_if(j, "out", m.out);
    read_if(j, "report", m.report);
    read_if(j, "threads", m.threads);
    if (j.contains("solver")) m.solver = parse_solver(j.at("solver").get<std::string>());
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        read_if(n, "sigma", m.noise.sigma);
        read_if(n, "seed", m.noise.seed);
    }
    if (j.contains("config")) {
        const json& c = j.at("config");
        SolverConfig& cfg = m.config;
        // the bundle first, so explicit tolerances below can refine it
        if (c.contains("criterion")) {
            cfg.set_criterion(parse_criterion(c.at("criterion").get<std::string>()));
            m.prox.inner_steps = ProxConfig::for_criterion(cfg.criterion).inner_steps;
        }
        if (c.contains("alpha")) cfg.alpha = FracOrder(c.at("alpha").get<double>());
        read_if(c, "lambda", cfg.lambda);
        read_if(c, "mu", cfg.mu);
        read_if(c, "gamma", cfg.gamma);
        read_if(c, "tol_residual", cfg.tol_residual);
        read_if(c, "tol_error", cfg.tol_error);
        read_if(c, "max_outer", cfg.max_outer);
        read_if(c, "max_inner", cfg.max_inner);
        read_if(c, "seed", cfg.seed);
        read_if(c, "lambda1d", cfg.lambda1d);
        read_if(c, "corner_window", cfg.corner_window);
        read_if(c, "boundary_lift", cfg.boundary_lift);
        read_if(c, "edge_tol", cfg.edge_tol);
        read_if(c, "edge_max_iter", cfg.edge_max_iter);
    }
    if (j.contains("prox")) {
        const json& p = j.at("prox");
        read_if(p, "inner_steps", m.prox.inner_steps);
        read_if(p, "step_scale", m.prox.step_scale);
        read_if(p, "warm_start", m.prox.warm_start);
        read_if(p, "fixed_lipschitz", m.prox.fixed_lipschitz);
        if (p.contains("momentum")) m.prox.momentum = parse_momentum(p.at("momentum").get<std::string>());
        if (p.contains("nesterov_point")) m.prox.nesterov_point = parse_point(p.at("nesterov_point").get<std::string>());
        read_if(p, "nesterov_b0", m.prox.nesterov_b0);
    }
    if (j.contains("bench")) {
        const json& b = j.at("bench");
        read_if(b, "images", m.bench.images);
        read_if(b, "alphas", m.bench.alphas);
        read_if(b, "lambdas", m.bench.lambdas);
        read_if(b, "seeds", m.bench.seeds);
        read_if(b, "size", m.bench.size);
        if (b.contains("solvers")) {
            m.bench.solvers.clear();
            for (const auto& s : b.at("solvers")) m.bench.solvers.push_back(parse_solver(s.get<std::string>()));
        }
    }
    return m;
}

std::pair<ImageGrid, RunReport> denoise(const ImageGrid& z, SolverKind kind, const SolverConfig& cfg,
                                        const ProxConfig& pc) {
    switch (kind) {
    case SolverKind::sb:
        return split_bregman_denoise(z, cfg);
    case SolverKind::fb:
        return fb_denoise(z, cfg, pc);
    case SolverKind::nesterov:
        return nesterov_denoise(z, cfg, pc);
    case SolverKind::fista:
        return fista_denoise(z, cfg, pc);
    }
    throw std::invalid_argument("unknown solver");
}

ImageGrid generate(const std::string& name, Index rows, Index cols) {
    if (name == "parabolic" || name == "p1") return generate_parabolic(rows, cols);
    if (name == "saddle" || name == "p2") return generate_saddle(rows, cols);
    throw std::invalid_argument("unknown image '" + name + "' (expected parabolic or saddle)");
}

std::string csv_header() { return "image,solver,alpha,lambda,sigma,seed,psnr,snr,outer_iters,wall_seconds"; }

std::string csv_row(const BenchRow& r) {
    return r.image + "," + r.solver + "," + format_number(r.alpha) + "," + format_number(r.lambda) + "," +
           format_number(r.sigma) + "," + std::to_string(r.seed) + "," + format_number(r.psnr) + "," +
           format_number(r.snr) + "," + std::to_string(r.outer_iters) + "," + format_number(r.wall_seconds);
}

std::vector<BenchRow> run_bench(const RunManifest& m, int threads) {
    std::vector<BenchRow> rows;
    for (const auto& image : m.bench.images) {
        generate(image, 8, 8);  // reject unknown names before any work
        for (auto solver : m.bench.solvers) {
            for (double alpha : m.bench.alphas) {
                for (double lambda : m.bench.lambdas) {
                    for (auto seed : m.bench.seeds) {
                        BenchRow r;
                        r.image = image;
                        r.solver = to_string(solver);
                        r.alpha = alpha;
                        r.lambda = lambda;
                        r.sigma = m.noise.sigma;
                        r.seed = seed;
                        rows.push_back(r);
                    }
                }
            }
        }
    }

    auto run_row = [&m](BenchRow& r) {
        try {
            SolverConfig cfg = m.config;
            cfg.alpha = FracOrder(r.alpha);
            cfg.lambda = r.lambda;
            cfg.seed = r.seed;
            const ImageGrid clean = generate(r.image, m.bench.size, m.bench.size);
            const ImageGrid noisy = add_noise(clean, {r.sigma, r.seed});
            auto [u, rep] = denoise(noisy, parse_solver(r.solver), cfg, m.prox);
            r.psnr = psnr(u, clean);
            r.snr = snr(u, clean);
            r.outer_iters = rep.outer_iters;
            r.wall_seconds = rep.wall_seconds;
            if (!rep.converged) r.error = "iteration cap reached";
        } catch (const std::exception& e) {
            r.psnr = std::numeric_limits<double>::quiet_NaN();
            r.snr = std::numeric_limits<double>::quiet_NaN();
            r.error = e.what();
        }
    };

    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(rows.size())));
    if (workers == 1) {
        for (auto& r : rows) run_row(r);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < rows.size(); i = next++) run_row(rows[i]);
        });
    }
    for (auto& t : pool) t.join();
    return rows;
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("FRACTV_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return 1;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fractional-order total variation denoising"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (fallback: FRACTV_THREADS)");

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic test surface as PGM");
    std::string synth_name;
    long synth_rows = 0;
    long synth_cols = 0;
    std::string synth_out;
    double synth_sigma = 0.0;
    std::uint64_t synth_seed = 0;
    int synth_maxval = 65535;
    synth->add_option("name", synth_name, "parabolic | saddle")->required();
    synth->add_option("rows", synth_rows)->required();
    synth->add_option("cols", synth_cols)->required();
    synth->add_option("out", synth_out)->required();
    synth->add_option("--sigma", synth_sigma, "add Gaussian noise");
    synth->add_option("--seed", synth_seed);
    synth->add_option("--maxval", synth_maxval, "255 or 65535");

    // denoise
    auto* den = app.add_subcommand("denoise", "denoise a PGM image");
    std::string den_in;
    std::string den_out;
    std::string den_report;
    std::string den_ref;
    std::string den_config;
    SolverFlags den_flags;
    den->add_option("input", den_in, "input PGM")->required();
    den->add_option("--out", den_out, "output PGM")->required();
    den->add_option("--report", den_report, "JSON report path");
    den->add_option("--reference", den_ref, "clean image for psnr/snr");
    den->add_option("--config", den_config, "JSON manifest supplying defaults");
    den_flags.add(den, true);

    // bench
    auto* bench = app.add_subcommand("bench", "run a sweep and emit CSV rows");
    std::string bench_out;
    std::string bench_report;
    std::string bench_config;
    std::vector<std::string> bench_images;
    std::vector<std::string> bench_solvers;
    std::vector<double> bench_alphas;
    std::vector<double> bench_lambdas;
    std::vector<std::uint64_t> bench_seeds;
    long bench_size = 0;
    SolverFlags bench_flags;
    bench->add_option("--out", bench_out, "CSV path (default stdout)");
    bench->add_option("--report", bench_report, "JSON report path");
    bench->add_option("--config", bench_config, "JSON manifest supplying defaults");
    auto* o_images = bench->add_option("--image", bench_images, "comma list of generators")->delimiter(',');
    auto* o_solvers = bench->add_option("--solver", bench_solvers, "comma list of solvers")->delimiter(',');
    auto* o_alphas = bench->add_option("--alpha", bench_alphas, "comma list")->delimiter(',');
    auto* o_lambdas = bench->add_option("--lambda", bench_lambdas, "comma list")->delimiter(',');
    auto* o_seeds = bench->add_option("--seed", bench_seeds, "comma list")->delimiter(',');
    auto* o_size = bench->add_option("--size", bench_size, "image side length");
    bench_flags.add(bench, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        RunManifest m;
        m.threads = resolve_threads(threads);
        if (synth->parsed()) {
            m.command = "synth";
            generate(synth_name, 8, 8);
            if (synth_rows < 8 || synth_cols < 8) {
                err << "error: synth: rows and cols must be >= 8\n";
                return exit_usage;
            }
            if (synth_maxval != 255 && synth_maxval != 65535) {
                err << "error: --maxval must be 255 or 65535\n";
                return exit_usage;
            }
            m.generator = synth_name;
            m.rows = synth_rows;
            m.cols = synth_cols;
            m.out = synth_out;
            m.noise = {synth_sigma, synth_seed};
            return synth_command(m, synth_maxval, out);
        }
        if (den->parsed()) {
            if (!den_config.empty()) m = manifest_from_json(read_json_file(den_config), m);
            m.command = "denoise";
            m.threads = resolve_threads(threads > 0 ? threads : m.threads);
            den_flags.apply(m);
            m.input = den_in;
            m.out = den_out;
            if (!den_report.empty()) m.report = den_report;
            if (!den_ref.empty()) m.reference = den_ref;
            return denoise_command(m, out);
        }
        if (!bench_config.empty()) m = manifest_from_json(read_json_file(bench_config), m);
        m.command = "bench";
        m.threads = resolve_threads(threads > 0 ? threads : m.threads);
        bench_flags.apply(m);
        if (o_images->count() > 0) m.bench.images = bench_images;
        if (o_solvers->count() > 0) {
            m.bench.solvers.clear();
            for (const auto& s : bench_solvers) m.bench.solvers.push_back(parse_solver(s));
        }
        if (o_alphas->count() > 0) m.bench.alphas = bench_alphas;
        if (o_lambdas->count() > 0) m.bench.lambdas = bench_lambdas;
        if (o_seeds->count() > 0) m.bench.seeds = bench_seeds;
        if (o_size->count() > 0) m.bench.size = bench_size;
        if (!bench_out.empty()) m.out = bench_out;
        if (!bench_report.empty()) m.report = bench_report;
        for (double a : m.bench.alphas) FracOrder{a};
        if (m.bench.size < 8) throw DomainError("bench: --size must be >= 8");
        return bench_command(m, out, err);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const PgmError& e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return exit_nonconvergence;
    } catch (const std::invalid_argument& e) {  // includes ShapeError
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const nlohmann::json::exception& e) {
        err << "error: config: " << e.what() << "\n";
        return exit_usage;
    }
}

} // namespace fractv::cli
