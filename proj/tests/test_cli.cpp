#include "fractv/cli.hpp"
#include "fractv/image_pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fractv;
using namespace fractv::cli;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "fractv");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() : path_(std::filesystem::temp_directory_path() / ("fractv_cli_" + std::to_string(counter_++))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) {
        if (!l.empty()) v.push_back(l);
    }
    return v;
}

// every CSV field except wall_seconds
std::string numeric_fields(const BenchRow& r) {
    BenchRow copy = r;
    copy.wall_seconds = 0.0;
    return csv_row(copy);
}

class EnvGuard {
public:
    explicit EnvGuard(const char* name) : name_(name) {
        if (const char* v = std::getenv(name)) saved_ = v;
    }
    ~EnvGuard() {
        if (saved_) {
            setenv(name_, saved_->c_str(), 1);
        } else {
            unsetenv(name_);
        }
    }

private:
    const char* name_;
    std::optional<std::string> saved_;
};

} // namespace

TEST_CASE("synth") {
    TempDir dir;
    const Outcome ok = invoke({"synth", "saddle", "16", "12", dir / "p2.pgm"});
    CHECK(ok.code == exit_ok);
    const ImageGrid u = load_pgm(dir / "p2.pgm");
    CHECK(u.rows() == 16);
    CHECK(u.cols() == 12);

    CHECK(invoke({"synth", "mountain", "16", "16", dir / "x.pgm"}).code == exit_usage);
    CHECK(invoke({"synth", "saddle", "0", "16", dir / "x.pgm"}).code == exit_usage);
    CHECK(invoke({"synth", "saddle", "16", "16", dir / "x.pgm", "--maxval", "100"}).code == exit_usage);
    CHECK(invoke({"synth", "saddle", "16"}).code == exit_usage);
    CHECK(invoke({"frobnicate"}).code == exit_usage);
    CHECK_FALSE(std::filesystem::exists(dir / "x.pgm"));

    CHECK(invoke({"synth", "parabolic", "16", "16", dir / "n.pgm", "--sigma", "0.05", "--seed", "3", "--maxval",
                  "65535"})
              .code == exit_ok);
    const ImageGrid noisy = load_pgm(dir / "n.pgm");
    CHECK((noisy - generate_parabolic(16, 16)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("denoise") {
    TempDir dir;
    const Outcome missing = invoke({"denoise", dir / "nope.pgm", "--out", dir / "o.pgm"});
    CHECK(missing.code == exit_io);
    CHECK(missing.err.find("nope.pgm") != std::string::npos);

    REQUIRE(invoke({"synth", "saddle", "24", "24", dir / "clean.pgm", "--maxval", "65535"}).code == exit_ok);
    const Outcome r = invoke({"denoise", dir / "clean.pgm", "--out", dir / "o.pgm", "--report", dir / "r.json",
                              "--solver", "fista", "--sigma", "0.04", "--seed", "5", "--alpha", "1.5"});
    CHECK((r.code == exit_ok || r.code == exit_nonconvergence));
    CHECK(load_pgm(dir / "o.pgm").rows() == 24);

    const auto doc = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(doc.at("report").at("solver") == "fista");
    CHECK(doc.at("manifest").at("config").at("alpha").get<double>() == 1.5);
    CHECK(doc.at("manifest").at("noise").at("seed").get<int>() == 5);
    CHECK(doc.at("report").contains("psnr"));

    CHECK(invoke({"denoise", dir / "clean.pgm", "--out", dir / "o.pgm", "--alpha", "2.5"}).code == exit_usage);
    CHECK(invoke({"denoise", dir / "clean.pgm", "--out", dir / "o.pgm", "--solver", "magic"}).code == exit_usage);

    std::ofstream(dir / "bad.pgm") << "P2 4 4 255 1 2 3";
    const Outcome bad = invoke({"denoise", dir / "bad.pgm", "--out", dir / "o.pgm"});
    CHECK(bad.code == exit_io);
    CHECK(bad.err.find("byte offset") != std::string::npos);
}

TEST_CASE("config file supplies defaults and flags override") {
    TempDir dir;
    REQUIRE(invoke({"synth", "saddle", "20", "20", dir / "c.pgm"}).code == exit_ok);
    std::ofstream(dir / "cfg.json") << R"({"solver": "fb", "config": {"mu": 2.5, "alpha": 1.4, "max_outer": 7}})";
    invoke({"denoise", dir / "c.pgm", "--out", dir / "o.pgm", "--report", dir / "r.json", "--config",
            dir / "cfg.json", "--alpha", "1.7"});
    const auto m = nlohmann::json::parse(slurp(dir / "r.json")).at("manifest");
    CHECK(m.at("solver") == "fb");
    CHECK(m.at("config").at("mu").get<double>() == 2.5);
    CHECK(m.at("config").at("max_outer").get<int>() == 7);
    CHECK(m.at("config").at("alpha").get<double>() == 1.7);

    // unreadable file content is an I/O failure, a readable but invalid value a usage error
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(invoke({"denoise", dir / "c.pgm", "--out", dir / "o.pgm", "--config", dir / "broken.json"}).code ==
          exit_io);
    std::ofstream(dir / "invalid.json") << R"({"config": {"mu": -1}})";
    CHECK(invoke({"denoise", dir / "c.pgm", "--out", dir / "o.pgm", "--config", dir / "invalid.json"}).code ==
          exit_usage);
}

TEST_CASE("bench emits one row per combination") {
    TempDir dir;
    const Outcome r = invoke({"bench", "--image", "saddle", "--size", "24", "--sigma", "0.04", "--out",
                              dir / "b.csv", "--report", dir / "b.json"});
    CHECK((r.code == exit_ok || r.code == exit_nonconvergence));
    const auto rows = lines(slurp(dir / "b.csv"));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "image,solver,alpha,lambda,sigma,seed,psnr,snr,outer_iters,wall_seconds");
    CHECK(rows[1].rfind("saddle,sb,", 0) == 0);
    CHECK(rows[2].rfind("saddle,fb,", 0) == 0);
    CHECK(rows[3].rfind("saddle,nesterov,", 0) == 0);
    CHECK(rows[4].rfind("saddle,fista,", 0) == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "b.json")).at("rows").size() == 4);

    const Outcome stdout_run = invoke({"bench", "--image", "saddle", "--solver", "sb", "--alpha", "1.3,1.6",
                                       "--lambda", "400,3800", "--seed", "1,2", "--size", "16"});
    CHECK(lines(stdout_run.out).size() == 9);

    CHECK(invoke({"bench", "--image", "nothing", "--size", "16"}).code == exit_usage);
    CHECK(invoke({"bench", "--alpha", "0.5", "--size", "16"}).code == exit_usage);
}

TEST_CASE("bench rows do not depend on the thread count") {
    RunManifest m;
    m.bench.images = {"parabolic", "saddle"};
    m.bench.size = 20;
    m.bench.seeds = {1, 2};
    m.noise.sigma = 0.04;
    const auto one = run_bench(m, 1);
    const auto many = run_bench(m, 4);
    const auto again = run_bench(m, 1);
    REQUIRE(one.size() == 16);
    REQUIRE(many.size() == 16);
    for (std::size_t k = 0; k < one.size(); ++k) {
        CHECK(numeric_fields(one[k]) == numeric_fields(many[k]));
        CHECK(numeric_fields(one[k]) == numeric_fields(again[k]));
    }
}

TEST_CASE("failed rows are recorded and the sweep continues") {
    RunManifest m;
    m.bench.images = {"saddle"};
    m.bench.solvers = {SolverKind::sb};
    m.bench.size = 16;
    m.bench.lambdas = {-1.0, 3800.0};
    m.noise.sigma = 0.04;
    const auto rows = run_bench(m, 1);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].error.empty());
    CHECK(std::isnan(rows[0].psnr));
    CHECK(std::isfinite(rows[1].psnr));
    CHECK(csv_row(rows[0]).find("nan") != std::string::npos);
}

TEST_CASE("csv rows round-trip doubles") {
    BenchRow r;
    r.image = "saddle";
    r.solver = "sb";
    r.alpha = 1.6;
    r.lambda = 12000.0;
    r.sigma = 10.0 / 255.0;
    r.seed = 4;
    r.psnr = 50.123456789012345;
    r.snr = 1.0 / 3.0;
    r.outer_iters = 17;
    r.wall_seconds = 0.25;
    const std::string row = csv_row(r);
    std::vector<std::string> f;
    std::stringstream ss(row);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    REQUIRE(f.size() == 10);
    CHECK(std::stod(f[4]) == r.sigma);
    CHECK(std::stod(f[6]) == r.psnr);
    CHECK(std::stod(f[7]) == r.snr);
    CHECK(f[8] == "17");
}

TEST_CASE("manifest JSON round trip") {
    RunManifest m;
    m.command = "bench";
    m.generator = "saddle";
    m.noise = {0.05, 11};
    m.solver = SolverKind::nesterov;
    m.config.set_criterion(Criterion::ssc);
    m.config.alpha = FracOrder(1.3);
    m.config.lambda = 3800.0;
    m.config.boundary_lift = false;
    m.prox.momentum = FistaMomentum::standard;
    m.prox.inner_steps = 25;
    m.bench.solvers = {SolverKind::fista, SolverKind::sb};
    m.bench.lambdas = {400.0, 60000.0};
    m.threads = 3;
    const nlohmann::json j = to_json(m);
    const RunManifest back = manifest_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.config.tol_error == 1e-10);
    CHECK(back.config.max_inner == 25);

    // absent fields keep the base values
    const RunManifest partial = manifest_from_json(nlohmann::json{{"config", {{"lambda", 5.0}}}}, m);
    CHECK(partial.config.lambda == 5.0);
    CHECK(partial.config.alpha.value() == 1.3);
}

TEST_CASE("thread count resolution") {
    EnvGuard guard("FRACTV_THREADS");
    unsetenv("FRACTV_THREADS");
    CHECK(resolve_threads(0) == 1);
    setenv("FRACTV_THREADS", "3", 1);
    CHECK(resolve_threads(0) == 3);
    CHECK(resolve_threads(2) == 2);
    setenv("FRACTV_THREADS", "many", 1);
    CHECK(resolve_threads(0) == 1);
}
