#include "fractv/errors.hpp"
#include "fractv/image_pipeline.hpp"
#include "fractv/model.hpp"
#include "fractv/solver_opt.hpp"
#include "fractv/solver_sb.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace fractv;

namespace {

ImageGrid random_grid(Index n, Index m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ImageGrid g(n, m);
    for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < n; ++i) g(i, j) = u(rng);
    }
    return g;
}

double rel(const ImageGrid& a, const ImageGrid& b) { return (a - b).norm() / b.norm(); }

} // namespace

TEST_CASE("shrink examples") {
    VectorField b{ImageGrid::Constant(1, 1, 3.0), ImageGrid::Constant(1, 1, 4.0)};
    const VectorField d = shrink(b, 1.0);
    CHECK(d.x(0, 0) == doctest::Approx(2.4).epsilon(1e-15));
    CHECK(d.y(0, 0) == doctest::Approx(3.2).epsilon(1e-15));

    std::mt19937_64 rng(1);
    VectorField small{0.1 * random_grid(5, 6, rng), 0.1 * random_grid(5, 6, rng)};
    const VectorField z = shrink(small, 0.15);
    CHECK(z.x.isZero(0.0));
    CHECK(z.y.isZero(0.0));

    const VectorField zero = shrink(VectorField::zeros(3, 3), 1.0);
    CHECK(zero.x.isZero(0.0));
    CHECK_THROWS_AS(shrink(b, 0.0), DomainError);
}

TEST_CASE("shrink matches a lattice search") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> comp(-2.0, 2.0);
    std::uniform_real_distribution<double> thr(0.1, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Vector2d b(comp(rng), comp(rng));
        const double t = thr(rng);
        const VectorField d = shrink({ImageGrid::Constant(1, 1, b.x()), ImageGrid::Constant(1, 1, b.y())}, t);
        const Eigen::Vector2d ref = oracle::lattice_shrink(b, t);
        CHECK(std::abs(d.x(0, 0) - ref.x()) <= 1e-3);
        CHECK(std::abs(d.y(0, 0) - ref.y()) <= 1e-3);
    }
}

TEST_CASE("apply_W against the assembled matrix") {
    std::mt19937_64 rng(11);
    const auto opx = FracOperator::build(FracOrder(1.6), 8, 0.7);
    const auto opy = FracOperator::build(FracOrder(1.6), 8, 1.3);
    const double lb = 2.5;
    const Eigen::MatrixXd w = oracle::assembled_W(oracle::toeplitz(1.6, 8, 0.7), oracle::toeplitz(1.6, 8, 1.3), lb);
    for (int trial = 0; trial < 5; ++trial) {
        const ImageGrid u = random_grid(8, 8, rng);
        const ImageGrid ref = oracle::unvec(w * oracle::vec(u), 8, 8);
        CHECK((apply_W(u, opx, opy, lb) - ref).cwiseAbs().maxCoeff() <= 1e-10);
    }
    CHECK(apply_W(ImageGrid::Zero(8, 8), opx, opy, lb).isZero(0.0));
    CHECK_THROWS_AS(apply_W(ImageGrid::Zero(8, 7), opx, opy, lb), ShapeError);
}

TEST_CASE("W is positive definite through the three-term identity") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> a(1.05, 1.95);
    for (int trial = 0; trial < 100; ++trial) {
        const double alpha = a(rng);
        const auto opx = FracOperator::build(FracOrder(alpha), 12);
        const auto opy = FracOperator::build(FracOrder(alpha), 9);
        const double lb = 0.01 * (trial + 1);
        const ImageGrid u = random_grid(12, 9, rng);
        const double wuu = (apply_W(u, opx, opy, lb).array() * u.array()).sum();
        const double terms = (opx.dense() * u).squaredNorm() + (u * opy.dense().transpose()).squaredNorm() +
                             lb * u.squaredNorm();
        CHECK(wuu > 0.0);
        CHECK(wuu == doctest::Approx(terms).epsilon(1e-12));
    }
}

TEST_CASE("assemble_rhs") {
    std::mt19937_64 rng(17);
    const Index n = 7;
    const Index m = 5;
    const auto opx = FracOperator::build(FracOrder(1.3), n);
    const auto opy = FracOperator::build(FracOrder(1.3), m);
    const ImageGrid z = random_grid(n, m, rng);
    const double lambda = 3.0;
    const double mu = 1.1;

    const VectorField zero = VectorField::zeros(n, m);
    CHECK(assemble_rhs(ImageGrid::Zero(n, m), zero, zero, lambda, mu, opx, opy).isZero(0.0));
    CHECK((assemble_rhs(z, zero, zero, lambda, mu, opx, opy) - (lambda / mu) * z).cwiseAbs().maxCoeff() <= 1e-15);

    const VectorField d{random_grid(n, m, rng), random_grid(n, m, rng)};
    const VectorField p{random_grid(n, m, rng), random_grid(n, m, rng)};
    const Eigen::MatrixXd bx = oracle::toeplitz(1.3, n, 1.0);
    const Eigen::MatrixXd by = oracle::toeplitz(1.3, m, 1.0);
    // Dx = Bx U, Dy = U By^T; the adjoint is Bx^T Phi_x + Phi_y By
    const Eigen::MatrixXd ref = (lambda / mu) * z + oracle::naive_product(bx.transpose(), d.x) +
                                oracle::naive_product(d.y, by) +
                                (1.0 / mu) * (oracle::naive_product(bx.transpose(), p.x) + oracle::naive_product(p.y, by));
    CHECK((assemble_rhs(z, d, p, lambda, mu, opx, opy) - ref).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK_THROWS_AS(assemble_rhs(z, VectorField::zeros(n, m + 1), p, lambda, mu, opx, opy), ShapeError);
}

TEST_CASE("cg_solve trivial systems") {
    const auto op = FracOperator::build(FracOrder(1.6), 10);
    const LinearOperator w = [&](const ImageGrid& v) { return apply_W(v, op, op, 1e8); };
    const CgResult zero = cg_solve(w, ImageGrid::Zero(10, 10), 1e-10, 50);
    CHECK(zero.iterations == 0);
    CHECK(zero.u.isZero(0.0));
    CHECK(zero.reached_tol);

    std::mt19937_64 rng(19);
    const ImageGrid f = random_grid(10, 10, rng);
    const CgResult r = cg_solve(w, f, 1e-6, 50);
    CHECK(r.iterations <= 2);
    CHECK(rel(r.u, f / 1e8) <= 1e-6);

    const LinearOperator neg = [](const ImageGrid& v) { return ImageGrid(-v); };
    CHECK_THROWS_AS(cg_solve(neg, f, 1e-6, 10), ConvergenceError);

    const CgResult capped = cg_solve([&](const ImageGrid& v) { return apply_W(v, op, op, 1e-3); }, f, 1e-14, 1);
    CHECK(capped.iterations == 1);
    CHECK_FALSE(capped.reached_tol);
}

TEST_CASE("cg_solve against a dense solve with monotone W-norm error") {
    std::mt19937_64 rng(23);
    const Index n = 16;
    const auto opx = FracOperator::build(FracOrder(1.4), n);
    const auto opy = FracOperator::build(FracOrder(1.4), n);
    const double lb = 0.5;
    const Eigen::MatrixXd wd = oracle::assembled_W(oracle::toeplitz(1.4, n, 1.0), oracle::toeplitz(1.4, n, 1.0), lb);
    const ImageGrid f = random_grid(n, n, rng);
    const ImageGrid exact = oracle::unvec(wd.llt().solve(oracle::vec(f)), n, n);

    const LinearOperator w = [&](const ImageGrid& v) { return apply_W(v, opx, opy, lb); };
    auto werr = [&](const ImageGrid& u) {
        const Eigen::VectorXd e = oracle::vec(u - exact);
        return std::sqrt(e.dot(wd * e));
    };
    std::vector<double> trace{werr(ImageGrid::Zero(n, n))};
    const double tol = 1e-10;
    const CgResult r = cg_solve(w, f, tol, 500, nullptr, [&](int, const ImageGrid& u, double) {
        trace.push_back(werr(u));
    });
    CHECK(r.reached_tol);
    CHECK(rel(r.u, exact) <= 10.0 * tol * wd.norm() / lb);
    CHECK(rel(r.u, exact) <= 1e-8);
    for (std::size_t k = 1; k < trace.size(); ++k) {
        CHECK(trace[k] <= trace[k - 1] * (1.0 + 1e-12));
    }

    // warm start from the answer needs no work
    const CgResult warm = cg_solve(w, f, 1e-6, 500, &r.u);
    CHECK(warm.iterations == 0);
}

TEST_CASE("energy convexity spot check") {
    std::mt19937_64 rng(29);
    const auto opx = FracOperator::build(FracOrder(1.6), 20);
    const auto opy = FracOperator::build(FracOrder(1.6), 15);
    std::uniform_real_distribution<double> th(0.01, 0.99);
    for (int trial = 0; trial < 50; ++trial) {
        const ImageGrid z = random_grid(20, 15, rng);
        const ImageGrid u = random_grid(20, 15, rng);
        const ImageGrid v = random_grid(20, 15, rng);
        const double t = th(rng);
        const double lhs = model_energy(ImageGrid(t * u + (1.0 - t) * v), z, 3.0, opx, opy);
        const double rhs = t * model_energy(u, z, 3.0, opx, opy) + (1.0 - t) * model_energy(v, z, 3.0, opx, opy);
        CHECK(lhs <= rhs + 1e-10);
    }
}

TEST_CASE("split_bregman_denoise on a constant image") {
    const SolverConfig cfg;
    const ImageGrid z = ImageGrid::Constant(32, 32, 0.37);
    const auto [u, report] = split_bregman_denoise(z, cfg);
    CHECK((u - z).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(report.energy_trace.back() <= 1e-10);
    CHECK(report.converged);
}

TEST_CASE("split_bregman_denoise lowers the energy and is deterministic") {
    const SolverConfig cfg;
    const ImageGrid clean = generate_saddle(48, 48);
    const ImageGrid z = add_noise(clean, {10.0 / 255.0, 5});
    const auto [u, report] = split_bregman_denoise(z, cfg);

    REQUIRE(report.energy_trace.size() == static_cast<std::size_t>(report.outer_iters) + 1);
    CHECK(report.energy_trace.back() <= report.energy_trace.front());

    // recompute the final energy independently from the restored output
    const Problem pb = make_problem(z, cfg);
    const ImageGrid lifted_u = (u - pb.lifted.lift.e1 - pb.lifted.lift.e2).block(1, 1, 46, 46);
    const double e_final = model_energy(lifted_u, pb.z, pb.lambda, pb.opx, pb.opy);
    const double e_input = model_energy(pb.z, pb.z, pb.lambda, pb.opx, pb.opy);
    CHECK(e_final == doctest::Approx(report.energy_trace.back()).epsilon(1e-9));
    CHECK(e_input == doctest::Approx(report.energy_trace.front()).epsilon(1e-12));
    CHECK(e_final <= e_input);
    CHECK(psnr(u, clean) > psnr(z, clean));

    const auto [u2, report2] = split_bregman_denoise(z, cfg);
    CHECK((u2 - u).isZero(0.0));
    CHECK(report2.energy_trace == report.energy_trace);
    CHECK(report2.cg_iters_total == report.cg_iters_total);
}

TEST_CASE("Split-Bregman and FISTA agree on a small saddle") {
    SolverConfig cfg = SolverConfig{}.with_criterion(Criterion::ssc);
    const ImageGrid z = add_noise(generate_saddle(64, 64), {10.0 / 255.0, 2});
    const auto [u_sb, r_sb] = split_bregman_denoise(z, cfg);
    const auto [u_fista, r_fista] = fista_denoise(z, cfg, ProxConfig::for_criterion(cfg.criterion));
    MESSAGE("SB outer " << r_sb.outer_iters << ", FISTA outer " << r_fista.outer_iters);
    CHECK(rel(u_sb, u_fista) <= 1e-2);
}
