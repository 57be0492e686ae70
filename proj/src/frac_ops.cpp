#include "fractv/frac_ops.hpp"

#include "fractv/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

namespace fractv {

namespace {

// FFTW's planner is not reentrant; execution with new-array calls is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_real(n)) {}
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    double* data;
};

struct FftwComplexBuffer {
    explicit FftwComplexBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
    ~FftwComplexBuffer() { fftw_free(data); }
    FftwComplexBuffer(const FftwComplexBuffer&) = delete;
    FftwComplexBuffer& operator=(const FftwComplexBuffer&) = delete;
    fftw_complex* data;
};

// Smallest 2^a 3^b 5^c 7^d >= n; FFTW is fastest on such lengths.
Index smooth_length(Index n) {
    for (Index m = n;; ++m) {
        Index r = m;
        for (Index f : {2, 3, 5, 7}) {
            while (r % f == 0) r /= f;
        }
        if (r == 1) return m;
    }
}

void check_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// VectorField

VectorField VectorField::zeros(Index rows, Index cols) {
    return {ImageGrid::Zero(rows, cols), ImageGrid::Zero(rows, cols)};
}

VectorField& VectorField::operator+=(const VectorField& o) {
    x += o.x;
    y += o.y;
    return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
    x -= o.x;
    y -= o.y;
    return *this;
}

VectorField& VectorField::operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

double inner(const VectorField& a, const VectorField& b) {
    check_same_shape(a.x, b.x, "inner");
    return (a.x.array() * b.x.array()).sum() + (a.y.array() * b.y.array()).sum();
}

double squared_norm(const VectorField& a) { return a.x.squaredNorm() + a.y.squaredNorm(); }

void require_finite(const ImageGrid& u, const char* what) {
    if (!u.allFinite()) {
        throw DomainError(std::string(what) + ": non-finite entries");
    }
}

// ---------------------------------------------------------------------------
// Coefficients

FracOrder::FracOrder(double alpha, OrderRange range) : alpha_(alpha) {
    const bool open_ok = alpha > 1.0 && alpha < 2.0;
    const bool limit_ok = range == OrderRange::allow_laplacian_limit && alpha == 2.0;
    if (!(open_ok || limit_ok)) {
        throw DomainError("fractional order must satisfy 1 < alpha < 2, got " + std::to_string(alpha));
    }
}

GlCoefficients gl_coefficients(FracOrder alpha, std::size_t count) {
    if (count < 1) {
        throw DomainError("gl_coefficients: count must be >= 1");
    }
    const double a = alpha.value();
    std::vector<double> w(count + 1);
    w[0] = 1.0;
    w[1] = -a;  // 1 - (1 + a) rounds differently
    for (std::size_t j = 2; j <= count; ++j) {
        w[j] = (1.0 - (1.0 + a) / static_cast<double>(j)) * w[j - 1];
    }
    return {alpha, std::move(w)};
}

// ---------------------------------------------------------------------------
// FracOperator

struct FracOperator::Cache {
    FracOrder alpha;
    Index n;
    double h;
    Eigen::VectorXd first_col;
    Eigen::MatrixXd dense;
    Eigen::MatrixXd dense_sq;

    // circulant embedding of order m >= 2n - 1: real symbol (the embedding is symmetric)
    Index m = 0;
    Eigen::VectorXd symbol;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    Cache(FracOrder a, Index size, double mesh) : alpha(a), n(size), h(mesh) {}
    Cache(const Cache&) = delete;
    Cache& operator=(const Cache&) = delete;

    ~Cache() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (forward != nullptr) fftw_destroy_plan(forward);
        if (backward != nullptr) fftw_destroy_plan(backward);
    }
};

FracOperator::FracOperator(std::shared_ptr<const Cache> cache) : cache_(std::move(cache)) {}

FracOperator FracOperator::build(FracOrder alpha, Index n, double h) {
    if (n < 2) {
        throw DomainError("build_operator: n must be >= 2, got " + std::to_string(n));
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw DomainError("build_operator: mesh width must be positive");
    }

    auto cache = std::make_shared<Cache>(alpha, n, h);
    const auto w = gl_coefficients(alpha, static_cast<std::size_t>(n)).omega;
    const double scale = 2.0 * std::pow(h, alpha.value());

    Eigen::VectorXd& t = cache->first_col;
    t.resize(n);
    t[0] = 2.0 * w[1] / scale;
    t[1] = (w[0] + w[2]) / scale;
    for (Index k = 2; k < n; ++k) {
        t[k] = w[static_cast<std::size_t>(k + 1)] / scale;
    }

    cache->dense.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            cache->dense(i, j) = t[std::abs(i - j)];
        }
    }
    cache->dense_sq.noalias() = cache->dense * cache->dense;

    // Circulant embedding c = [t_0 .. t_{n-1}, 0 .. 0, t_{n-1} .. t_1].
    const Index m = smooth_length(2 * n - 1);
    const Index half = m / 2 + 1;
    cache->m = m;
    FftwBuffer c(static_cast<std::size_t>(m));
    FftwComplexBuffer chat(static_cast<std::size_t>(half));
    std::fill(c.data, c.data + m, 0.0);
    for (Index k = 0; k < n; ++k) c.data[k] = t[k];
    for (Index k = 1; k < n; ++k) c.data[m - k] = t[k];
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        cache->forward = fftw_plan_dft_r2c_1d(static_cast<int>(m), c.data, chat.data, FFTW_ESTIMATE);
        cache->backward = fftw_plan_dft_c2r_1d(static_cast<int>(m), chat.data, c.data, FFTW_ESTIMATE);
    }
    fftw_execute_dft_r2c(cache->forward, c.data, chat.data);
    cache->symbol.resize(half);
    for (Index k = 0; k < half; ++k) {
        cache->symbol[k] = chat.data[k][0] / static_cast<double>(m);
    }

    return FracOperator(std::move(cache));
}

Index FracOperator::size() const noexcept { return cache_->n; }
double FracOperator::mesh() const noexcept { return cache_->h; }
FracOrder FracOperator::order() const noexcept { return cache_->alpha; }
const Eigen::VectorXd& FracOperator::first_column() const noexcept { return cache_->first_col; }
const Eigen::MatrixXd& FracOperator::dense() const noexcept { return cache_->dense; }
const Eigen::MatrixXd& FracOperator::dense_squared() const noexcept { return cache_->dense_sq; }

bool FracOperator::use_fft(MatvecPath path, Index threshold) const noexcept {
    switch (path) {
    case MatvecPath::dense:
        return false;
    case MatvecPath::fft:
        return true;
    case MatvecPath::automatic:
        break;
    }
    return cache_->n > threshold;
}

ImageGrid FracOperator::fft_columns(const ImageGrid& u) const {
    const Index n = cache_->n;
    const Index m = cache_->m;
    const Index half = m / 2 + 1;
    ImageGrid out(n, u.cols());
    FftwBuffer buf(static_cast<std::size_t>(m));
    FftwComplexBuffer spec(static_cast<std::size_t>(half));
    const Eigen::VectorXd& sym = cache_->symbol;
    for (Index j = 0; j < u.cols(); ++j) {
        std::copy_n(u.col(j).data(), n, buf.data);
        std::fill(buf.data + n, buf.data + m, 0.0);
        fftw_execute_dft_r2c(cache_->forward, buf.data, spec.data);
        for (Index k = 0; k < half; ++k) {
            spec.data[k][0] *= sym[k];
            spec.data[k][1] *= sym[k];
        }
        fftw_execute_dft_c2r(cache_->backward, spec.data, buf.data);
        std::copy_n(buf.data, n, out.col(j).data());
    }
    return out;
}

ImageGrid FracOperator::apply_left(const ImageGrid& u, MatvecPath path) const {
    if (u.rows() != cache_->n) {
        throw ShapeError("apply_x: operator order " + std::to_string(cache_->n) + " does not match " +
                         std::to_string(u.rows()) + " rows");
    }
    if (use_fft(path)) {
        return fft_columns(u);
    }
    ImageGrid out(u.rows(), u.cols());
    out.noalias() = cache_->dense * u;
    return out;
}

ImageGrid FracOperator::apply_right(const ImageGrid& u, MatvecPath path) const {
    if (u.cols() != cache_->n) {
        throw ShapeError("apply_y: operator order " + std::to_string(cache_->n) + " does not match " +
                         std::to_string(u.cols()) + " columns");
    }
    if (use_fft(path)) {
        const ImageGrid ut = u.transpose();
        return fft_columns(ut).transpose();
    }
    ImageGrid out(u.rows(), u.cols());
    out.noalias() = u * cache_->dense;
    return out;
}

ImageGrid FracOperator::apply_left_sq(const ImageGrid& u, MatvecPath path) const {
    if (use_fft(path, fft_threshold_squared)) {
        return apply_left(apply_left(u, path), path);
    }
    if (u.rows() != cache_->n) {
        throw ShapeError("apply_x: operator order " + std::to_string(cache_->n) + " does not match " +
                         std::to_string(u.rows()) + " rows");
    }
    ImageGrid out(u.rows(), u.cols());
    out.noalias() = cache_->dense_sq * u;
    return out;
}

ImageGrid FracOperator::apply_right_sq(const ImageGrid& u, MatvecPath path) const {
    if (use_fft(path, fft_threshold_squared)) {
        return apply_right(apply_right(u, path), path);
    }
    if (u.cols() != cache_->n) {
        throw ShapeError("apply_y: operator order " + std::to_string(cache_->n) + " does not match " +
                         std::to_string(u.cols()) + " columns");
    }
    ImageGrid out(u.rows(), u.cols());
    out.noalias() = u * cache_->dense_sq;
    return out;
}

ImageGrid apply_x(const FracOperator& op, const ImageGrid& u, MatvecPath path) {
    return op.apply_left(u, path);
}

ImageGrid apply_y(const FracOperator& op, const ImageGrid& u, MatvecPath path) {
    return op.apply_right(u, path);
}

VectorField frac_grad(const ImageGrid& u, const FracOperator& opx, const FracOperator& opy) {
    return {opx.apply_left(u), opy.apply_right(u)};
}

ImageGrid frac_div_adjoint(const VectorField& phi, const FracOperator& opx, const FracOperator& opy) {
    check_same_shape(phi.x, phi.y, "frac_div_adjoint");
    ImageGrid out = opx.apply_left(phi.x);
    out += opy.apply_right(phi.y);
    return out;
}

double operator_norm_sq(const FracOperator& op, int max_iter) {
    const Index n = op.size();
    // Start near the dominant eigenvector: B is negative definite with its
    // largest-magnitude eigenvalue at the highest frequency.
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) {
        const double s = std::sin(std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n + 1));
        v[i] = (i % 2 == 0 ? 1.0 : -1.0) * s;
    }
    v.normalize();

    const Eigen::MatrixXd& b = op.dense();
    double estimate = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = b * v;
        const double next = w.squaredNorm();  // Rayleigh quotient of B^2 at unit v
        w = b * w;
        const double wn = w.norm();
        if (!(wn > 0.0)) {
            throw ConvergenceError("operator_norm_sq: iterate collapsed to zero", next);
        }
        v = w / wn;
        if (it > 0 && std::abs(next - estimate) <= 1e-6 * next) {
            return next;
        }
        estimate = next;
    }
    throw ConvergenceError("operator_norm_sq: power iteration did not converge", estimate);
}

double operator_norm_sq(const FracOperator& opx, const FracOperator& opy, int max_iter) {
    return operator_norm_sq(opx, max_iter) + operator_norm_sq(opy, max_iter);
}

std::vector<double> left_gl_apply_1d(FracOrder alpha, std::span<const double> f, double h) {
    if (!(h > 0.0)) {
        throw DomainError("left_gl_apply_1d: h must be positive");
    }
    const std::size_t n = f.size();
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    const auto w = gl_coefficients(alpha, n + 1).omega;
    const double scale = std::pow(h, -alpha.value());
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        // j runs 0..k+1, sample index k+1-j; index n (j == 0 at k == n-1) is out of range
        for (std::size_t j = 0; j <= k + 1; ++j) {
            const std::size_t idx = k + 1 - j;
            if (idx < n) acc += w[j] * f[idx];
        }
        out[k] = scale * acc;
    }
    return out;
}

GridScaling unit_square_scaling(Index rows, Index cols, FracOrder alpha) {
    if (rows < 2 || cols < 2) {
        throw DomainError("unit_square_scaling: image must be at least 2x2");
    }
    const double hx = 1.0 / static_cast<double>(rows - 1);
    const double hy = 1.0 / static_cast<double>(cols - 1);
    const double href = std::min(hx, hy);
    return {hx / href, hy / href, std::pow(href, alpha.value())};
}

} // namespace fractv
