#pragma once

// Discrete Grunwald-Letnikov fractional differentiation on image grids.
//
// The central alpha-order difference along one axis, under zero Dirichlet
// conditions, is a symmetric negative definite Toeplitz matrix B of order n
// whose first column is
//
//     t_0 = 2 w_1 / (2 h^a),  t_1 = (w_0 + w_2) / (2 h^a),  t_k = w_{k+1} / (2 h^a)
//
// with w_j = (-1)^j binom(a, j).  Images are stored column-major (rows are
// the x axis), so the x derivative of U is B_N U and the y derivative is
// U B_M^T.

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace fractv {

using Index = Eigen::Index;

/// N x M raster, row index along x, column index along y.
using ImageGrid = Eigen::MatrixXd;

/// Pair of same-shaped grids (x and y components), e.g. d, p or Phi.
struct VectorField {
    ImageGrid x;
    ImageGrid y;

    static VectorField zeros(Index rows, Index cols);

    Index rows() const { return x.rows(); }
    Index cols() const { return x.cols(); }

    VectorField& operator+=(const VectorField& o);
    VectorField& operator-=(const VectorField& o);
    VectorField& operator*=(double s);
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);

/// Frobenius inner product summed over both components.
double inner(const VectorField& a, const VectorField& b);
double squared_norm(const VectorField& a);

/// Throws DomainError if any entry is NaN or infinite.
void require_finite(const ImageGrid& u, const char* what);

enum class OrderRange {
    open_interval,         ///< 1 < alpha < 2, the model range
    allow_laplacian_limit  ///< additionally admits alpha == 2 (tests only)
};

/// Fractional order alpha.
class FracOrder {
public:
    explicit FracOrder(double alpha, OrderRange range = OrderRange::open_interval);

    /// alpha == 2, under which every stencil reduces to the classical one.
    static FracOrder laplacian_limit() { return FracOrder(2.0, OrderRange::allow_laplacian_limit); }

    double value() const noexcept { return alpha_; }

private:
    double alpha_;
};

struct GlCoefficients {
    FracOrder alpha;
    std::vector<double> omega;  ///< omega[0..count]
};

/// w_0 = 1, w_j = (1 - (1 + alpha) / j) w_{j-1}, for j = 1..count.
GlCoefficients gl_coefficients(FracOrder alpha, std::size_t count);

enum class MatvecPath {
    automatic,  ///< fft above FracOperator::fft_threshold, dense otherwise
    dense,      ///< explicit Toeplitz matrix, blocked matrix product
    fft         ///< circulant embedding of order 2n
};

/// Per-axis operator B (alpha-order central difference, zero Dirichlet).
///
/// Copies share one immutable cache (dense matrix, B^2, circulant symbol),
/// so the type is cheap to pass by value and safe to use from several
/// threads at once.
class FracOperator {
public:
    /// Sizes above this use the FFT path under MatvecPath::automatic.
    static constexpr Index fft_threshold = 256;
    /// Same for B^2, where the dense path is a single product with a cached B^2.
    static constexpr Index fft_threshold_squared = 768;

    /// Throws DomainError for n < 2 or h <= 0.
    static FracOperator build(FracOrder alpha, Index n, double h = 1.0);

    Index size() const noexcept;
    double mesh() const noexcept;
    FracOrder order() const noexcept;

    /// Toeplitz generator, already scaled by 1/(2 h^alpha).
    const Eigen::VectorXd& first_column() const noexcept;
    const Eigen::MatrixXd& dense() const noexcept;
    /// B^T B (= B^2), used by the Split-Bregman normal equations.
    const Eigen::MatrixXd& dense_squared() const noexcept;

    /// B * u, u has size() rows.
    ImageGrid apply_left(const ImageGrid& u, MatvecPath path = MatvecPath::automatic) const;
    /// u * B^T (= u * B), u has size() columns.
    ImageGrid apply_right(const ImageGrid& u, MatvecPath path = MatvecPath::automatic) const;
    /// B^2 * u and u * B^2.
    ImageGrid apply_left_sq(const ImageGrid& u, MatvecPath path = MatvecPath::automatic) const;
    ImageGrid apply_right_sq(const ImageGrid& u, MatvecPath path = MatvecPath::automatic) const;

private:
    struct Cache;
    explicit FracOperator(std::shared_ptr<const Cache> cache);

    bool use_fft(MatvecPath path, Index threshold = fft_threshold) const noexcept;
    ImageGrid fft_columns(const ImageGrid& u) const;

    std::shared_ptr<const Cache> cache_;
};

/// u^(alpha)_x = B_N U.  Throws ShapeError when op.size() != u.rows().
ImageGrid apply_x(const FracOperator& op, const ImageGrid& u, MatvecPath path = MatvecPath::automatic);
/// u^(alpha)_y = U B_M^T.  Throws ShapeError when op.size() != u.cols().
ImageGrid apply_y(const FracOperator& op, const ImageGrid& u, MatvecPath path = MatvecPath::automatic);

/// D U = (B_N U, U B_M^T).
VectorField frac_grad(const ImageGrid& u, const FracOperator& opx, const FracOperator& opy);

/// D* Phi = B_N^T Phi_x + Phi_y B_M, the adjoint of frac_grad.
ImageGrid frac_div_adjoint(const VectorField& phi, const FracOperator& opx, const FracOperator& opy);

/// Largest eigenvalue of B^T B, by power iteration (relative tolerance 1e-6).
/// Throws ConvergenceError carrying the last estimate after max_iter steps.
double operator_norm_sq(const FracOperator& op, int max_iter = 20000);

/// ||D||^2 = ||B_N||^2 + ||B_M||^2 (D* D is a Kronecker sum).
double operator_norm_sq(const FracOperator& opx, const FracOperator& opy, int max_iter = 20000);

/// One-sided shifted G-L sum: out_k = h^-a sum_{j=0}^{k+1} w_j f_{k-j+1},
/// with samples beyond the end of f taken as zero.
std::vector<double> left_gl_apply_1d(FracOrder alpha, std::span<const double> f, double h);

/// Relation between a pixel grid and the unit square it discretises.
///
/// An N x M image covers [0,1]^2 with spacing 1/(N-1) and 1/(M-1).  Solvers
/// work in pixel units: the objective is divided by h_ref^-alpha
/// (h_ref = the finer spacing), which leaves the minimiser unchanged and turns
/// the fidelity weight into lambda * lambda_scale.
struct GridScaling {
    double hx = 1.0;            ///< x mesh width in units of h_ref
    double hy = 1.0;            ///< y mesh width in units of h_ref
    double lambda_scale = 1.0;  ///< h_ref^alpha
};

GridScaling unit_square_scaling(Index rows, Index cols, FracOrder alpha);

} // namespace fractv
