#pragma once

#include "fractv/frac_ops.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>

namespace fractv {

/// Two paraboloid caps max(0, 1 - r^2/rho^2) on the unit square:
/// rho = 1.2 centred at (0,0) plus 0.4 x (rho = 0.4 centred at (0.62,0.62)).
/// Ranges over [0,1] with u(0,0) = 1 and u(1,1) = 0.  N, M >= 8.
ImageGrid generate_parabolic(Index rows, Index cols);

/// ((2x-1)(2y-1) + 1) / 2.  N, M >= 8.
ImageGrid generate_saddle(Index rows, Index cols);

/// SplitMix64 stream (Steele, Lea, Flood 2014).  Value type, never shared.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// (x >> 11) * 2^-53, in [0, 1).
    double uniform();

private:
    std::uint64_t state_;
};

/// Standard normal pairs by Box-Muller on SplitMix64:
///     u1 = ((x1 >> 11) + 1) * 2^-53,  u2 = (x2 >> 11) * 2^-53,
///     r = sqrt(-2 ln u1),  (r cos 2 pi u2, r sin 2 pi u2).
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}
    double next();

private:
    SplitMix64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// u + sigma * eta, eta drawn column-major from GaussianStream(seed).  Not clamped.
ImageGrid add_noise(const ImageGrid& u, const NoiseSpec& ns);

inline constexpr double identical_images = std::numeric_limits<double>::infinity();

struct MetricsReport {
    double snr = 0.0;
    double psnr = 0.0;
    double mse = 0.0;
};

double mse(const ImageGrid& u, const ImageGrid& u_star);
/// 10 log10(n (max u*)^2 / ||u - u*||^2); +inf when u == u*.
double psnr(const ImageGrid& u, const ImageGrid& u_star);
/// 10 log10(||u* - mean(u*)||^2 / ||u - u*||^2); +inf when u == u*.
double snr(const ImageGrid& u, const ImageGrid& u_star);
MetricsReport metrics(const ImageGrid& u, const ImageGrid& u_star);

/// Reads P2 or P5 PGM with maxval 255 or 65535, scaled to [0,1].
/// Throws PgmError (with byte offset) on malformed input, IoError when the
/// file cannot be opened.
ImageGrid load_pgm(const std::filesystem::path& path);
ImageGrid parse_pgm(const std::string& bytes);

enum class PgmFormat { ascii, binary };

/// Clamps to [0,1], scales by maxval and rounds half away from zero.
void save_pgm(const std::filesystem::path& path, const ImageGrid& u, int maxval = 255,
              PgmFormat format = PgmFormat::binary);
std::string format_pgm(const ImageGrid& u, int maxval = 255, PgmFormat format = PgmFormat::binary);

} // namespace fractv
