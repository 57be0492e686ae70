#include "fractv/image_pipeline.hpp"

#include "fractv/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fractv {

namespace {

void require_generator_size(Index rows, Index cols) {
    if (rows < 8 || cols < 8) {
        throw DomainError("generator: image must be at least 8x8, got " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    }
}

template <typename F>
ImageGrid sample_unit_square(Index rows, Index cols, F f) {
    ImageGrid u(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        const double y = static_cast<double>(j) / static_cast<double>(cols - 1);
        for (Index i = 0; i < rows; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(rows - 1);
            u(i, j) = f(x, y);
        }
    }
    return u;
}

double cap(double x, double y, double cx, double cy, double rho) {
    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    return std::max(0.0, 1.0 - r2 / (rho * rho));
}

void require_same_shape(const ImageGrid& u, const ImageGrid& v, const char* what) {
    if (u.rows() != v.rows() || u.cols() != v.cols()) {
        throw ShapeError(std::string(what) + ": images differ in shape");
    }
}

// Header tokenizer for the netpbm grammar: whitespace and '#' comments.
class PgmReader {
public:
    explicit PgmReader(const std::string& bytes) : s_(bytes) {}

    std::size_t pos() const { return pos_; }

    void skip_space_and_comments() {
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == '#') {
                while (pos_ < s_.size() && s_[pos_] != '\n' && s_[pos_] != '\r') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    unsigned long number(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        if (pos_ >= s_.size()) {
            throw PgmError(std::string("unexpected end of file, expected ") + what, pos_);
        }
        unsigned long v = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            v = v * 10 + static_cast<unsigned long>(s_[pos_] - '0');
            if (v > 1'000'000'000UL) throw PgmError(std::string(what) + " out of range", start);
            ++pos_;
        }
        if (pos_ == start) {
            throw PgmError(std::string("expected ") + what, start);
        }
        if (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '#') {
            throw PgmError(std::string("malformed ") + what, pos_);
        }
        return v;
    }

    const std::string& bytes() const { return s_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

ImageGrid generate_parabolic(Index rows, Index cols) {
    require_generator_size(rows, cols);
    return sample_unit_square(rows, cols, [](double x, double y) {
        return cap(x, y, 0.0, 0.0, 1.2) + 0.4 * cap(x, y, 0.62, 0.62, 0.4);
    });
}

ImageGrid generate_saddle(Index rows, Index cols) {
    require_generator_size(rows, cols);
    return sample_unit_square(rows, cols,
                              [](double x, double y) { return 0.5 * ((2.0 * x - 1.0) * (2.0 * y - 1.0) + 1.0); });
}

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double GaussianStream::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = static_cast<double>((rng_.next() >> 11) + 1) * 0x1.0p-53;
    const double u2 = rng_.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

ImageGrid add_noise(const ImageGrid& u, const NoiseSpec& ns) {
    if (!(ns.sigma >= 0.0) || !std::isfinite(ns.sigma)) {
        throw DomainError("add_noise: sigma must be finite and >= 0");
    }
    if (ns.sigma == 0.0) return u;
    GaussianStream g(ns.seed);
    ImageGrid out(u.rows(), u.cols());
    const Index n = u.size();
    for (Index k = 0; k < n; ++k) {
        out.data()[k] = u.data()[k] + ns.sigma * g.next();
    }
    return out;
}

double mse(const ImageGrid& u, const ImageGrid& u_star) {
    require_same_shape(u, u_star, "mse");
    return (u - u_star).squaredNorm() / static_cast<double>(u.size());
}

double psnr(const ImageGrid& u, const ImageGrid& u_star) {
    require_same_shape(u, u_star, "psnr");
    const double err = (u - u_star).squaredNorm();
    if (err == 0.0) return identical_images;
    const double peak = u_star.maxCoeff();
    return 10.0 * std::log10(static_cast<double>(u.size()) * peak * peak / err);
}

double snr(const ImageGrid& u, const ImageGrid& u_star) {
    require_same_shape(u, u_star, "snr");
    const double err = (u - u_star).squaredNorm();
    if (err == 0.0) return identical_images;
    const double signal = (u_star.array() - u_star.mean()).matrix().squaredNorm();
    return 10.0 * std::log10(signal / err);
}

MetricsReport metrics(const ImageGrid& u, const ImageGrid& u_star) {
    return {snr(u, u_star), psnr(u, u_star), mse(u, u_star)};
}

ImageGrid parse_pgm(const std::string& bytes) {
    PgmReader rd(bytes);
    if (bytes.size() < 2 || bytes[0] != 'P') {
        throw PgmError("not a PGM file (missing 'P' magic)", 0);
    }
    const bool ascii = bytes[1] == '2';
    if (!ascii && bytes[1] != '5') {
        throw PgmError(std::string("unsupported magic 'P") + bytes[1] + "' (expected P2 or P5)", 1);
    }
    rd.advance(2);
    const unsigned long width = rd.number("width");
    const unsigned long height = rd.number("height");
    rd.skip_space_and_comments();
    const std::size_t maxval_at = rd.pos();
    const unsigned long maxval = rd.number("maxval");
    if (width == 0 || height == 0) {
        throw PgmError("image has zero width or height", maxval_at);
    }
    if (maxval == 0 || maxval > 65535) {
        throw PgmError("maxval must lie in 1..65535, got " + std::to_string(maxval), maxval_at);
    }

    ImageGrid u(static_cast<Index>(height), static_cast<Index>(width));
    const double scale = 1.0 / static_cast<double>(maxval);
    if (ascii) {
        for (unsigned long i = 0; i < height; ++i) {
            for (unsigned long j = 0; j < width; ++j) {
                rd.skip_space_and_comments();
                const std::size_t at = rd.pos();
                const unsigned long v = rd.number("sample");
                if (v > maxval) throw PgmError("sample exceeds maxval", at);
                u(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<double>(v) * scale;
            }
        }
        return u;
    }

    // exactly one whitespace byte separates the header from the raster
    if (rd.pos() >= bytes.size()) {
        throw PgmError("truncated header", rd.pos());
    }
    rd.advance(1);
    const std::size_t bps = maxval < 256 ? 1 : 2;
    const std::size_t need = width * height * bps;
    const std::size_t start = rd.pos();
    if (bytes.size() - start < need) {
        throw PgmError("truncated payload: need " + std::to_string(need) + " bytes, have " +
                           std::to_string(bytes.size() - start),
                       bytes.size());
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
    for (unsigned long i = 0; i < height; ++i) {
        for (unsigned long j = 0; j < width; ++j) {
            const std::size_t k = (i * width + j) * bps;
            const unsigned long v = bps == 1 ? p[k] : (static_cast<unsigned long>(p[k]) << 8) | p[k + 1];
            if (v > maxval) throw PgmError("sample exceeds maxval", start + k);
            u(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<double>(v) * scale;
        }
    }
    return u;
}

ImageGrid load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("read error on '" + path.string() + "'");
    }
    return parse_pgm(ss.str());
}

std::string format_pgm(const ImageGrid& u, int maxval, PgmFormat format) {
    if (maxval != 255 && maxval != 65535) {
        throw DomainError("save_pgm: maxval must be 255 or 65535");
    }
    if (u.size() == 0) {
        throw DomainError("save_pgm: empty image");
    }
    require_finite(u, "save_pgm");
    auto quantize = [maxval](double v) {
        return static_cast<unsigned>(std::round(std::clamp(v, 0.0, 1.0) * maxval));
    };

    std::string out = (format == PgmFormat::ascii ? "P2\n" : "P5\n") + std::to_string(u.cols()) + " " +
                      std::to_string(u.rows()) + "\n" + std::to_string(maxval) + "\n";
    if (format == PgmFormat::ascii) {
        for (Index i = 0; i < u.rows(); ++i) {
            for (Index j = 0; j < u.cols(); ++j) {
                out += std::to_string(quantize(u(i, j)));
                out += j + 1 == u.cols() ? '\n' : ' ';
            }
        }
        return out;
    }
    for (Index i = 0; i < u.rows(); ++i) {
        for (Index j = 0; j < u.cols(); ++j) {
            const unsigned v = quantize(u(i, j));
            if (maxval > 255) out.push_back(static_cast<char>(v >> 8));
            out.push_back(static_cast<char>(v & 0xff));
        }
    }
    return out;
}

void save_pgm(const std::filesystem::path& path, const ImageGrid& u, int maxval, PgmFormat format) {
    const std::string bytes = format_pgm(u, maxval, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write error on '" + path.string() + "'");
    }
}

} // namespace fractv
