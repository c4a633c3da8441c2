#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kpdesc/error.hpp"
#include "kpdesc/feature_map.hpp"

namespace kpd {

// Square grayscale patch. Intensities are row-major in [0, 1].
class Patch {
public:
    Patch(int width, std::vector<double> intensities)
        : width_(width), data_(std::move(intensities)) {
        if (width_ < 3) throw DomainError("Patch: width must be >= 3");
        if (data_.size() != static_cast<std::size_t>(width_) * width_)
            throw DomainError("Patch: expected " + std::to_string(width_ * width_) +
                              " intensities, got " + std::to_string(data_.size()));
        for (double v : data_)
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw DomainError("Patch: intensities must be finite and in [0, 1]");
    }

    // 8-bit input; intensities are divided by 255.
    static Patch from_bytes(int width, const std::vector<std::uint8_t>& bytes) {
        std::vector<double> vals(bytes.size());
        for (std::size_t i = 0; i < bytes.size(); ++i) vals[i] = bytes[i] / 255.0;
        return Patch(width, std::move(vals));
    }

    int width() const { return width_; }
    std::size_t pixel_count() const { return data_.size(); }
    const std::vector<double>& intensities() const { return data_; }

    // 0-based column/row access.
    double at(int col, int row) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }

private:
    int width_;
    std::vector<double> data_;
};

// All per-pixel quantities the descriptors consume.
struct PixelAttributes {
    int x = 0;               // column in {1..W}
    int y = 0;               // row in {1..W}
    double rho = 0.0;        // center distance normalized to [0, 1]
    double phi = 0.0;        // polar angle in [0, 2pi); 0 at the exact center
    double theta = 0.0;      // gradient angle in [0, 2pi); 0 when m == 0
    double theta_rel = 0.0;  // (theta - phi) mod 2pi
    double m = 0.0;          // gradient magnitude
    double g = 0.0;          // center weight exp(-rho^2)
};

struct GradientField {
    int width = 0;
    std::vector<double> gx, gy;
};

// Central differences, (I(x+1,y) - I(x-1,y)) / 2, with indices clamped at the
// borders so the same formula applies everywhere.
inline GradientField compute_gradients(const Patch& patch) {
    const int w = patch.width();
    GradientField out{w, std::vector<double>(patch.pixel_count()), std::vector<double>(patch.pixel_count())};
    const auto clamped = [w](int i) { return std::clamp(i, 0, w - 1); };
    for (int row = 0; row < w; ++row) {
        for (int col = 0; col < w; ++col) {
            const std::size_t i = static_cast<std::size_t>(row) * w + col;
            out.gx[i] = 0.5 * (patch.at(clamped(col + 1), row) - patch.at(clamped(col - 1), row));
            out.gy[i] = 0.5 * (patch.at(col, clamped(row + 1)) - patch.at(col, clamped(row - 1)));
        }
    }
    return out;
}

inline double wrap_angle(double a) {  // into [0, 2pi)
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

// Per-pixel attributes in row-major order. The center is ((W+1)/2, (W+1)/2)
// in 1-based coordinates (fractional for even W); rho is the center distance
// over W/2, clamped to 1 at the corners.
inline std::vector<PixelAttributes> extract_attributes(const Patch& patch) {
    const int w = patch.width();
    const GradientField grad = compute_gradients(patch);
    const double cx = 0.5 * (w + 1);
    const double cy = 0.5 * (w + 1);
    const double radius = 0.5 * w;
    std::vector<PixelAttributes> attrs(patch.pixel_count());
    for (int row = 0; row < w; ++row) {
        for (int col = 0; col < w; ++col) {
            const std::size_t i = static_cast<std::size_t>(row) * w + col;
            PixelAttributes& a = attrs[i];
            a.x = col + 1;
            a.y = row + 1;
            const double dx = a.x - cx;
            const double dy = a.y - cy;
            a.rho = std::min(1.0, std::sqrt(dx * dx + dy * dy) / radius);
            a.phi = (dx == 0.0 && dy == 0.0) ? 0.0 : wrap_angle(std::atan2(dy, dx));
            const double gx = grad.gx[i];
            const double gy = grad.gy[i];
            a.m = std::sqrt(gx * gx + gy * gy);
            a.theta = a.m > 0.0 ? wrap_angle(std::atan2(gy, gx)) : 0.0;
            a.theta_rel = wrap_angle(a.theta - a.phi);
            a.g = std::exp(-a.rho * a.rho);
        }
    }
    return attrs;
}

}  // namespace kpd
