#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "kpdesc/error.hpp"

namespace kpd {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Which interval a scalar attribute lives on.
enum class KernelDomain {
    FullCircle,    // angle in [0, 2pi); differences wrap
    HalfInterval,  // attribute linearly mapped into [0, pi]; never wraps
};

struct KernelConfig {
    double kappa = 8.0;  // Von Mises shape; lower kappa = wider kernel
    int n_freq = 3;      // Fourier truncation order N >= 0
    KernelDomain domain = KernelDomain::FullCircle;
};

/// Modified Bessel function of the first kind I_n(kappa).
///
/// Ascending power series sum_m (kappa/2)^(2m+n) / (m! (m+n)!), accumulated
/// with the term recurrence and truncated once a term drops below 1e-16 of
/// the partial sum. Supported range: 0 <= n <= 64, 0 < kappa <= 128, where
/// the relative error stays below 1e-12.
inline double bessel_i(int n, double kappa) {
    if (n < 0 || n > 64)
        throw RangeError("bessel_i: order must be in [0, 64], got " + std::to_string(n));
    if (!(kappa > 0.0) || kappa > 128.0)
        throw RangeError("bessel_i: kappa must be in (0, 128], got " + std::to_string(kappa));
    const double x = 0.5 * kappa;
    double term = 1.0;
    for (int i = 1; i <= n; ++i) term *= x / i;  // (kappa/2)^n / n!
    double sum = term;
    for (int m = 1; m < 4000; ++m) {
        term *= (x * x) / (static_cast<double>(m) * (m + n));
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

/// Maps value in [lo, hi] linearly onto [0, pi]. A slack of 1e-9 outside
/// [lo, hi] is tolerated and clamped; beyond that a DomainError is thrown.
inline double map_to_half_interval(double value, double lo, double hi) {
    if (!(lo < hi)) throw DomainError("map_to_half_interval: lo must be < hi");
    if (!(value >= lo - 1e-9) || !(value <= hi + 1e-9))
        throw DomainError("map_to_half_interval: value " + std::to_string(value) +
                          " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    const double t = std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
    return t * std::numbers::pi;
}

/// Truncated Fourier expansion of the Von Mises kernel e^{kappa (cos d - 1)}.
///
/// Raw series weights r_0 = I_0(kappa), r_n = 2 I_n(kappa) are renormalized
/// to sum to one, so the approximated kernel peaks at exactly 1. The feature
/// map is
///
///   psi(v) = [sqrt(c_0), sqrt(c_1) cos v, sqrt(c_1) sin v, ...,
///             sqrt(c_N) cos Nv, sqrt(c_N) sin Nv]  in R^(2N+1),
///
/// with psi(a)' psi(b) = sum_n c_n cos(n (a - b)) and |psi(v)| = 1 for all v.
class FeatureMap {
public:
    static FeatureMap build(const KernelConfig& config) {
        if (config.n_freq < 0)
            throw RangeError("FeatureMap: n_freq must be >= 0");
        std::vector<double> coeffs(static_cast<std::size_t>(config.n_freq) + 1);
        coeffs[0] = bessel_i(0, config.kappa);
        for (int n = 1; n <= config.n_freq; ++n) coeffs[n] = 2.0 * bessel_i(n, config.kappa);
        double total = 0.0;
        for (double c : coeffs) total += c;
        for (double& c : coeffs) c /= total;
        return FeatureMap(config, std::move(coeffs));
    }

    const KernelConfig& config() const { return config_; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    int dim() const { return 2 * config_.n_freq + 1; }

    // Writes psi(value) into out[0 .. 2N].
    void eval(double value, double* out) const {
        check_domain(value);
        out[0] = sqrt_coeffs_[0];
        for (int n = 1; n <= config_.n_freq; ++n) {
            out[2 * n - 1] = sqrt_coeffs_[n] * std::cos(n * value);
            out[2 * n] = sqrt_coeffs_[n] * std::sin(n * value);
        }
    }

    std::vector<double> eval(double value) const {
        std::vector<double> out(static_cast<std::size_t>(dim()));
        eval(value, out.data());
        return out;
    }

    // psi(a)' psi(b), evaluated as the cosine series in a - b.
    double kernel(double a, double b) const {
        check_domain(a);
        check_domain(b);
        const double d = a - b;
        double acc = coeffs_[0];
        for (int n = 1; n <= config_.n_freq; ++n) acc += coeffs_[n] * std::cos(n * d);
        return acc;
    }

private:
    FeatureMap(const KernelConfig& config, std::vector<double> coeffs)
        : config_(config), coeffs_(std::move(coeffs)), sqrt_coeffs_(coeffs_.size()) {
        for (std::size_t i = 0; i < coeffs_.size(); ++i) sqrt_coeffs_[i] = std::sqrt(coeffs_[i]);
    }

    void check_domain(double v) const {
        if (config_.domain == KernelDomain::HalfInterval &&
            (!(v >= -1e-9) || !(v <= std::numbers::pi + 1e-9)))
            throw DomainError("FeatureMap: half-interval value " + std::to_string(v) +
                              " outside [0, pi]");
    }

    KernelConfig config_;
    std::vector<double> coeffs_;       // c_0 .. c_N, nonnegative, sum to 1
    std::vector<double> sqrt_coeffs_;
};

}  // namespace kpd
