#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kpdesc/error.hpp"
#include "kpdesc/feature_map.hpp"
#include "kpdesc/patch.hpp"

namespace kpd {

enum class DescriptorKind { Polar, Cartesian, Combined, PostProcessed };
enum class NormState { Raw, Unit };

inline const char* to_string(DescriptorKind k) {
    switch (k) {
        case DescriptorKind::Polar: return "polar";
        case DescriptorKind::Cartesian: return "cartes";
        case DescriptorKind::Combined: return "combined";
        case DescriptorKind::PostProcessed: return "postprocessed";
    }
    return "?";
}

struct Descriptor {
    std::vector<double> values;
    DescriptorKind kind = DescriptorKind::Polar;
    NormState norm_state = NormState::Raw;

    int dim() const { return static_cast<int>(values.size()); }
};

// Kernel configuration per pixel attribute. The position attributes x, y and
// rho live on the half interval; all angles are full-circle.
struct DescriptorConfig {
    KernelConfig phi{8.0, 2, KernelDomain::FullCircle};
    KernelConfig rho{8.0, 2, KernelDomain::HalfInterval};
    KernelConfig theta_rel{8.0, 3, KernelDomain::FullCircle};
    KernelConfig x{1.0, 1, KernelDomain::HalfInterval};
    KernelConfig y{1.0, 1, KernelDomain::HalfInterval};
    KernelConfig theta{8.0, 3, KernelDomain::FullCircle};

    int polar_dim() const {
        return (2 * phi.n_freq + 1) * (2 * rho.n_freq + 1) * (2 * theta_rel.n_freq + 1);
    }
    int cartesian_dim() const {
        return (2 * x.n_freq + 1) * (2 * y.n_freq + 1) * (2 * theta.n_freq + 1);
    }
    int combined_dim() const { return polar_dim() + cartesian_dim(); }
    int dim_for(DescriptorKind kind) const {
        switch (kind) {
            case DescriptorKind::Polar: return polar_dim();
            case DescriptorKind::Cartesian: return cartesian_dim();
            default: return combined_dim();
        }
    }
};

// out[i * |b| + j] = a[i] * b[j]
inline void kron(std::span<const double> a, std::span<const double> b, double* out) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        double* row = out + i * b.size();
        for (std::size_t j = 0; j < b.size(); ++j) row[j] = ai * b[j];
    }
}

inline std::vector<double> kron(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DomainError("kron: inputs must be nonempty");
    std::vector<double> out(a.size() * b.size());
    kron(a, b, out.data());
    return out;
}

inline Descriptor l2_normalize(Descriptor d) {
    double sq = 0.0;
    for (double v : d.values) sq += v * v;
    if (sq == 0.0) throw DegenerateInputError("l2_normalize: zero descriptor");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : d.values) v *= inv;
    d.norm_state = NormState::Unit;
    return d;
}

// Builds kernelized descriptors from pixel attributes. Feature maps are
// constructed once, so batch extraction reuses them across patches.
//
// Per pixel the map is the Kronecker product of the attribute maps,
// phi (x) rho (x) theta_rel for the polar variant and x (x) y (x) theta for
// the Cartesian one; pixels are accumulated in row-major order with weight
// g * sqrt(m), so zero-gradient pixels contribute nothing.
class DescriptorExtractor {
public:
    explicit DescriptorExtractor(const DescriptorConfig& config = {})
        : config_(config),
          map_phi_(FeatureMap::build(config.phi)),
          map_rho_(FeatureMap::build(config.rho)),
          map_theta_rel_(FeatureMap::build(config.theta_rel)),
          map_x_(FeatureMap::build(config.x)),
          map_y_(FeatureMap::build(config.y)),
          map_theta_(FeatureMap::build(config.theta)) {}

    const DescriptorConfig& config() const { return config_; }

    // Raw polar descriptor, dim (2N_phi+1)(2N_rho+1)(2N_trel+1).
    Descriptor polar(std::span<const PixelAttributes> attrs) const {
        std::vector<double> acc(static_cast<std::size_t>(config_.polar_dim()), 0.0);
        std::vector<double> f_a(map_phi_.dim()), f_b(map_rho_.dim()), f_c(map_theta_rel_.dim());
        std::vector<double> inner(f_b.size() * f_c.size()), full(acc.size());
        for (const PixelAttributes& a : attrs) {
            if (a.m == 0.0) continue;
            map_phi_.eval(a.phi, f_a.data());
            map_rho_.eval(map_to_half_interval(a.rho, 0.0, 1.0), f_b.data());
            map_theta_rel_.eval(a.theta_rel, f_c.data());
            kron(f_b, f_c, inner.data());
            kron(f_a, inner, full.data());
            const double w = a.g * std::sqrt(a.m);
            for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w * full[k];
        }
        return Descriptor{std::move(acc), DescriptorKind::Polar, NormState::Raw};
    }

    // Raw Cartesian descriptor, dim (2N_x+1)(2N_y+1)(2N_theta+1).
    Descriptor cartesian(std::span<const PixelAttributes> attrs) const {
        const int w_patch = grid_width(attrs);
        std::vector<double> acc(static_cast<std::size_t>(config_.cartesian_dim()), 0.0);
        std::vector<double> f_a(map_x_.dim()), f_b(map_y_.dim()), f_c(map_theta_.dim());
        std::vector<double> inner(f_b.size() * f_c.size()), full(acc.size());
        for (const PixelAttributes& a : attrs) {
            if (a.m == 0.0) continue;
            map_x_.eval(map_to_half_interval(a.x, 1.0, w_patch), f_a.data());
            map_y_.eval(map_to_half_interval(a.y, 1.0, w_patch), f_b.data());
            map_theta_.eval(a.theta, f_c.data());
            kron(f_b, f_c, inner.data());
            kron(f_a, inner, full.data());
            const double w = a.g * std::sqrt(a.m);
            for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += w * full[k];
        }
        return Descriptor{std::move(acc), DescriptorKind::Cartesian, NormState::Raw};
    }

    // Unit concatenation of the unit polar and unit Cartesian descriptors;
    // each half ends up with squared mass 1/2, so similarities average.
    Descriptor combined(std::span<const PixelAttributes> attrs) const {
        const Descriptor p = l2_normalize(polar(attrs));
        const Descriptor c = l2_normalize(cartesian(attrs));
        std::vector<double> cat;
        cat.reserve(p.values.size() + c.values.size());
        cat.insert(cat.end(), p.values.begin(), p.values.end());
        cat.insert(cat.end(), c.values.begin(), c.values.end());
        return l2_normalize(Descriptor{std::move(cat), DescriptorKind::Combined, NormState::Raw});
    }

    Descriptor extract(std::span<const PixelAttributes> attrs, DescriptorKind kind) const {
        switch (kind) {
            case DescriptorKind::Polar: return l2_normalize(polar(attrs));
            case DescriptorKind::Cartesian: return l2_normalize(cartesian(attrs));
            case DescriptorKind::Combined: return combined(attrs);
            default: throw DomainError("extract: unsupported descriptor kind");
        }
    }

private:
    static int grid_width(std::span<const PixelAttributes> attrs) {
        const int w = static_cast<int>(std::lround(std::sqrt(static_cast<double>(attrs.size()))));
        if (w < 1 || static_cast<std::size_t>(w) * w != attrs.size())
            throw DomainError("attributes do not form a square pixel grid");
        return w;
    }

    DescriptorConfig config_;
    FeatureMap map_phi_, map_rho_, map_theta_rel_, map_x_, map_y_, map_theta_;
};

inline Descriptor polar_descriptor(std::span<const PixelAttributes> attrs,
                                   const DescriptorConfig& config = {}) {
    return DescriptorExtractor(config).polar(attrs);
}

inline Descriptor cartesian_descriptor(std::span<const PixelAttributes> attrs,
                                       const DescriptorConfig& config = {}) {
    return DescriptorExtractor(config).cartesian(attrs);
}

inline Descriptor combined_descriptor(std::span<const PixelAttributes> attrs,
                                      const DescriptorConfig& config = {}) {
    return DescriptorExtractor(config).combined(attrs);
}

// Test oracle: the match kernel evaluated as an explicit double sum over
// pixel pairs, with the same truncated per-attribute kernels the descriptors
// use. Quadratic in the pixel count, hence the small-patch guard.
inline double brute_force_match_kernel(const Patch& P, const Patch& Q, DescriptorKind variant,
                                       const DescriptorConfig& config = {}) {
    if (P.width() > 16 || Q.width() > 16)
        throw DomainError("brute_force_match_kernel: patches larger than 16x16");
    if (variant != DescriptorKind::Polar && variant != DescriptorKind::Cartesian)
        throw DomainError("brute_force_match_kernel: variant must be polar or cartesian");

    const std::vector<PixelAttributes> ap = extract_attributes(P);
    const std::vector<PixelAttributes> aq = extract_attributes(Q);
    const bool polar = variant == DescriptorKind::Polar;
    const FeatureMap k1 = FeatureMap::build(polar ? config.phi : config.x);
    const FeatureMap k2 = FeatureMap::build(polar ? config.rho : config.y);
    const FeatureMap k3 = FeatureMap::build(polar ? config.theta_rel : config.theta);

    const auto first = [&](const PixelAttributes& a, int w) {
        return polar ? a.phi : map_to_half_interval(a.x, 1.0, w);
    };
    const auto second = [&](const PixelAttributes& a, int w) {
        return polar ? map_to_half_interval(a.rho, 0.0, 1.0) : map_to_half_interval(a.y, 1.0, w);
    };
    const auto third = [&](const PixelAttributes& a) { return polar ? a.theta_rel : a.theta; };

    double total = 0.0;
    for (const PixelAttributes& p : ap) {
        if (p.m == 0.0) continue;
        const double wp = p.g * std::sqrt(p.m);
        for (const PixelAttributes& q : aq) {
            if (q.m == 0.0) continue;
            const double wq = q.g * std::sqrt(q.m);
            total += wp * wq * k1.kernel(first(p, P.width()), first(q, Q.width())) *
                     k2.kernel(second(p, P.width()), second(q, Q.width())) *
                     k3.kernel(third(p), third(q));
        }
    }
    return total;
}

}  // namespace kpd
