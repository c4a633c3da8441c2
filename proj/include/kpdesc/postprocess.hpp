#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kpdesc/descriptor.hpp"
#include "kpdesc/error.hpp"
#include "kpdesc/metrics.hpp"
#include "kpdesc/random.hpp"

namespace kpd {

enum class WhitenVariant : std::uint8_t { PCA = 0, LW = 1 };

// Affine descriptor transform y = A' (x - mu). The PCA variant additionally
// square-roots (power law) before the final l2 normalization; the LW variant
// is whitening from matching-pair differences followed by a rotation from
// the PCA of non-matching-pair differences in the whitened space.
struct WhiteningModel {
    WhitenVariant variant = WhitenVariant::PCA;
    int d_in = 0;
    int d_out = 0;
    double alpha = 0.5;  // power-law exponent, used by the PCA variant
    Eigen::VectorXd mu;  // d_in
    Eigen::MatrixXd A;   // d_in x d_out
    std::uint64_t seed = 0;  // negative-pair sampling seed (LW only)
};

inline std::vector<double> power_law(std::span<const double> v, double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw DomainError("power_law: alpha must be in (0, 1]");
    std::vector<double> out(v.begin(), v.end());
    if (alpha == 1.0) return out;
    for (double& x : out) x = x < 0.0 ? -std::pow(-x, alpha) : std::pow(x, alpha);
    return out;
}

namespace detail {

inline void power_law_in_place(Eigen::VectorXd& v, double alpha) {
    if (alpha == 1.0) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = v[i];
        v[i] = x < 0.0 ? -std::pow(-x, alpha) : std::pow(x, alpha);
    }
}

// Columns of descending-eigenvalue eigenvectors, sign-fixed so the
// largest-magnitude entry of each column is positive (first occurrence on
// ties). Returns eigenvalues descending as well.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> sym_eig_desc(const Eigen::MatrixXd& C) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    const Eigen::Index d = C.rows();
    Eigen::MatrixXd vecs(d, d);
    Eigen::VectorXd vals(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        vals[k] = es.eigenvalues()[d - 1 - k];
        Eigen::VectorXd col = es.eigenvectors().col(d - 1 - k);
        Eigen::Index imax = 0;
        for (Eigen::Index i = 1; i < d; ++i)
            if (std::abs(col[i]) > std::abs(col[imax])) imax = i;
        if (col[imax] < 0.0) col = -col;
        vecs.col(k) = col;
    }
    return {std::move(vecs), std::move(vals)};
}

// Covariance (1/n) sum of outer products of the given index-pair differences,
// accumulated in fixed-size blocks.
template <typename PairRange>
Eigen::MatrixXd pair_difference_covariance(const Eigen::MatrixXd& X, const PairRange& pairs) {
    const Eigen::Index d = X.cols();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
    constexpr std::size_t kBlock = 4096;
    Eigen::MatrixXd block(kBlock, d);
    std::size_t fill = 0;
    for (const auto& [i, j] : pairs) {
        block.row(fill++) = X.row(i) - X.row(j);
        if (fill == kBlock) {
            C.noalias() += block.transpose() * block;
            fill = 0;
        }
    }
    if (fill > 0) C.noalias() += block.topRows(fill).transpose() * block.topRows(fill);
    return C / static_cast<double>(pairs.size());
}

}  // namespace detail

// All matching (within-class) pairs, and non-matching pairs: exhaustive when
// their total count is at most max_negatives, otherwise max_negatives pairs
// sampled uniformly with the given seed.
inline PairList build_pair_list(const std::vector<int>& labels, std::uint64_t seed,
                                std::size_t max_negatives = 1'000'000) {
    PairList out;
    std::unordered_map<int, std::vector<int>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<int>(i));
    for (const auto& [label, members] : groups)
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b)
                out.positives.emplace_back(members[a], members[b]);
    // Deterministic ordering independent of hash-map iteration.
    std::sort(out.positives.begin(), out.positives.end());

    const std::size_t n = labels.size();
    std::size_t cross = 0;
    {
        std::unordered_map<int, std::size_t> counts;
        for (int l : labels) ++counts[l];
        std::size_t same = 0;
        for (const auto& [label, c] : counts) same += c * (c - 1) / 2;
        cross = n * (n - 1) / 2 - same;
    }
    if (cross <= max_negatives) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (labels[i] != labels[j])
                    out.negatives.emplace_back(static_cast<int>(i), static_cast<int>(j));
    } else {
        Rng rng(seed);
        out.negatives.reserve(max_negatives);
        while (out.negatives.size() < max_negatives) {
            const int i = static_cast<int>(uniform_index(rng, n));
            const int j = static_cast<int>(uniform_index(rng, n));
            if (i != j && labels[i] != labels[j]) out.negatives.emplace_back(i, j);
        }
    }
    return out;
}

// PCA on the rows of X: mu is the sample mean, A the top d_out unit
// eigenvectors of the covariance, descending eigenvalue.
inline WhiteningModel fit_pca(const Eigen::MatrixXd& X, int d_out, double alpha = 0.5) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (d_out < 1 || d_out > d) throw DomainError("fit_pca: d_out must be in [1, d_in]");
    if (n <= d) throw DomainError("fit_pca: need more samples than dimensions");

    WhiteningModel model;
    model.variant = WhitenVariant::PCA;
    model.d_in = static_cast<int>(d);
    model.d_out = d_out;
    model.alpha = alpha;
    model.mu = X.colwise().mean();

    const Eigen::MatrixXd centered = X.rowwise() - model.mu.transpose();
    const Eigen::MatrixXd C = centered.transpose() * centered / static_cast<double>(n);
    auto [vecs, vals] = detail::sym_eig_desc(C);
    Eigen::Index usable = 0;
    for (Eigen::Index k = 0; k < d; ++k)
        if (vals[k] > 1e-12 * vals[0]) ++usable;
    if (usable < d_out)
        throw DegenerateInputError("fit_pca: only " + std::to_string(usable) +
                                   " usable eigenvectors for d_out=" + std::to_string(d_out));
    model.A = vecs.leftCols(d_out);
    return model;
}

// Learned whitening. The whitening half comes from the covariance of
// matching-pair differences (eigenvalues floored at 1e-9 of the largest
// before the inverse square root); the rotation half is the PCA of
// non-matching-pair differences in the whitened space, truncated to d_out.
inline WhiteningModel fit_lw(const Eigen::MatrixXd& X, const std::vector<int>& labels, int d_out,
                             std::uint64_t seed = 0, std::size_t max_negatives = 1'000'000) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (static_cast<std::size_t>(n) != labels.size())
        throw DomainError("fit_lw: label count does not match descriptor count");
    if (d_out < 1 || d_out > d) throw DomainError("fit_lw: d_out must be in [1, d_in]");
    {
        std::vector<int> distinct(labels);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2) throw DegenerateInputError("fit_lw: needs at least two classes");
    }

    const PairList pairs = build_pair_list(labels, seed, max_negatives);
    if (pairs.positives.empty())
        throw DegenerateInputError("fit_lw: no matching pairs (all classes are singletons)");
    if (pairs.positives.size() < static_cast<std::size_t>(d))
        std::cerr << "fit_lw: warning: only " << pairs.positives.size()
                  << " matching pairs for " << d << " dimensions\n";

    WhiteningModel model;
    model.variant = WhitenVariant::LW;
    model.d_in = static_cast<int>(d);
    model.d_out = d_out;
    model.mu = X.colwise().mean();
    model.seed = seed;

    const Eigen::MatrixXd C_match = detail::pair_difference_covariance(X, pairs.positives);
    auto [Q, lam] = detail::sym_eig_desc(C_match);
    if (!(lam[0] > 0.0))
        throw DegenerateInputError("fit_lw: matching-pair covariance is zero");
    const double floor = 1e-9 * lam[0];
    Eigen::VectorXd inv_sqrt(d);
    for (Eigen::Index k = 0; k < d; ++k) inv_sqrt[k] = 1.0 / std::sqrt(std::max(lam[k], floor));
    const Eigen::MatrixXd W = Q * inv_sqrt.asDiagonal() * Q.transpose();

    const Eigen::MatrixXd C_diff = detail::pair_difference_covariance(X, pairs.negatives);
    const Eigen::MatrixXd C_white = W * C_diff * W;
    auto [U, mu_vals] = detail::sym_eig_desc(C_white);
    Eigen::Index usable = 0;
    for (Eigen::Index k = 0; k < d; ++k)
        if (mu_vals[k] > 1e-12 * mu_vals[0]) ++usable;
    if (usable < d_out)
        throw DegenerateInputError("fit_lw: only " + std::to_string(usable) +
                                   " usable eigen-directions for d_out=" + std::to_string(d_out));

    model.A = W * U.leftCols(d_out);  // A'(x - mu) == U' W (x - mu), W symmetric
    return model;
}

// The affine part alone: y = A' (x - mu).
inline Eigen::VectorXd apply_affine(const WhiteningModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.d_in) throw DomainError("apply_affine: dimension mismatch");
    return model.A.transpose() * (x - model.mu);
}

// Full post-processing: affine map, power law for the PCA variant, final
// l2 normalization.
inline Descriptor apply_transform(const WhiteningModel& model, const Descriptor& d) {
    if (d.dim() != model.d_in)
        throw DomainError("apply_transform: descriptor dim " + std::to_string(d.dim()) +
                          " does not match model d_in " + std::to_string(model.d_in));
    if (d.norm_state != NormState::Unit)
        throw DomainError("apply_transform: descriptor must be unit-normalized");
    const Eigen::Map<const Eigen::VectorXd> x(d.values.data(), d.dim());
    Eigen::VectorXd y = model.A.transpose() * (x - model.mu);
    if (model.variant == WhitenVariant::PCA) detail::power_law_in_place(y, model.alpha);
    const double norm = y.norm();
    if (norm == 0.0)
        throw DegenerateInputError("apply_transform: input projects to the zero vector");
    y /= norm;
    return Descriptor{std::vector<double>(y.data(), y.data() + y.size()),
                      DescriptorKind::PostProcessed, NormState::Unit};
}

// ---- model file (binary, little-endian) -----------------------------------
//
// "KPWM" | u32 version=1 | u8 variant | u32 d_in | u32 d_out | f64 alpha |
// d_in f64 mu | d_in*d_out f64 A column-major | u64 seed

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline void save_model(const std::filesystem::path& path, const WhiteningModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open model file for writing: " + path.string());
    os.write("KPWM", 4);
    detail::put_u32(os, 1);
    os.put(static_cast<char>(model.variant));
    detail::put_u32(os, static_cast<std::uint32_t>(model.d_in));
    detail::put_u32(os, static_cast<std::uint32_t>(model.d_out));
    detail::put_f64(os, model.alpha);
    for (Eigen::Index i = 0; i < model.mu.size(); ++i) detail::put_f64(os, model.mu[i]);
    for (Eigen::Index c = 0; c < model.A.cols(); ++c)
        for (Eigen::Index r = 0; r < model.A.rows(); ++r) detail::put_f64(os, model.A(r, c));
    detail::put_u64(os, model.seed);
    if (!os) throw IoError("failed writing model file: " + path.string());
}

inline WhiteningModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model file: " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "KPWM", 4) != 0)
        throw FormatError("not a KPWM model file: " + path.string());
    const std::uint32_t version = detail::get_u32(is);
    if (version != 1)
        throw FormatError("unsupported KPWM version " + std::to_string(version) + ": " + path.string());
    const int variant_byte = is.get();
    if (variant_byte != 0 && variant_byte != 1)
        throw FormatError("unknown KPWM variant byte: " + path.string());

    WhiteningModel model;
    model.variant = static_cast<WhitenVariant>(variant_byte);
    model.d_in = static_cast<int>(detail::get_u32(is));
    model.d_out = static_cast<int>(detail::get_u32(is));
    model.alpha = detail::get_f64(is);
    if (!is || model.d_in <= 0 || model.d_out <= 0 || model.d_out > model.d_in)
        throw FormatError("corrupt KPWM header: " + path.string());
    model.mu.resize(model.d_in);
    for (int i = 0; i < model.d_in; ++i) model.mu[i] = detail::get_f64(is);
    model.A.resize(model.d_in, model.d_out);
    for (int c = 0; c < model.d_out; ++c)
        for (int r = 0; r < model.d_in; ++r) model.A(r, c) = detail::get_f64(is);
    model.seed = detail::get_u64(is);
    if (!is) throw FormatError("truncated KPWM model file: " + path.string());
    return model;
}

}  // namespace kpd
