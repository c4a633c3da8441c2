#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "kpdesc/error.hpp"

namespace kpd {

// Index pairs into a descriptor set; positives share a class label.
struct PairList {
    std::vector<std::pair<int, int>> positives;
    std::vector<std::pair<int, int>> negatives;

    bool empty() const { return positives.empty() && negatives.empty(); }
};

// Scored pair outcomes; higher score means more similar.
struct ScoredPairSet {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;  // 1 = matching pair

    void add(double score, bool positive) {
        scores.push_back(score);
        labels.push_back(positive ? 1 : 0);
    }
    std::size_t size() const { return scores.size(); }
};

namespace detail {

// Descending score; ties rank positives before negatives, then keep input
// order. The tie rule is part of the metric contract.
inline std::vector<std::size_t> ranked_order(const ScoredPairSet& s) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (s.scores[a] != s.scores[b]) return s.scores[a] > s.scores[b];
        return s.labels[a] > s.labels[b];
    });
    return idx;
}

inline void validate(const ScoredPairSet& s, bool need_negatives) {
    if (s.scores.size() != s.labels.size())
        throw DomainError("scored pair set: scores and labels differ in length");
    std::size_t pos = 0;
    for (std::uint8_t l : s.labels) pos += l;
    if (pos == 0) throw DomainError("scored pair set: no positive pairs");
    if (need_negatives && pos == s.labels.size())
        throw DomainError("scored pair set: no negative pairs");
}

}  // namespace detail

// False positive rate at 95% recall. The threshold is the score of the
// ceil(0.95 * |pos|)-th positive in descending order; FPR counts negatives
// scored at or above it.
inline double fpr95(const ScoredPairSet& s) {
    detail::validate(s, /*need_negatives=*/true);
    std::size_t n_pos = 0;
    for (std::uint8_t l : s.labels) n_pos += l;
    const std::size_t n_neg = s.size() - n_pos;
    const std::size_t target = (19 * n_pos + 19) / 20;  // ceil(0.95 n_pos)

    const std::vector<std::size_t> order = detail::ranked_order(s);
    double threshold = 0.0;
    std::size_t seen = 0;
    for (std::size_t i : order) {
        if (s.labels[i] && ++seen == target) {
            threshold = s.scores[i];
            break;
        }
    }
    std::size_t false_pos = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!s.labels[i] && s.scores[i] >= threshold) ++false_pos;
    return static_cast<double>(false_pos) / static_cast<double>(n_neg);
}

// AP = (1/|pos|) sum over positive ranks k of precision@k, under the same
// tie rule as fpr95.
inline double average_precision(const ScoredPairSet& s) {
    detail::validate(s, /*need_negatives=*/false);
    const std::vector<std::size_t> order = detail::ranked_order(s);
    std::size_t n_pos = 0;
    for (std::uint8_t l : s.labels) n_pos += l;
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (s.labels[order[k]]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(n_pos);
}

}  // namespace kpd
