#pragma once

// Reference implementations written from the textbook definitions, independent of src/metrics.cpp.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "cae/metrics.hpp"

namespace oracles {

inline cae::LabelVector random_labels(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    cae::LabelVector out(n);
    for (auto& v : out) v = static_cast<std::uint32_t>(rng() % k);
    return out;
}

// Distinct values of v, in order.
inline std::vector<std::uint32_t> distinct(const cae::LabelVector& v) {
    std::vector<std::uint32_t> d(v.begin(), v.end());
    std::ranges::sort(d);
    d.erase(std::unique(d.begin(), d.end()), d.end());
    return d;
}

// Tries every injective map from predicted clusters to classes (padding with "unmatched").
inline double brute_force_accuracy(const cae::LabelVector& t, const cae::LabelVector& p) {
    const auto tc = distinct(t), pc = distinct(p);
    const std::size_t slots = std::max(tc.size(), pc.size());
    std::vector<int> perm(slots);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::map<std::uint32_t, std::uint32_t> map;
        for (std::size_t c = 0; c < pc.size(); ++c)
            if (static_cast<std::size_t>(perm[c]) < tc.size()) map[pc[c]] = tc[static_cast<std::size_t>(perm[c])];
        std::size_t hit = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            auto it = map.find(p[i]);
            hit += it != map.end() && it->second == t[i];
        }
        best = std::max(best, hit);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(t.size());
}

// Adjusted Rand index from an explicit walk over all pairs.
inline double ari(const cae::LabelVector& t, const cae::LabelVector& p) {
    const std::size_t n = t.size();
    double both = 0, same_t = 0, same_p = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool a = t[i] == t[j], b = p[i] == p[j];
            both += a && b;
            same_t += a;
            same_p += b;
            pairs += 1;
        }
    const double expected = same_t * same_p / pairs;
    const double max_index = 0.5 * (same_t + same_p);
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

// H(T), H(P) and I(T;P) from empirical probabilities, natural log.
inline double nmi(const cae::LabelVector& t, const cae::LabelVector& p,
                  cae::NmiNormalization norm = cae::NmiNormalization::arithmetic) {
    const double n = static_cast<double>(t.size());
    std::map<std::uint32_t, double> pt, pp;
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
    for (std::size_t i = 0; i < t.size(); ++i) {
        pt[t[i]] += 1;
        pp[p[i]] += 1;
        joint[{t[i], p[i]}] += 1;
    }
    for (auto* dist : {&pt, &pp})
        for (auto& [k, q] : *dist) q /= n;
    for (auto& [k, q] : joint) q /= n;
    auto entropy = [](const auto& dist) {
        double h = 0;
        for (const auto& [k, q] : dist) h -= q * std::log(q);
        return h;
    };
    double mi = 0;
    for (const auto& [key, q] : joint) mi += q * std::log(q / (pt[key.first] * pp[key.second]));
    const double ht = entropy(pt), hp = entropy(pp);
    double denom = 0;
    switch (norm) {
        case cae::NmiNormalization::arithmetic: denom = 0.5 * (ht + hp); break;
        case cae::NmiNormalization::geometric: denom = std::sqrt(ht * hp); break;
        case cae::NmiNormalization::min: denom = std::min(ht, hp); break;
        case cae::NmiNormalization::max: denom = std::max(ht, hp); break;
    }
    if (ht == 0 || hp == 0 || denom == 0) return 0.0;
    return std::max(0.0, mi) / denom;
}

}  // namespace oracles
