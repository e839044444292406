#include "cae/semantic_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "cae/error.hpp"

namespace cae {

void SpaceConfig::validate() const {
    if (centers_divisor < 1) throw ConfigError("centers_divisor must be >= 1");
    if (topk < 1) throw ConfigError("topk must be >= 1");
}

std::size_t default_num_centers(std::size_t n_images, std::size_t divisor) {
    return std::max<std::size_t>(1, n_images / std::max<std::size_t>(1, divisor));
}

Matrix assignment_probability(const EmbeddingMatrix& texts, const EmbeddingMatrix& centers) {
    if (texts.dim() != centers.dim())
        throw ShapeError("assignment_probability: text dim " + std::to_string(texts.dim()) +
                         " vs center dim " + std::to_string(centers.dim()));
    const std::size_t n = centers.rows();
    Matrix probs(texts.rows(), n);
    for (std::size_t i = 0; i < texts.rows(); ++i) {
        auto p = probs.row(i);
        for (std::size_t j = 0; j < n; ++j) p[j] = dot(texts.row(i), centers.row(j));
        const double mx = *std::ranges::max_element(p);
        double z = 0.0;
        for (double& v : p) z += (v = std::exp(v - mx));
        for (double& v : p) v /= z;
    }
    return probs;
}

std::vector<std::vector<std::uint32_t>> select_topk(const Matrix& probs, std::size_t topk) {
    if (probs.empty()) throw ShapeError("select_topk: empty probability matrix");
    if (topk < 1) throw ConfigError("select_topk: topk must be >= 1");
    const std::size_t m = probs.rows();
    const std::size_t take = std::min(topk, m);
    std::vector<std::vector<std::uint32_t>> out(probs.cols());
    std::vector<std::uint32_t> order(m);
    for (std::size_t j = 0; j < probs.cols(); ++j) {
        std::iota(order.begin(), order.end(), 0u);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                          [&](std::uint32_t a, std::uint32_t b) {
                              const double pa = probs(a, j), pb = probs(b, j);
                              return pa > pb || (pa == pb && a < b);
                          });
        out[j].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return out;
}

TextSelection select_texts(const EmbeddingMatrix& bank, const EmbeddingMatrix& centers, std::size_t topk) {
    const auto per_center = select_topk(assignment_probability(bank, centers), topk);
    std::set<std::uint32_t> uni;
    for (const auto& list : per_center) uni.insert(list.begin(), list.end());
    std::vector<std::uint32_t> indices(uni.begin(), uni.end());

    Matrix rows(indices.size(), bank.dim());
    for (std::size_t r = 0; r < indices.size(); ++r)
        std::ranges::copy(bank.row(indices[r]), rows.row(r).begin());
    return {std::move(indices), EmbeddingMatrix(std::move(rows), bank.modality())};
}

EmbeddingMatrix semantic_centers(const EmbeddingMatrix& images, const SpaceConfig& cfg) {
    cfg.validate();
    KMeansConfig km = cfg.kmeans;
    km.k = cfg.num_centers ? cfg.num_centers : default_num_centers(images.rows(), cfg.centers_divisor);
    return kmeans_fit(images, km).centers;
}

SemanticSpace build_semantic_space(const EmbeddingMatrix& images, const EmbeddingMatrix& noun_bank,
                                   const EmbeddingMatrix& caption_bank, const SpaceConfig& cfg) {
    if (noun_bank.dim() != images.dim() || caption_bank.dim() != images.dim())
        throw ShapeError("build_semantic_space: banks must share the image dim " + std::to_string(images.dim()));
    auto centers = semantic_centers(images, cfg);
    auto nouns = select_texts(noun_bank, centers, cfg.topk);
    auto captions = select_texts(caption_bank, centers, cfg.topk);
    return {std::move(nouns), std::move(captions), std::move(centers)};
}

}  // namespace cae
