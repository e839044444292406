#pragma once

#include <cstdint>
#include <vector>

#include "cae/kmeans.hpp"

namespace cae {

struct SpaceConfig {
    std::size_t centers_divisor = 300;
    std::size_t topk = 10;
    /// k is overwritten with default_num_centers unless num_centers is set.
    KMeansConfig kmeans{};
    std::size_t num_centers = 0;

    void validate() const;
};

/// Texts drawn from one bank: sorted unique bank indices and the matching rows.
struct TextSelection {
    std::vector<std::uint32_t> indices;
    EmbeddingMatrix embeddings;
};

struct SemanticSpace {
    TextSelection nouns;
    TextSelection captions;
    EmbeddingMatrix centers;
};

/// max(1, floor(n_images / divisor)).
std::size_t default_num_centers(std::size_t n_images, std::size_t divisor);

/// Row i is the softmax over centers j of <text_i, center_j>.
Matrix assignment_probability(const EmbeddingMatrix& texts, const EmbeddingMatrix& centers);

/// For each center (column), the topk text indices by decreasing probability, ties to the lower index.
std::vector<std::vector<std::uint32_t>> select_topk(const Matrix& probs, std::size_t topk);

/// Union of the per-center top-k lists of one bank.
TextSelection select_texts(const EmbeddingMatrix& bank, const EmbeddingMatrix& centers, std::size_t topk);

/// Image semantic centers from k-means over the images.
EmbeddingMatrix semantic_centers(const EmbeddingMatrix& images, const SpaceConfig& cfg);

SemanticSpace build_semantic_space(const EmbeddingMatrix& images, const EmbeddingMatrix& noun_bank,
                                   const EmbeddingMatrix& caption_bank, const SpaceConfig& cfg);

}  // namespace cae
