#pragma once

#include <cstdint>

#include "cae/embedding_store.hpp"

namespace cae {

/// Desk-scale stand-in for vision-language embeddings.
///
/// Each class owns a unit direction (pairwise cosine at most max_class_cosine). An image is
///   class_separation * direction + a_i * (low-rank nuisance) + noise_sigma * isotropic noise,
/// normalized, where a_i = nuisance_scale * exp(nuisance_spread * z_i). The nuisance models
/// visual variation that no text describes. Aligned noun vectors are direction + noise_sigma
/// noise, aligned captions use twice that noise; a noun_ambiguity fraction of aligned nouns also
/// carries a second class direction. Non-aligned bank entries are uniform on the sphere.
struct SynthSpec {
    std::size_t n_classes = 5;
    std::size_t per_class = 300;
    std::size_t dim = 64;
    double class_separation = 1.0;
    double noise_sigma = 0.1;
    double text_alignment = 0.9;
    std::size_t noun_bank = 500;
    std::size_t caption_bank = 1000;
    std::size_t nuisance_rank = 4;
    double nuisance_scale = 0.7;
    double nuisance_spread = 0.0;
    double noun_ambiguity = 0.0;
    double max_class_cosine = 0.2;
    std::uint64_t seed = 7;

    void validate() const;
};

struct SyntheticData {
    EmbeddingMatrix images;
    EmbeddingMatrix nouns;
    EmbeddingMatrix captions;
    LabelVector labels;
    Matrix class_directions;
};

/// Deterministic for a given spec. Labels are class-major: per_class rows of class 0 first.
SyntheticData generate_synthetic(const SynthSpec& spec);

}  // namespace cae
