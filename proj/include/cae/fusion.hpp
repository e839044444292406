#pragma once

#include <array>
#include <filesystem>

#include "cae/embedding_store.hpp"

namespace cae {

inline constexpr std::size_t kNumModalities = 3;
inline constexpr double kDefaultGamma = 0.01;

/// Image features with their noun and caption counterparts, all N x d.
/// Rows must be unit-norm unless require_unit is false (raw-counterpart ablations).
class ModalityBundle {
public:
    ModalityBundle(EmbeddingMatrix image, EmbeddingMatrix noun, EmbeddingMatrix caption,
                   bool require_unit = true);

    const EmbeddingMatrix& image() const noexcept { return parts_[0]; }
    const EmbeddingMatrix& noun() const noexcept { return parts_[1]; }
    const EmbeddingMatrix& caption() const noexcept { return parts_[2]; }
    const EmbeddingMatrix& operator[](std::size_t m) const { return parts_.at(m); }

    std::size_t rows() const noexcept { return parts_[0].rows(); }
    std::size_t dim() const noexcept { return parts_[0].dim(); }

private:
    std::array<EmbeddingMatrix, kNumModalities> parts_;
};

/// Per-instance modality weights; columns ordered image, noun, caption.
struct FusionWeights {
    Matrix alpha;
    Matrix beta;
    double gamma = kDefaultGamma;
};

struct FusedRepresentation {
    EmbeddingMatrix vectors;
    FusionWeights weights;
};

/// Mean of the three modality vectors per instance, not renormalized.
EmbeddingMatrix prototype(const ModalityBundle& bundle);

/// Temperature softmax with max subtraction. Output sums to 1.
std::array<double, kNumModalities> softmax_weights(std::span<const double> alpha, double gamma);

/// alpha = cosine of each modality with the prototype; beta = softmax(alpha / gamma).
FusionWeights fusion_weights(const ModalityBundle& bundle, double gamma = kDefaultGamma);

/// beta-weighted sum of the modalities, optionally L2-normalized per row.
FusedRepresentation fuse(const ModalityBundle& bundle, const FusionWeights& weights, bool renormalize = true);

/// [image | noun | caption] per row, L2-normalized. N x 3d.
EmbeddingMatrix baseline_concat(const ModalityBundle& bundle);

/// Unweighted sum, L2-normalized.
EmbeddingMatrix baseline_sum(const ModalityBundle& bundle);

/// CSV with header instance_id,beta_image,beta_noun,beta_caption.
void write_beta_csv(const FusionWeights& weights, const std::filesystem::path& path);

}  // namespace cae
