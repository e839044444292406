#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "cae/matrix.hpp"

namespace cae {

enum class Modality : std::uint8_t { image = 0, noun = 1, caption = 2, fused = 3 };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

/// N embeddings of dimension d for one modality.
///
/// Construction validates that the matrix is nonempty and every entry is finite.
/// Rows are not normalized implicitly; call l2_normalize.
class EmbeddingMatrix {
public:
    EmbeddingMatrix(Matrix values, Modality modality);

    std::size_t rows() const noexcept { return values_.rows(); }
    std::size_t dim() const noexcept { return values_.cols(); }
    Modality modality() const noexcept { return modality_; }

    std::span<const double> row(std::size_t i) const noexcept { return values_.row(i); }
    const Matrix& values() const noexcept { return values_; }

    EmbeddingMatrix with_modality(Modality m) const { return {values_, m}; }

    bool operator==(const EmbeddingMatrix&) const = default;

private:
    Matrix values_;
    Modality modality_;
};

/// Cosine similarities between the rows of two embedding matrices.
struct SimilarityMatrix {
    Matrix values;
};

// EMB1: "EMB1", u8 modality, 3 zero bytes, u32 rows, u32 dim, rows*dim binary32 (little-endian).
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes);

/// Values are stored as binary32; values exactly representable in float round-trip bitwise.
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& m);

// LBL1: "LBL1", u32 count, count u32 labels.
LabelVector load_labels(const std::filesystem::path& path);
void save_labels(const LabelVector& labels, const std::filesystem::path& path);

/// Index sidecar: u32 count followed by count u32 indices.
std::vector<std::uint32_t> load_index_list(const std::filesystem::path& path);
void save_index_list(std::span<const std::uint32_t> indices, const std::filesystem::path& path);

/// Debug reader: one embedding per line, comma separated. Blank lines and '#' comments skipped.
EmbeddingMatrix read_csv_embeddings(std::istream& in, Modality modality);

/// Scales each row to unit L2 norm. Throws NumericError naming the first all-zero row.
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m);

/// values[i][j] = <a_i, b_j> / (|a_i| |b_j|).
SimilarityMatrix cosine_similarity(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

}  // namespace cae
