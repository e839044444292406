#pragma once

#include <cstdint>
#include <vector>

#include "cae/embedding_store.hpp"

namespace cae {

enum class EmptyClusterPolicy { reseed_farthest };

struct KMeansConfig {
    std::size_t k = 2;
    std::uint64_t seed = 42;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    /// Stop once the summed squared center shift is at most rel_tol times the
    /// mean per-dimension variance of the data.
    double rel_tol = 1e-4;
    EmptyClusterPolicy empty_cluster_policy = EmptyClusterPolicy::reseed_farthest;
    /// Restarts run on up to this many threads. Output does not depend on it.
    std::size_t threads = 1;

    void validate() const;
};

struct KMeansResult {
    LabelVector assignments;
    EmbeddingMatrix centers;
    double inertia = 0.0;
    /// Inertia after every assignment step of the winning restart.
    std::vector<double> inertia_trace;
    std::size_t iterations = 0;
    std::size_t restart = 0;
    bool converged = false;
};

/// Lloyd's algorithm from k-means++ seeds, best of cfg.restarts by (inertia, restart index).
KMeansResult kmeans_fit(const EmbeddingMatrix& x, const KMeansConfig& cfg);

/// Row indices of k distinct seeds drawn with D^2 weighting.
std::vector<std::size_t> kmeans_pp_select(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed);

EmbeddingMatrix kmeans_pp_init(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed);

/// Index of the nearest center (squared Euclidean), ties to the lowest index.
std::size_t nearest_center(std::span<const double> point, const Matrix& centers, double* distance = nullptr);

}  // namespace cae
