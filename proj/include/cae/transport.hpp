#pragma once

#include <filesystem>
#include <vector>

#include "cae/embedding_store.hpp"

namespace cae {

/// c_ij = 1 - cos(x_i, u_j), entries in [0, 2].
struct CostMatrix {
    Matrix values;
};

struct SinkhornConfig {
    double epsilon = 0.05;
    std::size_t max_iter = 1000;
    /// L-infinity tolerance on both marginals.
    double marginal_tol = 1e-6;
    /// Stabilized iterations on log-potentials. The plain scaling form overflows for small epsilon.
    bool log_domain = true;

    void validate() const;
};

/// Entropic transport plan t_ij = a_i b_j exp(-c_ij / epsilon) with uniform marginals 1/N and 1/M.
struct TransportPlan {
    Matrix values;
    double epsilon = 0.0;
    std::size_t iterations_used = 0;
    /// Largest deviation of any row or column sum from its target.
    double marginal_error = 0.0;
    /// log a_i and log b_j.
    std::vector<double> log_row_scale;
    std::vector<double> log_col_scale;
};

struct MarginalError {
    double rows = 0.0;
    double cols = 0.0;
    double max() const { return rows > cols ? rows : cols; }
};

CostMatrix cost_matrix(const EmbeddingMatrix& images, const EmbeddingMatrix& texts);
CostMatrix cost_matrix(const SimilarityMatrix& sims);

/// Sinkhorn-Knopp: rows are projected first, then columns; the returned plan follows a
/// row projection, so row sums are exact and the column error dominates marginal_error.
/// If max_iter runs out the last iterate is returned with its error.
TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornConfig& cfg);

/// L-infinity deviation of row sums from 1/rows and column sums from 1/cols.
MarginalError marginal_error(const Matrix& plan);

/// Max deviation of log t_ij + c_ij/eps from its best additive fit f_i + g_j.
double gibbs_residual(const Matrix& plan, const CostMatrix& cost, double epsilon);

/// x^t_i = sum_j t_ij s_ij text_j, optionally L2-normalized per row.
EmbeddingMatrix counterpart(const EmbeddingMatrix& images, const EmbeddingMatrix& texts,
                            const TransportPlan& plan, const SimilarityMatrix& sims,
                            bool normalize_output = true);

struct SoftmaxCounterpart {
    EmbeddingMatrix vectors;
    /// w_ij = softmax_j(s_ij / temperature); rows sum to 1.
    Matrix weights;
};

/// Similarity-softmax aggregation x_i = sum_j w_ij text_j, the row-constrained-only baseline.
SoftmaxCounterpart softmax_counterpart(const EmbeddingMatrix& images, const EmbeddingMatrix& texts,
                                       double temperature = 1.0);

/// Frobenius inner product <plan, cost>.
double transport_cost(const Matrix& plan, const CostMatrix& cost);

/// transport_cost of the softmax weights scaled by 1/N, so both sides carry unit mass.
double softmax_transport_cost(const Matrix& weights, const CostMatrix& cost);

/// Writes the plan as an EMB1 matrix (fused code) plus "<path>.meta" with the solver diagnostics.
void save_plan(const TransportPlan& plan, const std::filesystem::path& path);

}  // namespace cae
