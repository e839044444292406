#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cae/embedding_store.hpp"

namespace testing {

inline cae::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    cae::Matrix m(r, c);
    for (double& v : m.data()) v = u(rng);
    return m;
}

inline cae::Matrix gaussian_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    cae::Matrix m(r, c);
    for (double& v : m.data()) v = g(rng);
    return m;
}

inline cae::EmbeddingMatrix unit_rows(std::size_t r, std::size_t c, std::mt19937_64& rng,
                                      cae::Modality m = cae::Modality::image) {
    return cae::l2_normalize({gaussian_matrix(r, c, rng), m});
}

inline cae::EmbeddingMatrix rows_of(std::vector<std::vector<double>> rows, cae::Modality m = cae::Modality::image) {
    cae::Matrix out(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
    return {std::move(out), m};
}

// Plain fixed-point Sinkhorn in long double: alternate u = a / (K v), v = b / (K^T u) until the
// iterates stop moving. Kept deliberately naive and independent of the library solver.
inline cae::Matrix oracle_sinkhorn(const cae::Matrix& cost, double eps, int iterations = 20000) {
    const std::size_t n = cost.rows(), m = cost.cols();
    std::vector<std::vector<long double>> k(n, std::vector<long double>(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) k[i][j] = std::exp(-static_cast<long double>(cost(i, j)) / eps);
    std::vector<long double> u(n, 1.0L), v(m, 1.0L);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            long double s = 0;
            for (std::size_t j = 0; j < m; ++j) s += k[i][j] * v[j];
            u[i] = (1.0L / n) / s;
        }
        for (std::size_t j = 0; j < m; ++j) {
            long double s = 0;
            for (std::size_t i = 0; i < n; ++i) s += k[i][j] * u[i];
            v[j] = (1.0L / m) / s;
        }
    }
    cae::Matrix plan(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) plan(i, j) = static_cast<double>(u[i] * k[i][j] * v[j]);
    return plan;
}

inline double max_abs_diff(const cae::Matrix& a, const cae::Matrix& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
    return worst;
}

}  // namespace testing
