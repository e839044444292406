#include "cae/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "cae/error.hpp"

namespace cae {
namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& rng) {
    // 53 random bits, independent of the standard library's distribution implementation.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<std::size_t> pp_select(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = x.rows();
    std::vector<std::size_t> chosen;
    std::vector<char> taken(n, 0);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t idx) {
        chosen.push_back(idx);
        taken[idx] = 1;
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = taken[i] ? 0.0 : std::min(d2[i], squared_distance(x.row(i), x.row(idx)));
    };

    take(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
    while (chosen.size() < k) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i] || d2[i] == 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc > target) break;
            }
        } else {
            // Remaining rows duplicate chosen ones: draw uniformly among them.
            const auto remaining = n - chosen.size();
            auto r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(remaining));
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i] && r-- == 0) {
                    pick = i;
                    break;
                }
        }
        take(pick);
    }
    return chosen;
}

double assign(const Matrix& x, const Matrix& centers, LabelVector& labels, std::vector<double>& dist) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        labels[i] = static_cast<std::uint32_t>(nearest_center(x.row(i), centers, &dist[i]));
        inertia += dist[i];
    }
    return inertia;
}

// Recomputes centers as member means. Empty clusters take the point farthest from its center.
Matrix update_centers(const Matrix& x, const Matrix& old, LabelVector& labels, std::vector<double>& dist) {
    const std::size_t k = old.rows(), d = x.cols();
    std::vector<std::size_t> counts(k, 0);
    for (auto l : labels) ++counts[l];

    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] != 0) continue;
        std::size_t far = x.rows();
        double best = -1.0;
        for (std::size_t i = 0; i < x.rows(); ++i)
            if (counts[labels[i]] > 1 && dist[i] > best) {
                best = dist[i];
                far = i;
            }
        --counts[labels[far]];
        labels[far] = static_cast<std::uint32_t>(j);
        dist[far] = 0.0;
        counts[j] = 1;
    }

    Matrix centers(k, d, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto c = centers.row(labels[i]);
        auto r = x.row(i);
        for (std::size_t t = 0; t < d; ++t) c[t] += r[t];
    }
    for (std::size_t j = 0; j < k; ++j)
        for (double& v : centers.row(j)) v /= static_cast<double>(counts[j]);
    return centers;
}

double mean_variance(const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    double total = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, t);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (x(i, t) - mean) * (x(i, t) - mean);
        total += var / static_cast<double>(n);
    }
    return total / static_cast<double>(d);
}

KMeansResult lloyd(const EmbeddingMatrix& x, const KMeansConfig& cfg, std::size_t restart, double tol) {
    const Matrix& data = x.values();
    auto rng = make_rng(cfg.seed, restart);
    const auto seeds = pp_select(data, cfg.k, rng);
    Matrix centers(cfg.k, data.cols());
    for (std::size_t j = 0; j < cfg.k; ++j) std::ranges::copy(data.row(seeds[j]), centers.row(j).begin());

    KMeansResult res{LabelVector(data.rows()), EmbeddingMatrix(centers, x.modality()), 0.0, {}, 0, restart, false};
    std::vector<double> dist(data.rows());
    double inertia = assign(data, centers, res.assignments, dist);
    res.inertia_trace.push_back(inertia);

    LabelVector next(data.rows());
    for (res.iterations = 1; res.iterations <= cfg.max_iter; ++res.iterations) {
        Matrix updated = update_centers(data, centers, res.assignments, dist);
        double shift = 0.0;
        for (std::size_t j = 0; j < cfg.k; ++j) shift += squared_distance(updated.row(j), centers.row(j));
        centers = std::move(updated);

        inertia = assign(data, centers, next, dist);
        res.inertia_trace.push_back(inertia);
        const bool stable = next == res.assignments;
        res.assignments.swap(next);
        if (stable || shift <= tol) {
            res.converged = true;
            break;
        }
    }
    res.iterations = std::min(res.iterations, cfg.max_iter);
    res.centers = EmbeddingMatrix(std::move(centers), x.modality());
    res.inertia = inertia;
    res.restart = restart;
    return res;
}

}  // namespace

void KMeansConfig::validate() const {
    if (k < 1) throw ConfigError("kmeans: k must be >= 1");
    if (restarts < 1) throw ConfigError("kmeans: restarts must be >= 1");
    if (max_iter < 1) throw ConfigError("kmeans: max_iter must be >= 1");
    if (!(rel_tol > 0.0)) throw ConfigError("kmeans: rel_tol must be > 0");
}

std::size_t nearest_center(std::span<const double> point, const Matrix& centers, double* distance) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.rows(); ++j) {
        const double d = squared_distance(point, centers.row(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    if (distance) *distance = best_d;
    return best;
}

std::vector<std::size_t> kmeans_pp_select(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed) {
    if (k < 1 || k > x.rows())
        throw ConfigError("kmeans++: k=" + std::to_string(k) + " must be in [1, " +
                          std::to_string(x.rows()) + "]");
    auto rng = make_rng(seed, 0);
    return pp_select(x.values(), k, rng);
}

EmbeddingMatrix kmeans_pp_init(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed) {
    const auto idx = kmeans_pp_select(x, k, seed);
    Matrix centers(k, x.dim());
    for (std::size_t j = 0; j < k; ++j) std::ranges::copy(x.row(idx[j]), centers.row(j).begin());
    return {std::move(centers), x.modality()};
}

KMeansResult kmeans_fit(const EmbeddingMatrix& x, const KMeansConfig& cfg) {
    cfg.validate();
    if (cfg.k > x.rows())
        throw ConfigError("kmeans: k=" + std::to_string(cfg.k) + " exceeds " +
                          std::to_string(x.rows()) + " rows");
    const double tol = cfg.rel_tol * mean_variance(x.values());

    std::vector<std::optional<KMeansResult>> runs(cfg.restarts);
    const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, cfg.restarts);
    if (workers == 1) {
        for (std::size_t r = 0; r < cfg.restarts; ++r) runs[r] = lloyd(x, cfg, r, tol);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t r = w; r < cfg.restarts; r += workers) runs[r] = lloyd(x, cfg, r, tol);
            });
    }

    std::size_t best = 0;
    for (std::size_t r = 1; r < cfg.restarts; ++r)
        if (runs[r]->inertia < runs[best]->inertia) best = r;
    return std::move(*runs[best]);
}

}  // namespace cae
