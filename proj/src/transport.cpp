#include "cae/transport.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "cae/error.hpp"

namespace cae {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

struct Potentials {
    std::vector<double> f, g;
    std::size_t iterations = 0;
};

// Works on the scaled kernel logits k_ij = -c_ij / eps.
Potentials solve_log_domain(const Matrix& logits, const SinkhornConfig& cfg) {
    const std::size_t n = logits.rows(), m = logits.cols();
    const double log_a = -std::log(static_cast<double>(n));
    const double log_b = -std::log(static_cast<double>(m));
    const double target_col = 1.0 / static_cast<double>(m);

    Potentials p{std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)};
    std::vector<double> col_max(m), col_acc(m);

    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        p.iterations = it;
        for (std::size_t i = 0; i < n; ++i) {
            auto k = logits.row(i);
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, p.g[j] + k[j]);
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += std::exp(p.g[j] + k[j] - mx);
            p.f[i] = log_a - (mx + std::log(s));
        }

        std::ranges::fill(col_max, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) {
            auto k = logits.row(i);
            for (std::size_t j = 0; j < m; ++j) col_max[j] = std::max(col_max[j], p.f[i] + k[j]);
        }
        std::ranges::fill(col_acc, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto k = logits.row(i);
            for (std::size_t j = 0; j < m; ++j) col_acc[j] += std::exp(p.f[i] + k[j] - col_max[j]);
        }
        double err = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double lse = col_max[j] + std::log(col_acc[j]);
            err = std::max(err, std::abs(std::exp(p.g[j] + lse) - target_col));
            col_acc[j] = lse;
        }
        if (!std::isfinite(err)) throw NumericError("sinkhorn: non-finite marginal error at iteration " + std::to_string(it));
        if (err <= cfg.marginal_tol || it == cfg.max_iter) break;
        for (std::size_t j = 0; j < m; ++j) p.g[j] = log_b - col_acc[j];
    }
    return p;
}

Potentials solve_scaling(const Matrix& logits, const SinkhornConfig& cfg) {
    const std::size_t n = logits.rows(), m = logits.cols();
    const double a = 1.0 / static_cast<double>(n), b = 1.0 / static_cast<double>(m);
    auto unstable = [](const std::string& where) {
        return NumericError("sinkhorn: " + where + " in plain scaling mode; enable log-domain iterations");
    };

    Matrix kernel(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) row += kernel(i, j) = std::exp(logits(i, j));
        if (!(row > 0.0) || !std::isfinite(row)) throw unstable("kernel row " + std::to_string(i) + " under/overflows");
    }

    std::vector<double> u(n, 1.0), v(m, 1.0), colsum(m);
    std::size_t iterations = 0;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        iterations = it;
        for (std::size_t i = 0; i < n; ++i) {
            double kv = 0.0;
            for (std::size_t j = 0; j < m; ++j) kv += kernel(i, j) * v[j];
            u[i] = a / kv;
            if (!std::isfinite(u[i]) || u[i] == 0.0) throw unstable("row scaling " + std::to_string(i) + " degenerated");
        }
        std::ranges::fill(colsum, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) colsum[j] += kernel(i, j) * u[i];
        double err = 0.0;
        for (std::size_t j = 0; j < m; ++j) err = std::max(err, std::abs(colsum[j] * v[j] - b));
        if (!std::isfinite(err)) throw unstable("marginal error overflowed");
        if (err <= cfg.marginal_tol || it == cfg.max_iter) break;
        for (std::size_t j = 0; j < m; ++j) {
            v[j] = b / colsum[j];
            if (!std::isfinite(v[j]) || v[j] == 0.0) throw unstable("column scaling " + std::to_string(j) + " degenerated");
        }
    }

    Potentials p{std::vector<double>(n), std::vector<double>(m), iterations};
    for (std::size_t i = 0; i < n; ++i) p.f[i] = std::log(u[i]);
    for (std::size_t j = 0; j < m; ++j) p.g[j] = std::log(v[j]);
    return p;
}

}  // namespace

void SinkhornConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("sinkhorn: epsilon must be > 0");
    if (!(marginal_tol > 0.0)) throw ConfigError("sinkhorn: marginal_tol must be > 0");
    if (max_iter < 1) throw ConfigError("sinkhorn: max_iter must be >= 1");
}

CostMatrix cost_matrix(const SimilarityMatrix& sims) {
    Matrix c = sims.values;
    for (double& v : c.data()) v = 1.0 - v;
    return {std::move(c)};
}

CostMatrix cost_matrix(const EmbeddingMatrix& images, const EmbeddingMatrix& texts) {
    return cost_matrix(cosine_similarity(images, texts));
}

TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornConfig& cfg) {
    cfg.validate();
    const Matrix& c = cost.values;
    if (c.empty()) throw ShapeError("sinkhorn: empty cost matrix");
    Matrix logits(c.rows(), c.cols());
    for (std::size_t k = 0; k < c.data().size(); ++k) {
        if (!std::isfinite(c.data()[k])) throw NumericError("sinkhorn: non-finite cost at flat index " + std::to_string(k));
        logits.data()[k] = -c.data()[k] / cfg.epsilon;
    }

    const Potentials p = cfg.log_domain ? solve_log_domain(logits, cfg) : solve_scaling(logits, cfg);

    TransportPlan plan{Matrix(c.rows(), c.cols()), cfg.epsilon, p.iterations, 0.0, p.f, p.g};
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j) plan.values(i, j) = std::exp(p.f[i] + p.g[j] + logits(i, j));
    plan.marginal_error = marginal_error(plan.values).max();
    return plan;
}

MarginalError marginal_error(const Matrix& plan) {
    MarginalError e;
    const double a = 1.0 / static_cast<double>(plan.rows()), b = 1.0 / static_cast<double>(plan.cols());
    for (double s : plan.row_sums()) e.rows = std::max(e.rows, std::abs(s - a));
    for (double s : plan.col_sums()) e.cols = std::max(e.cols, std::abs(s - b));
    return e;
}

double gibbs_residual(const Matrix& plan, const CostMatrix& cost, double epsilon) {
    require_same_shape(plan, cost.values, "gibbs_residual");
    const std::size_t n = plan.rows(), m = plan.cols();
    Matrix l(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (!(plan(i, j) > 0.0)) return std::numeric_limits<double>::infinity();
            l(i, j) = std::log(plan(i, j)) + cost.values(i, j) / epsilon;
        }
    // The least-squares additive fit is row mean + column mean - grand mean.
    std::vector<double> rm = l.row_sums(), cm = l.col_sums();
    const double grand = l.sum() / static_cast<double>(n * m);
    for (double& v : rm) v /= static_cast<double>(m);
    for (double& v : cm) v /= static_cast<double>(n);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(l(i, j) - rm[i] - cm[j] + grand));
    return worst;
}

EmbeddingMatrix counterpart(const EmbeddingMatrix& images, const EmbeddingMatrix& texts,
                            const TransportPlan& plan, const SimilarityMatrix& sims, bool normalize_output) {
    if (images.dim() != texts.dim()) throw ShapeError("counterpart: image and text dims differ");
    const Matrix expected(images.rows(), texts.rows());
    require_same_shape(plan.values, expected, "counterpart plan");
    require_same_shape(sims.values, expected, "counterpart similarities");

    Matrix out(images.rows(), texts.dim(), 0.0);
    for (std::size_t i = 0; i < images.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t j = 0; j < texts.rows(); ++j) {
            const double w = plan.values(i, j) * sims.values(i, j);
            auto t = texts.row(j);
            for (std::size_t k = 0; k < o.size(); ++k) o[k] += w * t[k];
        }
        const double n = norm(o);
        if (!(n > 0.0)) throw NumericError("counterpart: zero vector for image " + std::to_string(i));
        if (normalize_output)
            for (double& v : o) v /= n;
    }
    return {std::move(out), texts.modality()};
}

SoftmaxCounterpart softmax_counterpart(const EmbeddingMatrix& images, const EmbeddingMatrix& texts,
                                       double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("softmax_counterpart: temperature must be > 0");
    const SimilarityMatrix sims = cosine_similarity(images, texts);
    Matrix w = sims.values;
    Matrix out(images.rows(), texts.dim(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        auto r = w.row(i);
        const double mx = *std::ranges::max_element(r);
        double z = 0.0;
        for (double& v : r) z += (v = std::exp((v - mx) / temperature));
        for (double& v : r) v /= z;
        auto o = out.row(i);
        for (std::size_t j = 0; j < texts.rows(); ++j) {
            auto t = texts.row(j);
            for (std::size_t k = 0; k < o.size(); ++k) o[k] += r[j] * t[k];
        }
    }
    return {EmbeddingMatrix(std::move(out), texts.modality()), std::move(w)};
}

double transport_cost(const Matrix& plan, const CostMatrix& cost) {
    require_same_shape(plan, cost.values, "transport_cost");
    double s = 0.0;
    for (std::size_t k = 0; k < plan.data().size(); ++k) {
        if (plan.data()[k] < 0.0) throw NumericError("transport_cost: negative plan entry");
        s += plan.data()[k] * cost.values.data()[k];
    }
    return s;
}

double softmax_transport_cost(const Matrix& weights, const CostMatrix& cost) {
    Matrix scaled = weights;
    for (double& v : scaled.data()) v /= static_cast<double>(weights.rows());
    return transport_cost(scaled, cost);
}

void save_plan(const TransportPlan& plan, const std::filesystem::path& path) {
    save_embeddings(EmbeddingMatrix(plan.values, Modality::fused), path);
    auto meta = path;
    meta += ".meta";
    std::ofstream out(meta);
    if (!out) throw IoError("cannot open " + meta.string() + " for writing");
    auto shortest = [](double v) {
        char buf[32];
        return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
    };
    out << "epsilon=" << shortest(plan.epsilon) << "\niterations_used=" << plan.iterations_used
        << "\nmarginal_error=" << shortest(plan.marginal_error) << "\n";
    if (!out) throw IoError("write failure on " + meta.string());
}

}  // namespace cae
