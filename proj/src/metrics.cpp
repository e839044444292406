#include "cae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include "cae/error.hpp"

namespace cae {
namespace {

void check_pair(const LabelVector& y_true, const LabelVector& y_pred) {
    if (y_true.size() != y_pred.size())
        throw ShapeError("label vectors differ in length: " + std::to_string(y_true.size()) + " vs " +
                         std::to_string(y_pred.size()));
    if (y_true.empty()) throw FormatError("label vectors are empty");
}

std::vector<std::size_t> dense_codes(const LabelVector& y, std::size_t& distinct) {
    std::map<std::uint32_t, std::size_t> code;
    for (auto l : y) code.emplace(l, 0);
    std::size_t next = 0;
    for (auto& [label, c] : code) c = next++;
    distinct = next;
    std::vector<std::size_t> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = code[y[i]];
    return out;
}

double entropy(const std::vector<std::uint64_t>& sizes, double n) {
    double h = 0.0;
    for (auto s : sizes)
        if (s > 0) {
            const double p = static_cast<double>(s) / n;
            h -= p * std::log(p);
        }
    return h;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

NmiNormalization nmi_normalization_from_string(std::string_view s) {
    if (s == "arithmetic") return NmiNormalization::arithmetic;
    if (s == "geometric") return NmiNormalization::geometric;
    if (s == "min") return NmiNormalization::min;
    if (s == "max") return NmiNormalization::max;
    throw ConfigError("unknown NMI normalization '" + std::string(s) + "'");
}

ContingencyTable contingency(const LabelVector& y_true, const LabelVector& y_pred) {
    check_pair(y_true, y_pred);
    ContingencyTable t;
    const auto a = dense_codes(y_true, t.classes);
    const auto b = dense_codes(y_pred, t.clusters);
    t.counts.assign(t.classes * t.clusters, 0);
    for (std::size_t i = 0; i < a.size(); ++i) ++t.counts[a[i] * t.clusters + b[i]];
    t.n_total = y_true.size();
    return t;
}

double nmi(const LabelVector& y_true, const LabelVector& y_pred, NmiNormalization norm) {
    const ContingencyTable t = contingency(y_true, y_pred);
    const double n = static_cast<double>(t.n_total);
    std::vector<std::uint64_t> rows(t.classes, 0), cols(t.clusters, 0);
    for (std::size_t a = 0; a < t.classes; ++a)
        for (std::size_t b = 0; b < t.clusters; ++b) {
            rows[a] += t(a, b);
            cols[b] += t(a, b);
        }
    double mi = 0.0;
    for (std::size_t a = 0; a < t.classes; ++a)
        for (std::size_t b = 0; b < t.clusters; ++b) {
            const double c = static_cast<double>(t(a, b));
            if (c == 0.0) continue;
            mi += (c / n) * std::log(c * n / (static_cast<double>(rows[a]) * static_cast<double>(cols[b])));
        }
    const double ht = entropy(rows, n), hp = entropy(cols, n);
    double denom = 0.0;
    switch (norm) {
        case NmiNormalization::arithmetic: denom = 0.5 * (ht + hp); break;
        case NmiNormalization::geometric: denom = std::sqrt(ht * hp); break;
        case NmiNormalization::min: denom = std::min(ht, hp); break;
        case NmiNormalization::max: denom = std::max(ht, hp); break;
    }
    if (denom <= 0.0) return 0.0;
    return std::clamp(mi / denom, 0.0, 1.0);
}

std::vector<std::ptrdiff_t> max_benefit_assignment(const Matrix& benefit) {
    const std::size_t r = benefit.rows(), c = benefit.cols();
    const std::size_t s = std::max(r, c);
    if (s == 0) return {};
    double top = 0.0;
    for (double v : benefit.data()) top = std::max(top, v);

    // Shortest augmenting path formulation, 1-based with a virtual column 0.
    auto cost = [&](std::size_t i, std::size_t j) {
        const double b = (i < r && j < c) ? benefit(i, j) : 0.0;
        return top - b;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(s + 1, 0.0), v(s + 1, 0.0);
    std::vector<std::size_t> p(s + 1, 0), way(s + 1, 0);
    for (std::size_t i = 1; i <= s; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(s + 1, inf);
        std::vector<char> used(s + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= s; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= s; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::ptrdiff_t> match(r, -1);
    for (std::size_t j = 1; j <= s; ++j)
        if (p[j] != 0 && p[j] - 1 < r && j - 1 < c) match[p[j] - 1] = static_cast<std::ptrdiff_t>(j - 1);
    return match;
}

double accuracy(const LabelVector& y_true, const LabelVector& y_pred) {
    const ContingencyTable t = contingency(y_true, y_pred);
    // Rows are predicted clusters, columns true classes.
    Matrix benefit(t.clusters, t.classes);
    for (std::size_t a = 0; a < t.classes; ++a)
        for (std::size_t b = 0; b < t.clusters; ++b) benefit(b, a) = static_cast<double>(t(a, b));
    const auto match = max_benefit_assignment(benefit);
    std::uint64_t hits = 0;
    for (std::size_t b = 0; b < match.size(); ++b)
        if (match[b] >= 0) hits += t(static_cast<std::size_t>(match[b]), b);
    return static_cast<double>(hits) / static_cast<double>(t.n_total);
}

double ari(const LabelVector& y_true, const LabelVector& y_pred) {
    const ContingencyTable t = contingency(y_true, y_pred);
    if (t.n_total < 2) throw FormatError("ari needs at least 2 labels");
    const double n = static_cast<double>(t.n_total);
    // Both partitions trivial in the same way: define as perfect agreement.
    if ((t.classes == 1 && t.clusters == 1) || (t.classes == t.n_total && t.clusters == t.n_total)) return 1.0;

    std::vector<double> rows(t.classes, 0.0), cols(t.clusters, 0.0);
    double index = 0.0;
    for (std::size_t a = 0; a < t.classes; ++a)
        for (std::size_t b = 0; b < t.clusters; ++b) {
            const double c = static_cast<double>(t(a, b));
            rows[a] += c;
            cols[b] += c;
            index += choose2(c);
        }
    double sum_rows = 0.0, sum_cols = 0.0;
    for (double x : rows) sum_rows += choose2(x);
    for (double x : cols) sum_cols += choose2(x);
    const double expected = sum_rows * sum_cols / choose2(n);
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 0.0;
    return (index - expected) / (max_index - expected);
}

MetricReport evaluate(const LabelVector& y_true, const LabelVector& y_pred, NmiNormalization norm) {
    return {nmi(y_true, y_pred, norm), accuracy(y_true, y_pred), ari(y_true, y_pred)};
}

void print_report(std::ostream& out, const MetricReport& report) {
    const auto flags = out.flags();
    out << std::left << std::setw(8) << "metric" << std::right << std::setw(10) << "value" << '\n'
        << std::fixed << std::setprecision(4);
    out << std::left << std::setw(8) << "NMI" << std::right << std::setw(10) << report.nmi << '\n';
    out << std::left << std::setw(8) << "ACC" << std::right << std::setw(10) << report.acc << '\n';
    out << std::left << std::setw(8) << "ARI" << std::right << std::setw(10) << report.ari << '\n';
    out.flags(flags);
}

}  // namespace cae
