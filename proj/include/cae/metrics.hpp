#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "cae/matrix.hpp"

namespace cae {

/// counts(a, b) = |{i : y_true_i is the a-th distinct true label and y_pred_i the b-th distinct predicted label}|.
/// Distinct labels are ordered by value.
struct ContingencyTable {
    std::size_t classes = 0;
    std::size_t clusters = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_total = 0;

    std::uint64_t operator()(std::size_t a, std::size_t b) const { return counts[a * clusters + b]; }
};

enum class NmiNormalization { arithmetic, geometric, min, max };

NmiNormalization nmi_normalization_from_string(std::string_view s);

struct MetricReport {
    double nmi = 0.0;
    double acc = 0.0;
    double ari = 0.0;
};

ContingencyTable contingency(const LabelVector& y_true, const LabelVector& y_pred);

/// Mutual information over the chosen mean of the two entropies (natural logs).
/// Returns 0 when the normalizer is 0.
double nmi(const LabelVector& y_true, const LabelVector& y_pred,
           NmiNormalization norm = NmiNormalization::arithmetic);

/// Best one-to-one mapping of predicted clusters onto true classes, as a fraction of all points.
double accuracy(const LabelVector& y_true, const LabelVector& y_pred);

/// Adjusted Rand index from pair counts.
double ari(const LabelVector& y_true, const LabelVector& y_pred);

MetricReport evaluate(const LabelVector& y_true, const LabelVector& y_pred,
                      NmiNormalization norm = NmiNormalization::arithmetic);

/// Maximum-benefit assignment on a rectangular matrix (Hungarian method, zero-padded to square).
/// Returns, for each row, its column or -1 when the row is left unmatched.
std::vector<std::ptrdiff_t> max_benefit_assignment(const Matrix& benefit);

/// Fixed-width table of the three scores.
void print_report(std::ostream& out, const MetricReport& report);

}  // namespace cae
