#include "cae/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "cae/error.hpp"

namespace cae {
namespace {

constexpr double kUnitTolerance = 1e-6;

void check_unit_rows(const EmbeddingMatrix& m, const char* name) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        if (std::abs(norm(m.row(i)) - 1.0) > kUnitTolerance)
            throw ShapeError(std::string("modality bundle: ") + name + " row " + std::to_string(i) +
                             " is not unit norm");
}

}  // namespace

ModalityBundle::ModalityBundle(EmbeddingMatrix image, EmbeddingMatrix noun, EmbeddingMatrix caption,
                               bool require_unit)
    : parts_{std::move(image), std::move(noun), std::move(caption)} {
    for (const auto& p : parts_)
        if (p.rows() != parts_[0].rows() || p.dim() != parts_[0].dim())
            throw ShapeError("modality bundle: all modalities must be " + std::to_string(parts_[0].rows()) + "x" +
                             std::to_string(parts_[0].dim()));
    if (!require_unit) return;
    check_unit_rows(parts_[0], "image");
    check_unit_rows(parts_[1], "noun");
    check_unit_rows(parts_[2], "caption");
}

EmbeddingMatrix prototype(const ModalityBundle& bundle) {
    Matrix p(bundle.rows(), bundle.dim(), 0.0);
    for (std::size_t i = 0; i < bundle.rows(); ++i) {
        auto out = p.row(i);
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = (bundle.image().row(i)[k] + bundle.noun().row(i)[k] + bundle.caption().row(i)[k]) / 3.0;
    }
    return {std::move(p), Modality::fused};
}

std::array<double, kNumModalities> softmax_weights(std::span<const double> alpha, double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("fusion: gamma must be > 0");
    if (alpha.size() != kNumModalities) throw ShapeError("fusion: expected three similarities");
    const double mx = *std::ranges::max_element(alpha);
    std::array<double, kNumModalities> beta{};
    double z = 0.0;
    for (std::size_t m = 0; m < kNumModalities; ++m) z += beta[m] = std::exp((alpha[m] - mx) / gamma);
    for (double& b : beta) b /= z;
    return beta;
}

FusionWeights fusion_weights(const ModalityBundle& bundle, double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("fusion: gamma must be > 0");
    const EmbeddingMatrix proto = prototype(bundle);
    FusionWeights w{Matrix(bundle.rows(), kNumModalities), Matrix(bundle.rows(), kNumModalities), gamma};
    for (std::size_t i = 0; i < bundle.rows(); ++i) {
        const double pn = norm(proto.row(i));
        if (!(pn > 0.0)) throw NumericError("fusion: zero prototype for instance " + std::to_string(i));
        for (std::size_t m = 0; m < kNumModalities; ++m) {
            const auto v = bundle[m].row(i);
            w.alpha(i, m) = dot(v, proto.row(i)) / (norm(v) * pn);
        }
        const auto beta = softmax_weights(w.alpha.row(i), gamma);
        std::ranges::copy(beta, w.beta.row(i).begin());
    }
    return w;
}

FusedRepresentation fuse(const ModalityBundle& bundle, const FusionWeights& weights, bool renormalize) {
    if (weights.beta.rows() != bundle.rows() || weights.beta.cols() != kNumModalities)
        throw ShapeError("fuse: beta must be " + std::to_string(bundle.rows()) + "x3");
    Matrix out(bundle.rows(), bundle.dim(), 0.0);
    for (std::size_t i = 0; i < bundle.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t m = 0; m < kNumModalities; ++m) {
            const double b = weights.beta(i, m);
            const auto v = bundle[m].row(i);
            for (std::size_t k = 0; k < o.size(); ++k) o[k] += b * v[k];
        }
        if (renormalize) {
            const double n = norm(o);
            if (!(n > 0.0)) throw NumericError("fuse: zero fused vector for instance " + std::to_string(i));
            for (double& v : o) v /= n;
        }
    }
    return {EmbeddingMatrix(std::move(out), Modality::fused), weights};
}

EmbeddingMatrix baseline_concat(const ModalityBundle& bundle) {
    const std::size_t d = bundle.dim();
    Matrix out(bundle.rows(), kNumModalities * d);
    for (std::size_t i = 0; i < bundle.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t m = 0; m < kNumModalities; ++m) std::ranges::copy(bundle[m].row(i), o.begin() + m * d);
    }
    return l2_normalize(EmbeddingMatrix(std::move(out), Modality::fused));
}

EmbeddingMatrix baseline_sum(const ModalityBundle& bundle) {
    Matrix out(bundle.rows(), bundle.dim(), 0.0);
    for (std::size_t i = 0; i < bundle.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t m = 0; m < kNumModalities; ++m) {
            const auto v = bundle[m].row(i);
            for (std::size_t k = 0; k < o.size(); ++k) o[k] += v[k];
        }
        if (!(norm(o) > 0.0)) throw NumericError("baseline_sum: zero sum for instance " + std::to_string(i));
    }
    return l2_normalize(EmbeddingMatrix(std::move(out), Modality::fused));
}

void write_beta_csv(const FusionWeights& weights, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "instance_id,beta_image,beta_noun,beta_caption\n";
    for (std::size_t i = 0; i < weights.beta.rows(); ++i)
        out << i << ',' << weights.beta(i, 0) << ',' << weights.beta(i, 1) << ',' << weights.beta(i, 2) << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace cae
