#include "cae/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "cae/error.hpp"

namespace cae {
namespace {

// Portable sampling on top of mt19937_64, whose output sequence is fixed by the standard.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do u1 = uniform();
        while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t index(std::size_t n) {
        return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
    }

    void unit(std::span<double> out) {
        double n = 0.0;
        do {
            for (double& v : out) v = normal();
            n = norm(out);
        } while (n == 0.0);
        for (double& v : out) v /= n;
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

void normalize(std::span<double> v) {
    const double n = norm(v);
    if (n > 0.0)
        for (double& x : v) x /= n;
}

Matrix class_directions(const SynthSpec& spec, Sampler& s) {
    constexpr int kAttempts = 10000;
    Matrix dirs(spec.n_classes, spec.dim);
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        bool ok = false;
        for (int attempt = 0; attempt < kAttempts && !ok; ++attempt) {
            s.unit(dirs.row(c));
            ok = true;
            for (std::size_t p = 0; p < c && ok; ++p) ok = dot(dirs.row(c), dirs.row(p)) <= spec.max_class_cosine;
        }
        if (!ok)
            throw ConfigError("synth: dim " + std::to_string(spec.dim) + " too small to place " +
                              std::to_string(spec.n_classes) + " class directions with pairwise cosine <= " +
                              std::to_string(spec.max_class_cosine));
    }
    return dirs;
}

Matrix nuisance_basis(const SynthSpec& spec, Sampler& s) {
    const std::size_t rank = std::min(spec.nuisance_rank, spec.dim);
    Matrix basis(rank, spec.dim);
    for (std::size_t r = 0; r < rank; ++r) {
        auto b = basis.row(r);
        double n = 0.0;
        while (n < 1e-8) {
            s.unit(b);
            for (std::size_t q = 0; q < r; ++q) {
                const double proj = dot(b, basis.row(q));
                for (std::size_t k = 0; k < b.size(); ++k) b[k] -= proj * basis(q, k);
            }
            n = norm(b);
        }
        for (double& v : b) v /= n;
    }
    return basis;
}

EmbeddingMatrix text_bank(const SynthSpec& spec, const Matrix& dirs, std::size_t size, double sigma,
                          double ambiguity, Modality modality, Sampler& s) {
    const auto aligned = static_cast<std::size_t>(std::llround(spec.text_alignment * static_cast<double>(size)));
    Matrix bank(size, spec.dim);
    for (std::size_t i = 0; i < size; ++i) {
        auto row = bank.row(i);
        if (i < aligned) {
            const std::size_t c = s.index(spec.n_classes);
            for (std::size_t k = 0; k < spec.dim; ++k) row[k] = dirs(c, k) + sigma * s.normal();
            if (ambiguity > 0.0 && spec.n_classes > 1 && s.uniform() < ambiguity) {
                const std::size_t other = (c + 1 + s.index(spec.n_classes - 1)) % spec.n_classes;
                for (std::size_t k = 0; k < spec.dim; ++k) row[k] += dirs(other, k);
            }
            normalize(row);
        } else {
            s.unit(row);
        }
    }
    return {std::move(bank), modality};
}

}  // namespace

void SynthSpec::validate() const {
    if (n_classes < 1 || per_class < 1 || dim < 1 || noun_bank < 1 || caption_bank < 1)
        throw ConfigError("synth: all counts must be >= 1");
    if (!(noise_sigma > 0.0)) throw ConfigError("synth: noise_sigma must be > 0");
    if (!(text_alignment >= 0.0 && text_alignment <= 1.0)) throw ConfigError("synth: text_alignment must be in [0, 1]");
    if (!(noun_ambiguity >= 0.0 && noun_ambiguity <= 1.0)) throw ConfigError("synth: noun_ambiguity must be in [0, 1]");
    if (nuisance_scale < 0.0 || nuisance_spread < 0.0) throw ConfigError("synth: nuisance parameters must be >= 0");
}

SyntheticData generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    Sampler s(spec.seed);
    Matrix dirs = class_directions(spec, s);
    const Matrix basis = nuisance_basis(spec, s);

    const std::size_t n = spec.n_classes * spec.per_class;
    Matrix images(n, spec.dim);
    LabelVector labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i / spec.per_class;
        labels[i] = static_cast<std::uint32_t>(c);
        auto row = images.row(i);
        const double amp = spec.nuisance_scale * std::exp(spec.nuisance_spread * s.normal());
        for (std::size_t k = 0; k < spec.dim; ++k) row[k] = spec.class_separation * dirs(c, k);
        for (std::size_t r = 0; r < basis.rows(); ++r) {
            const double z = amp * s.normal();
            for (std::size_t k = 0; k < spec.dim; ++k) row[k] += z * basis(r, k);
        }
        for (double& v : row) v += spec.noise_sigma * s.normal();
        normalize(row);
    }

    auto nouns = text_bank(spec, dirs, spec.noun_bank, spec.noise_sigma, spec.noun_ambiguity, Modality::noun, s);
    auto captions = text_bank(spec, dirs, spec.caption_bank, 2.0 * spec.noise_sigma, 0.0, Modality::caption, s);
    return {EmbeddingMatrix(std::move(images), Modality::image), std::move(nouns), std::move(captions),
            std::move(labels), std::move(dirs)};
}

}  // namespace cae
