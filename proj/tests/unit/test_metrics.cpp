#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cae/error.hpp"
#include "cae/metrics.hpp"
#include "oracles.hpp"

using namespace cae;

TEST_CASE("contingency") {
    const auto t = contingency({0, 0, 1, 1}, {1, 1, 0, 0});
    CHECK(t.classes == 2);
    CHECK(t.clusters == 2);
    CHECK(t(0, 0) == 0);
    CHECK(t(0, 1) == 2);
    CHECK(t(1, 0) == 2);
    const auto r = contingency({0, 1}, {0, 0});
    CHECK(r.classes == 2);
    CHECK(r.clusters == 1);
    CHECK(r.n_total == 2);
    const auto d = contingency({5, 9, 5}, {5, 9, 5});
    CHECK(d(0, 0) == 2);
    CHECK(d(1, 1) == 1);
    CHECK(d(0, 1) == 0);
    CHECK_THROWS_AS(contingency({0, 1}, {0}), ShapeError);
    CHECK_THROWS_AS(contingency({}, {}), FormatError);
}

TEST_CASE("nmi") {
    CHECK(nmi({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(nmi({0, 0, 1, 1}, {0, 0, 0, 0}) == 0.0);
    CHECK(nmi({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(oracles::nmi({0, 0, 1, 1}, {0, 1, 1, 1})).epsilon(1e-12));
    CHECK(nmi({3, 3, 3}, {3, 3, 3}) == 0.0);

    const LabelVector a{0, 0, 1, 1, 2, 2, 2}, b{0, 1, 1, 1, 2, 0, 2};
    for (auto norm : {NmiNormalization::arithmetic, NmiNormalization::geometric, NmiNormalization::min,
                      NmiNormalization::max})
        CHECK(std::abs(nmi(a, b, norm) - oracles::nmi(a, b, norm)) < 1e-12);
    CHECK(nmi(a, b, NmiNormalization::min) >= nmi(a, b, NmiNormalization::max));
    CHECK_THROWS_AS(nmi_normalization_from_string("median"), ConfigError);
}

TEST_CASE("accuracy") {
    CHECK(accuracy({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1}) == 1.0);
    CHECK(accuracy({0, 0, 1, 1}, {0, 1, 0, 1}) == 0.5);
    // More clusters than classes: only one cluster maps to each class.
    CHECK(accuracy({0, 0, 0, 0}, {0, 1, 2, 2}) == 0.5);
    CHECK(accuracy({0, 1, 2, 3}, {0, 0, 0, 0}) == 0.25);
}

TEST_CASE("ari") {
    CHECK(ari({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(ari({0, 0, 1, 1}, {0, 0, 1, 2}) == doctest::Approx(oracles::ari({0, 0, 1, 1}, {0, 0, 1, 2})).epsilon(1e-12));
    CHECK(ari({0, 0}, {0, 0}) == 1.0);
    CHECK_THROWS_AS(ari({0}, {0}), FormatError);
}

TEST_CASE("max_benefit_assignment") {
    const Matrix b(3, 3, {1, 2, 3, 2, 4, 6, 3, 6, 9});
    const auto a = max_benefit_assignment(b);
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) total += b(i, static_cast<std::size_t>(a[i]));
    CHECK(total == 14.0);
    const auto wide = max_benefit_assignment(Matrix(1, 3, {1, 5, 2}));
    CHECK(wide[0] == 1);
    const auto tall = max_benefit_assignment(Matrix(3, 1, {1, 5, 2}));
    CHECK(tall[1] == 0);
    CHECK(tall[0] == -1);
    CHECK(tall[2] == -1);
}

TEST_CASE("metrics agree with the oracles on random instances") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 150; ++t) {
        const std::size_t n = 2 + rng() % 30;
        const auto a = oracles::random_labels(n, 1 + rng() % 6, rng);
        const auto b = oracles::random_labels(n, 1 + rng() % 6, rng);
        CHECK(accuracy(a, b) == doctest::Approx(oracles::brute_force_accuracy(a, b)).epsilon(1e-12));
        CHECK(std::abs(ari(a, b) - oracles::ari(a, b)) < 1e-12);
        CHECK(std::abs(nmi(a, b) - oracles::nmi(a, b)) < 1e-10);
    }
}

TEST_CASE("metric properties") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 5 + rng() % 40;
        const auto a = oracles::random_labels(n, 2 + rng() % 4, rng);
        const auto b = oracles::random_labels(n, 2 + rng() % 4, rng);
        const auto r = evaluate(a, b);
        CHECK(r.nmi >= 0.0);
        CHECK(r.nmi <= 1.0 + 1e-12);
        CHECK(r.acc > 0.0);
        CHECK(r.acc <= 1.0);
        CHECK(r.ari >= -1.0);
        CHECK(r.ari <= 1.0);
        CHECK(nmi(a, b) == doctest::Approx(nmi(b, a)).epsilon(1e-12));
        CHECK(ari(a, b) == doctest::Approx(ari(b, a)).epsilon(1e-12));

        // Relabeling either side changes nothing.
        LabelVector relabeled(b);
        for (auto& v : relabeled) v = 17 - v;
        const auto s = evaluate(a, relabeled);
        CHECK(s.nmi == doctest::Approx(r.nmi).epsilon(1e-12));
        CHECK(s.acc == r.acc);
        CHECK(s.ari == doctest::Approx(r.ari).epsilon(1e-12));
    }
}

TEST_CASE("ari is chance-adjusted") {
    std::mt19937_64 rng(43);
    LabelVector truth(50);
    for (std::size_t i = 0; i < 50; ++i) truth[i] = static_cast<std::uint32_t>(i % 3);
    double total = 0.0;
    for (int t = 0; t < 1000; ++t) total += ari(truth, oracles::random_labels(50, 3, rng));
    CHECK(std::abs(total / 1000) <= 0.02);
}

TEST_CASE("print_report") {
    std::ostringstream out;
    print_report(out, {0.5, 0.75, 0.25});
    CHECK(out.str().find("0.7500") != std::string::npos);
}
