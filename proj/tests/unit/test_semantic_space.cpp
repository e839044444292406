#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cae/error.hpp"
#include "cae/semantic_space.hpp"
#include "helpers.hpp"

using namespace cae;

TEST_CASE("default_num_centers") {
    CHECK(default_num_centers(3000, 300) == 10);
    CHECK(default_num_centers(100, 300) == 1);
    CHECK(default_num_centers(19500, 300) == 65);
}

TEST_CASE("assignment_probability") {
    SUBCASE("single center") {
        std::mt19937_64 rng(1);
        const auto p = assignment_probability(testing::unit_rows(5, 3, rng), testing::rows_of({{1, 0, 0}}));
        for (std::size_t i = 0; i < 5; ++i) CHECK(p(i, 0) == 1.0);
    }
    SUBCASE("orthogonal text is split evenly") {
        const auto p = assignment_probability(testing::rows_of({{0, 0, 1}}), testing::rows_of({{1, 0, 0}, {0, 1, 0}}));
        CHECK(p(0, 0) == doctest::Approx(0.5));
        CHECK(p(0, 1) == doctest::Approx(0.5));
    }
    SUBCASE("text equal to a center") {
        const auto p = assignment_probability(testing::rows_of({{1, 0}}), testing::rows_of({{1, 0}, {0, 1}}));
        const double e = std::exp(1.0);
        CHECK(p(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-12));
        CHECK(p(0, 1) == doctest::Approx(1 / (e + 1)).epsilon(1e-12));
    }
    SUBCASE("rows sum to one and entries are positive") {
        std::mt19937_64 rng(2);
        const auto p = assignment_probability(testing::unit_rows(50, 8, rng), testing::unit_rows(6, 8, rng));
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double s = 0.0;
            for (double v : p.row(i)) {
                CHECK(v > 0.0);
                s += v;
            }
            CHECK(std::abs(s - 1.0) < 1e-9);
        }
    }
    CHECK_THROWS_AS(assignment_probability(testing::rows_of({{1, 0}}), testing::rows_of({{1, 0, 0}})), ShapeError);
}

TEST_CASE("select_topk") {
    const Matrix probs(3, 1, {0.5, 0.3, 0.3});
    CHECK(select_topk(probs, 2)[0] == std::vector<std::uint32_t>{0, 1});
    CHECK(select_topk(probs, 1)[0] == std::vector<std::uint32_t>{0});
    CHECK(select_topk(probs, 10)[0].size() == 3);
    CHECK_THROWS_AS(select_topk(Matrix(), 1), ShapeError);
    CHECK_THROWS_AS(select_topk(probs, 0), ConfigError);
}

TEST_CASE("select_texts") {
    SUBCASE("exhaustion") {
        std::mt19937_64 rng(3);
        const auto sel = select_texts(testing::unit_rows(3, 4, rng), testing::unit_rows(1, 4, rng), 3);
        CHECK(sel.indices == std::vector<std::uint32_t>{0, 1, 2});
    }
    SUBCASE("matching nouns beat the distractor") {
        const auto centers = testing::rows_of({{1, 0, 0}, {0, 1, 0}});
        const auto bank = testing::rows_of({{0, 0, 1}, {0, 1, 0}, {1, 0, 0}}, Modality::noun);
        const auto sel = select_texts(bank, centers, 1);
        CHECK(sel.indices == std::vector<std::uint32_t>{1, 2});
        CHECK(sel.embeddings.modality() == Modality::noun);
        CHECK(sel.embeddings.values()(0, 1) == 1.0);
    }
}

TEST_CASE("selection properties") {
    std::mt19937_64 rng(4);
    const auto bank = testing::unit_rows(80, 6, rng, Modality::noun);
    const auto centers = testing::unit_rows(4, 6, rng);

    SUBCASE("union grows with topk and is bounded") {
        std::vector<std::uint32_t> prev;
        for (std::size_t k = 1; k <= 12; ++k) {
            const auto sel = select_texts(bank, centers, k);
            CHECK(sel.indices.size() <= 4 * k);
            CHECK(std::ranges::is_sorted(sel.indices));
            CHECK(std::ranges::includes(sel.indices, prev));
            prev = sel.indices;
        }
    }
    SUBCASE("a text ranked below every selection leaves the union unchanged") {
        const auto before = select_texts(bank, centers, 5);
        // The antipode of the center sum ranks below every center's selection here.
        Matrix grown(81, 6);
        for (std::size_t i = 0; i < 80; ++i) std::ranges::copy(bank.row(i), grown.row(i).begin());
        std::vector<double> anti(6, 0.0);
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t t = 0; t < 6; ++t) anti[t] -= centers.values()(j, t);
        const double n = norm(anti);
        for (std::size_t t = 0; t < 6; ++t) grown(80, t) = anti[t] / n;
        const auto probs = assignment_probability(EmbeddingMatrix(grown, Modality::noun), centers);
        const auto lists = select_topk(assignment_probability(bank, centers), 5);
        for (std::size_t j = 0; j < 4; ++j)
            for (auto idx : lists[j]) REQUIRE(probs(80, j) < probs(idx, j));
        CHECK(select_texts(EmbeddingMatrix(grown, Modality::noun), centers, 5).indices == before.indices);
    }
}

TEST_CASE("build_semantic_space is deterministic") {
    std::mt19937_64 rng(5);
    const auto images = testing::unit_rows(120, 5, rng);
    const auto nouns = testing::unit_rows(40, 5, rng, Modality::noun);
    const auto captions = testing::unit_rows(60, 5, rng, Modality::caption);
    SpaceConfig cfg;
    cfg.centers_divisor = 30;
    cfg.topk = 3;
    const auto a = build_semantic_space(images, nouns, captions, cfg);
    const auto b = build_semantic_space(images, nouns, captions, cfg);
    CHECK(a.centers.rows() == 4);
    CHECK(a.centers == b.centers);
    CHECK(a.nouns.indices == b.nouns.indices);
    CHECK(a.captions.indices == b.captions.indices);

    CHECK_THROWS_AS(build_semantic_space(images, testing::unit_rows(4, 3, rng), captions, cfg), ShapeError);
}
