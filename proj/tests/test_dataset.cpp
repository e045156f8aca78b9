#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pagrefine/dataset.hpp"
#include "pagrefine/errors.hpp"
#include "pagrefine/rng.hpp"

using namespace pagrefine;

namespace {

DiscreteDataset make_dataset(std::vector<std::size_t> cards,
                             std::vector<std::vector<std::int32_t>> rows) {
    DiscreteDataset ds;
    ds.variable_count = cards.size();
    ds.sample_count = rows.size();
    ds.cardinalities = std::move(cards);
    ds.variable_names.resize(ds.variable_count);
    for (std::size_t i = 0; i < ds.variable_count; ++i) ds.variable_names[i] = "V" + std::to_string(i);
    for (const auto& r : rows) {
        ds.rows.insert(ds.rows.end(), r.begin(), r.end());
    }
    return ds;
}

} // namespace

TEST_CASE("parse_csv infers cardinalities from the data") {
    const auto ds = parse_csv("A,B\n0,1\n1,2\n0,0\n", "test");
    CHECK(ds.variable_count == 2);
    CHECK(ds.sample_count == 3);
    CHECK(ds.cardinalities == std::vector<std::size_t>{2, 3});
    CHECK(ds.code(1, 1) == 2);
}

TEST_CASE("parse_csv rejects constant columns") {
    CHECK_THROWS_WITH_AS(parse_csv("A,B\n0,0\n0,0\n", "test"),
                         doctest::Contains("constant variable"), InputError);
}

TEST_CASE("parse_csv reports the location of bad cells") {
    CHECK_THROWS_WITH_AS(parse_csv("A,B\n0,1\n0,x\n", "test"), doctest::Contains("line 3"),
                         InputError);
    CHECK_THROWS_WITH_AS(parse_csv("A,B\n0,1\n0,x\n", "test"), doctest::Contains("'x'"),
                         InputError);
    CHECK_THROWS_WITH_AS(parse_csv("A,B\n0,\n1,1\n", "test"),
                         doctest::Contains("missing value"), InputError);
    CHECK_THROWS_WITH_AS(parse_csv("A,B\n0,\n1,1\n", "test"), doctest::Contains("column 'B'"),
                         InputError);
}

TEST_CASE("parse_csv honors a cardinality sidecar but never below the data") {
    const std::map<std::string, std::size_t> cards{{"B", 4}};
    const auto ds = parse_csv("A,B\n0,1\n1,2\n0,0\n", "test", &cards);
    CHECK(ds.cardinalities == std::vector<std::size_t>{2, 4});

    const std::map<std::string, std::size_t> low{{"B", 2}};
    CHECK_THROWS_AS(parse_csv("A,B\n0,1\n1,2\n0,0\n", "test", &low), InputError);
}

TEST_CASE("build_layout produces prefix sums") {
    SUBCASE("two variables") {
        const auto ds = make_dataset({2, 3}, {{0, 0}, {1, 1}});
        const auto layout = build_layout(ds);
        CHECK(layout.offsets == std::vector<std::size_t>{0, 2});
        CHECK(layout.total_states == 5);
        CHECK(layout.variable_of(1) == 0);
        CHECK(layout.variable_of(2) == 1);
        CHECK(layout.variable_of(4) == 1);
    }
    SUBCASE("single variable") {
        const auto layout = build_layout(make_dataset({2}, {{0}, {1}}));
        CHECK(layout.offsets == std::vector<std::size_t>{0});
        CHECK(layout.total_states == 2);
    }
    SUBCASE("three ternary variables") {
        const auto layout = build_layout(make_dataset({3, 3, 3}, {{0, 1, 2}}));
        CHECK(layout.total_states == 9);
    }
}

TEST_CASE("one_hot_expand places single ones per block") {
    SUBCASE("row (1,2) with cards 2,3") {
        const auto ds = make_dataset({2, 3}, {{1, 2}});
        const auto x = one_hot_expand(ds, build_layout(ds));
        const std::vector<double> expected{0, 1, 0, 0, 1};
        CHECK(std::vector<double>(x.x.row(0), x.x.row(0) + 5) == expected);
    }
    SUBCASE("row (0,0) with cards 2,2") {
        const auto ds = make_dataset({2, 2}, {{0, 0}});
        const auto x = one_hot_expand(ds, build_layout(ds));
        const std::vector<double> expected{1, 0, 1, 0};
        CHECK(std::vector<double>(x.x.row(0), x.x.row(0) + 4) == expected);
    }
    SUBCASE("every block of every row sums to 1") {
        const auto ds = make_dataset({2, 3}, {{0, 2}, {1, 0}, {1, 1}});
        const auto layout = build_layout(ds);
        const auto x = one_hot_expand(ds, layout);
        for (std::size_t n = 0; n < ds.sample_count; ++n) {
            for (std::size_t v = 0; v < 2; ++v) {
                double s = 0.0;
                for (std::size_t k = 0; k < layout.card(v); ++k) {
                    s += x.x(n, layout.offset(v) + k);
                }
                CHECK(s == 1.0);
            }
        }
    }
}

TEST_CASE("expansion round-trips through per-block argmax") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng.below(4);
        std::vector<std::size_t> cards(m);
        for (auto& c : cards) c = 2 + rng.below(3);
        const std::size_t n = 1 + rng.below(30);
        std::vector<std::vector<std::int32_t>> rows(n, std::vector<std::int32_t>(m));
        for (auto& row : rows) {
            for (std::size_t i = 0; i < m; ++i) {
                row[i] = static_cast<std::int32_t>(rng.below(cards[i]));
            }
        }
        const auto ds = make_dataset(cards, rows);
        const auto layout = build_layout(ds);
        const auto x = one_hot_expand(ds, layout);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t v = 0; v < m; ++v) {
                const double* block = x.x.row(r) + layout.offset(v);
                const auto argmax = std::max_element(block, block + layout.card(v)) - block;
                CHECK(argmax == ds.code(r, v));
            }
        }
    }
}

TEST_CASE("state_frequencies counts column means") {
    const auto ds = make_dataset({2}, {{0}, {0}, {1}});
    const auto layout = build_layout(ds);
    const auto freqs = state_frequencies(one_hot_expand(ds, layout), layout);
    CHECK(freqs.freq[0] == doctest::Approx(2.0 / 3.0));
    CHECK(freqs.freq[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("state_frequencies clamps unobserved states") {
    // First column is constant but its cardinality is forced to 2, as a
    // sidecar would; freq would be [1, 0] without the clamp.
    const auto ds = make_dataset({2, 2}, {{0, 0}, {0, 1}, {0, 0}, {0, 1}});
    const auto layout = build_layout(ds);
    std::vector<std::string> warnings;
    const auto freqs = state_frequencies(one_hot_expand(ds, layout), layout, &warnings);
    const double floor = 1.0 / 8.0; // 1/(2N), N = 4
    CHECK(freqs.freq[0] == doctest::Approx(1.0 - floor));
    CHECK(freqs.freq[1] == doctest::Approx(floor));
    CHECK(warnings.size() == 1);
    CHECK(freqs.freq[0] + freqs.freq[1] == doctest::Approx(1.0).epsilon(1e-12));
    for (double f : freqs.freq) CHECK(f > 0.0);
}

TEST_CASE("uniform two-state data gives half/half") {
    const auto ds = make_dataset({2}, {{0}, {1}, {0}, {1}});
    const auto layout = build_layout(ds);
    const auto freqs = state_frequencies(one_hot_expand(ds, layout), layout);
    CHECK(freqs.freq[0] == 0.5);
    CHECK(freqs.freq[1] == 0.5);
}

TEST_CASE("frequencies are invariant to row permutation") {
    Rng rng(5);
    std::vector<std::vector<std::int32_t>> rows;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({static_cast<std::int32_t>(rng.below(3)),
                        static_cast<std::int32_t>(rng.below(2))});
    }
    auto shuffled = rows;
    rng.shuffle(shuffled);
    const auto ds1 = make_dataset({3, 2}, rows);
    const auto ds2 = make_dataset({3, 2}, shuffled);
    const auto layout = build_layout(ds1);
    const auto f1 = state_frequencies(one_hot_expand(ds1, layout), layout);
    const auto f2 = state_frequencies(one_hot_expand(ds2, layout), layout);
    for (std::size_t s = 0; s < layout.total_states; ++s) {
        CHECK(f1.freq[s] == doctest::Approx(f2.freq[s]).epsilon(1e-15));
    }
}

TEST_CASE("dataset csv round-trip") {
    auto named = make_dataset({2, 3}, {{0, 2}, {1, 0}});
    named.variable_names = {"left", "right"};
    const auto back = parse_csv(dataset_to_csv(named), "roundtrip");
    CHECK(back.variable_names == named.variable_names);
    CHECK(back.rows == named.rows);
    CHECK(back.cardinalities == named.cardinalities);
}

TEST_CASE("validate_dataset rejects out-of-range codes and tiny cardinalities") {
    auto ds = make_dataset({2, 2}, {{0, 1}, {1, 3}});
    CHECK_THROWS_AS(validate_dataset(ds), InputError);
    auto single = make_dataset({1}, {{0}});
    CHECK_THROWS_AS(validate_dataset(single), InputError);
}
