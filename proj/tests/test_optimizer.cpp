#include <doctest.h>

#include <cmath>

#include "pagrefine/errors.hpp"
#include "pagrefine/extraction.hpp"
#include "pagrefine/kernels.hpp"
#include "pagrefine/optimizer.hpp"
#include "pagrefine/rng.hpp"
#include "test_helpers.hpp"

using namespace pagrefine;
using test_helpers::layout_of_cards;

namespace {

/// Fully wired 2-variable objective over the symmetric dataset.
struct PairSetup {
    DiscreteDataset ds;
    StateLayout layout;
    Matrix x;
    AdmissibilityMatrix adm;
    StateMask mask;
    PenaltyWeights penalty;
    ObjectiveContext ctx;

    PairSetup() {
        ds = test_helpers::symmetric_pair_dataset();
        layout = build_layout(ds);
        x = one_hot_expand(ds, layout).x;
        adm = pag_admissibility(test_helpers::both_open_pair_pag());
        mask = lift_to_state_mask(adm, layout);
        const auto freqs = state_frequencies(one_hot_expand(ds, layout), layout);
        penalty = build_penalty_weights(freqs, layout, admissible_blocks(adm),
                                        PenaltyMode::InverseFrequency);
        ctx = ObjectiveContext::make(layout, mask, penalty, adm, Hyperparameters{});
    }
};

} // namespace

TEST_CASE("random_prior is empty for no pairs and deterministic per seed") {
    CHECK(random_prior({}, 7, 0.9).entries.empty());
    const std::vector<Edge> pairs{{0, 1}, {0, 2}, {1, 3}};
    const auto a = random_prior(pairs, 42, 0.9);
    const auto b = random_prior(pairs, 42, 0.9);
    REQUIRE(a.entries.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.entries[k].from == b.entries[k].from);
        CHECK(a.entries[k].to == b.entries[k].to);
        CHECK(a.entries[k].p == 0.9);
    }
}

TEST_CASE("random_prior picks directions in balanced proportion") {
    std::vector<Edge> pairs;
    for (std::size_t i = 0; i < 10000; ++i) pairs.push_back({2 * i, 2 * i + 1});
    for (const std::uint64_t seed : {1ull, 99ull, 1234ull}) {
        const auto spec = random_prior(pairs, seed, 0.9);
        std::size_t forward = 0;
        for (std::size_t k = 0; k < spec.entries.size(); ++k) {
            if (spec.entries[k].from == pairs[k].first) ++forward;
        }
        const double frac = static_cast<double>(forward) / 10000.0;
        // Binomial 3-sigma band around one half.
        CHECK(frac > 0.45);
        CHECK(frac < 0.55);
    }
}

TEST_CASE("validate_prior enforces the structural mask") {
    AdmissibilityMatrix adm(3);
    adm.set(0, 1, true);
    adm.set(1, 0, true);
    adm.set(1, 2, true); // resolved 1 -> 2
    const std::vector<std::string> names{"A", "B", "C"};

    SUBCASE("entry on an unresolved pair passes") {
        const auto spec = validate_prior({{0, 1, 0.9}}, adm, names);
        CHECK(spec.entries.size() == 1);
        CHECK(spec.source == PriorSource::File);
    }
    SUBCASE("empty list passes") {
        CHECK(validate_prior({}, adm, names).entries.empty());
    }
    SUBCASE("non-adjacent pair is rejected") {
        CHECK_THROWS_AS(validate_prior({{0, 2, 0.9}}, adm, names), InputError);
    }
    SUBCASE("resolved pair is rejected") {
        CHECK_THROWS_AS(validate_prior({{1, 2, 0.9}}, adm, names), InputError);
    }
    SUBCASE("out-of-range probability is rejected") {
        CHECK_THROWS_AS(validate_prior({{0, 1, 0.4}}, adm, names), InputError);
        CHECK_THROWS_AS(validate_prior({{0, 1, 1.0}}, adm, names), InputError);
    }
    SUBCASE("duplicate pair is rejected") {
        CHECK_THROWS_AS(validate_prior({{0, 1, 0.9}, {1, 0, 0.8}}, adm, names), InputError);
    }
}

TEST_CASE("init_logits frozen values") {
    const auto layout = layout_of_cards({2, 2});
    AdmissibilityMatrix adm(2);
    adm.set(0, 1, true);
    adm.set(1, 0, true);
    const auto mask = lift_to_state_mask(adm, layout);

    SUBCASE("p = 0.9 gives +-2.1972") {
        PriorSpec prior;
        prior.entries.push_back({0, 1, 0.9});
        const Matrix w = init_logits(mask, prior, layout);
        CHECK(w(0, 2) == doctest::Approx(2.1972).epsilon(1e-4));
        CHECK(w(2, 0) == doctest::Approx(-2.1972).epsilon(1e-4));
        CHECK(w(0, 2) == doctest::Approx(std::log(9.0)).epsilon(1e-12));
    }
    SUBCASE("p = 0.7 gives +-0.8473") {
        PriorSpec prior;
        prior.entries.push_back({1, 0, 0.7});
        const Matrix w = init_logits(mask, prior, layout);
        CHECK(w(2, 0) == doctest::Approx(0.8473).epsilon(1e-4));
        CHECK(w(0, 2) == doctest::Approx(-0.8473).epsilon(1e-4));
    }
    SUBCASE("no prior leaves every admissible logit at zero") {
        const Matrix w = init_logits(mask, PriorSpec{}, layout);
        for (double v : w.data) CHECK(v == 0.0);
        Matrix a, sp;
        kernels::sigmoid_masked(w, mask.s, a, nullptr);
        for (std::size_t idx = 0; idx < a.size(); ++idx) {
            if (mask.s.data[idx] != 0.0) CHECK(a.data[idx] == 0.5);
        }
    }
}

TEST_CASE("refine is bit-deterministic given seed and config") {
    PairSetup setup;
    OptimizerConfig cfg;
    cfg.steps = 25;
    cfg.seed = 3;
    const auto prior = random_prior(setup.ctx.unresolved, cfg.seed, 0.9);
    const auto a = refine(setup.x, setup.ctx, prior, cfg);
    const auto b = refine(setup.x, setup.ctx, prior, cfg);
    CHECK(a.w.bit_equal(b.w));
    REQUIRE(a.trace.steps.size() == 25);
    for (std::size_t t = 0; t < 25; ++t) {
        CHECK(a.trace.steps[t].loss.total == b.trace.steps[t].loss.total);
    }
}

TEST_CASE("mini-batch refinement is deterministic and covers shuffled slices") {
    Rng rng(8);
    test_helpers::Instance inst;
    test_helpers::build_instance(inst, 3, 3, 64, Hyperparameters{}, rng);
    OptimizerConfig cfg;
    cfg.steps = 30;
    cfg.batch_size = 16;
    cfg.seed = 5;
    const auto prior = random_prior(inst.ctx.unresolved, cfg.seed, 0.9);
    const auto a = refine(inst.x, inst.ctx, prior, cfg);
    const auto b = refine(inst.x, inst.ctx, prior, cfg);
    CHECK(a.w.bit_equal(b.w));
}

TEST_CASE("masked logits never move during refinement") {
    PairSetup setup;
    OptimizerConfig cfg;
    cfg.steps = 40;
    const auto prior = random_prior(setup.ctx.unresolved, 1, 0.9);
    Matrix w0 = init_logits(setup.mask, prior, setup.layout);
    // Plant sentinels under the mask.
    Matrix w_sentinel = w0;
    for (std::size_t idx = 0; idx < w_sentinel.size(); ++idx) {
        if (setup.mask.s.data[idx] == 0.0) w_sentinel.data[idx] = 123.456;
    }
    const auto out = refine_from(w_sentinel, setup.x, setup.ctx, cfg);
    for (std::size_t idx = 0; idx < out.w.size(); ++idx) {
        if (setup.mask.s.data[idx] == 0.0) CHECK(out.w.data[idx] == 123.456);
    }
    // And the adjacency there is exactly zero.
    Matrix a;
    kernels::sigmoid_masked(out.w, setup.mask.s, a, nullptr);
    for (std::size_t idx = 0; idx < a.size(); ++idx) {
        if (setup.mask.s.data[idx] == 0.0) CHECK(a.data[idx] == 0.0);
    }
}

TEST_CASE("strong cycle pressure resolves a both-open pair within the step budget") {
    PairSetup setup;
    OptimizerConfig cfg;
    cfg.steps = 140;
    PriorSpec prior;
    prior.entries.push_back({0, 1, 0.9});
    const auto out = refine(setup.x, setup.ctx, prior, cfg);

    Matrix a;
    kernels::sigmoid_masked(out.w, setup.mask.s, a, nullptr);
    const auto strengths = block_strengths(a, setup.layout, setup.adm);
    const bool fwd = strengths.block_max(0, 1) > 0.1;
    const bool rev = strengths.block_max(1, 0) > 0.1;
    CHECK(fwd != rev); // exactly one direction survives
    CHECK(fwd);        // and it is the favored one
}

TEST_CASE("loss at the last step does not exceed the first step") {
    Rng rng(13);
    for (int trial = 0; trial < 3; ++trial) {
        test_helpers::Instance inst;
        test_helpers::build_instance(inst, 4, 3, 200, Hyperparameters{}, rng);
        OptimizerConfig cfg;
        cfg.steps = 140;
        cfg.seed = 2 + trial;
        const auto prior = random_prior(inst.ctx.unresolved, cfg.seed, 0.9);
        const auto out = refine(inst.x, inst.ctx, prior, cfg);
        CHECK(out.trace.steps.back().loss.total <= out.trace.steps.front().loss.total);
    }
}

TEST_CASE("asymmetric init leaves no more pairs unresolved than symmetric init") {
    PairSetup setup;
    OptimizerConfig cfg;
    cfg.steps = 140;

    auto unresolved_after = [&](const PriorSpec& prior) {
        const auto out = refine(setup.x, setup.ctx, prior, cfg);
        Matrix a;
        kernels::sigmoid_masked(out.w, setup.mask.s, a, nullptr);
        const auto strengths = block_strengths(a, setup.layout, setup.adm);
        std::size_t count = 0;
        for (const auto& [i, j] : setup.ctx.unresolved) {
            if (strengths.block_max(i, j) > 0.1 && strengths.block_max(j, i) > 0.1) ++count;
        }
        return count;
    };

    PriorSpec asymmetric;
    asymmetric.entries.push_back({0, 1, 0.9});
    const std::size_t with_prior = unresolved_after(asymmetric);
    const std::size_t without_prior = unresolved_after(PriorSpec{});
    CHECK(with_prior <= without_prior);
}

TEST_CASE("trace length equals the step count and records finite losses") {
    PairSetup setup;
    OptimizerConfig cfg;
    cfg.steps = 17;
    const auto out = refine(setup.x, setup.ctx, PriorSpec{}, cfg);
    REQUIRE(out.trace.steps.size() == 17);
    for (const auto& rec : out.trace.steps) {
        CHECK(std::isfinite(rec.loss.total));
        CHECK(rec.seconds >= 0.0);
    }
}

TEST_CASE("resolve_batch_size follows the size threshold") {
    OptimizerConfig cfg;
    CHECK(resolve_batch_size(cfg, 500) == 500);
    CHECK(resolve_batch_size(cfg, 20000) == 20000);
    CHECK(resolve_batch_size(cfg, 20001) == 2048);
    cfg.batch_size = 0;
    CHECK(resolve_batch_size(cfg, 50000) == 50000);
    cfg.batch_size = 64;
    CHECK(resolve_batch_size(cfg, 50000) == 64);
    cfg.batch_size = 64;
    CHECK(resolve_batch_size(cfg, 10) == 10);
}

TEST_CASE("optimizer config validation") {
    OptimizerConfig cfg;
    cfg.eta = 0.0;
    CHECK_THROWS_AS(validate_optimizer_config(cfg), InputError);
    cfg = OptimizerConfig{};
    cfg.steps = 0;
    CHECK_THROWS_AS(validate_optimizer_config(cfg), InputError);
    cfg = OptimizerConfig{};
    cfg.beta1 = 1.0;
    CHECK_THROWS_AS(validate_optimizer_config(cfg), InputError);
}
