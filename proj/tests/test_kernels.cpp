#include <doctest.h>

#include <cmath>

#include "pagrefine/kernels.hpp"
#include "pagrefine/rng.hpp"

using namespace pagrefine;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -2.0,
                     double hi = 2.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

} // namespace

TEST_CASE("parallel kernels match the serial reference bit for bit") {
    Rng rng(11);
    // Sizes straddle typical thread-split boundaries.
    for (const std::size_t batch : {1ul, 7ul, 64ul, 129ul}) {
        for (const std::size_t states : {2ul, 6ul, 33ul}) {
            const Matrix x = random_matrix(batch, states, rng, 0.0, 1.0);
            const Matrix w = random_matrix(states, states, rng);
            Matrix mask(states, states);
            for (auto& v : mask.data) v = rng.uniform() < 0.6 ? 1.0 : 0.0;

            std::vector<std::size_t> offsets, cards;
            for (std::size_t off = 0; off < states;) {
                const std::size_t c = std::min<std::size_t>(states - off, 2 + (off % 2));
                if (c < 2) {
                    cards.back() += c;
                    break;
                }
                offsets.push_back(off);
                cards.push_back(c);
                off += c;
            }
            std::vector<std::size_t> active(offsets.size());
            for (std::size_t v = 0; v < active.size(); ++v) active[v] = v;

            Matrix cs, cp;
            kernels::serial::matmul(x, w, cs);
            kernels::matmul(x, w, cp);
            CHECK(cs.bit_equal(cp));

            Matrix gs, gp;
            kernels::serial::matmul_at_b(x, cs, gs);
            kernels::matmul_at_b(x, cp, gp);
            CHECK(gs.bit_equal(gp));

            Matrix as, ap, sps, spp;
            kernels::serial::sigmoid_masked(w, mask, as, &sps);
            kernels::sigmoid_masked(w, mask, ap, &spp);
            CHECK(as.bit_equal(ap));
            CHECK(sps.bit_equal(spp));

            Matrix ps, pp;
            kernels::serial::block_softmax(cs, offsets, cards, ps);
            kernels::block_softmax(cp, offsets, cards, pp);
            CHECK(ps.bit_equal(pp));

            std::vector<double> rls, rlp;
            kernels::serial::block_xent_rows(x, ps, offsets, cards, active, 1e-12, rls);
            kernels::block_xent_rows(x, pp, offsets, cards, active, 1e-12, rlp);
            CHECK(rls == rlp);

            Matrix ds, dp;
            kernels::serial::xent_backward(x, ps, offsets, cards, active, 0.25, ds);
            kernels::xent_backward(x, pp, offsets, cards, active, 0.25, dp);
            CHECK(ds.bit_equal(dp));

            Matrix w1 = w, m1(states, states), v1(states, states);
            Matrix w2 = w, m2(states, states), v2(states, states);
            kernels::serial::adam_step(w1, gs, m1, v1, 0.01, 0.9, 0.999, 1e-8, 1);
            kernels::adam_step(w2, gp, m2, v2, 0.01, 0.9, 0.999, 1e-8, 1);
            CHECK(w1.bit_equal(w2));
        }
    }
}

TEST_CASE("matmul against hand-computed product") {
    Matrix a(2, 3);
    double av[] = {1, 2, 3, 4, 5, 6};
    a.data.assign(av, av + 6);
    Matrix b(3, 2);
    double bv[] = {7, 8, 9, 10, 11, 12};
    b.data.assign(bv, bv + 6);
    Matrix c;
    kernels::matmul(a, b, c);
    CHECK(c(0, 0) == 58);
    CHECK(c(0, 1) == 64);
    CHECK(c(1, 0) == 139);
    CHECK(c(1, 1) == 154);
}

TEST_CASE("matmul_at_b equals explicit transpose product") {
    Rng rng(3);
    const Matrix a = random_matrix(9, 4, rng);
    const Matrix b = random_matrix(9, 5, rng);
    Matrix g;
    kernels::matmul_at_b(a, b, g);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            double expect = 0.0;
            for (std::size_t n = 0; n < 9; ++n) expect += a(n, i) * b(n, j);
            CHECK(g(i, j) == doctest::Approx(expect).epsilon(1e-14));
        }
    }
}

TEST_CASE("block_softmax survives extreme logits") {
    Matrix logits(1, 2);
    logits(0, 0) = 1000.0;
    logits(0, 1) = 0.0;
    Matrix probs;
    kernels::block_softmax(logits, {0}, {2}, probs);
    CHECK(probs(0, 0) == doctest::Approx(1.0));
    CHECK(probs(0, 1) == doctest::Approx(0.0));
    CHECK(std::isfinite(probs(0, 0)));
}

TEST_CASE("sigmoid is stable at large magnitudes") {
    CHECK(kernels::sigmoid(0.0) == 0.5);
    CHECK(kernels::sigmoid(800.0) == doctest::Approx(1.0));
    CHECK(kernels::sigmoid(-800.0) == doctest::Approx(0.0));
    CHECK(std::isfinite(kernels::sigmoid(-800.0)));
}

TEST_CASE("adam first step moves each coordinate by about the learning rate") {
    // With bias correction, step one gives w -= lr * g / (|g| + eps').
    Matrix w(1, 3, 0.0), g(1, 3), m(1, 3, 0.0), v(1, 3, 0.0);
    g(0, 0) = 0.5;
    g(0, 1) = -3.0;
    g(0, 2) = 1e-3;
    kernels::adam_step(w, g, m, v, 0.01, 0.9, 0.999, 1e-8, 1);
    CHECK(w(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(w(0, 1) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(w(0, 2) == doctest::Approx(-0.01).epsilon(1e-4));
}

TEST_CASE("adam leaves zero-gradient coordinates exactly still") {
    Matrix w(2, 2, 1.5), g(2, 2, 0.0), m(2, 2, 0.0), v(2, 2, 0.0);
    for (long t = 1; t <= 25; ++t) kernels::adam_step(w, g, m, v, 0.01, 0.9, 0.999, 1e-8, t);
    for (double x : w.data) CHECK(x == 1.5);
}
