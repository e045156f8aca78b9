// Compares the OpenMP kernels against the serial reference: wall time per
// call and a bitwise equality check. Run manually, e.g.
//   ./bench_kernels [batch] [states]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "pagrefine/kernels.hpp"
#include "pagrefine/matrix.hpp"
#include "pagrefine/rng.hpp"

using namespace pagrefine;

namespace {

double time_call(const std::function<void()>& fn, int reps) {
    fn(); // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo, double hi) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-16s serial %9.4f ms   parallel %9.4f ms   speedup %5.2fx   %s\n", name,
                serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    const std::size_t batch = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 4096;
    const std::size_t states = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 256;
    std::printf("batch=%zu states=%zu threads=%d\n", batch, states, kernels::threads());

    Rng rng(7);
    const Matrix x = random_matrix(batch, states, rng, 0.0, 1.0);
    const Matrix w = random_matrix(states, states, rng, -2.0, 2.0);
    Matrix mask(states, states);
    for (auto& v : mask.data) v = rng.uniform() < 0.5 ? 1.0 : 0.0;

    // Variable blocks of width 2 for the softmax-shaped kernels.
    std::vector<std::size_t> offsets, cards;
    for (std::size_t off = 0; off < states; off += 2) {
        offsets.push_back(off);
        cards.push_back(2);
    }
    std::vector<std::size_t> active(offsets.size());
    for (std::size_t v = 0; v < active.size(); ++v) active[v] = v;

    const int reps = 5;

    {
        Matrix cs, cp;
        const double ts = time_call([&] { kernels::serial::matmul(x, w, cs); }, reps);
        const double tp = time_call([&] { kernels::matmul(x, w, cp); }, reps);
        report("matmul", ts, tp, cs.bit_equal(cp));
    }
    {
        const Matrix d = random_matrix(batch, states, rng, -1.0, 1.0);
        Matrix gs, gp;
        const double ts = time_call([&] { kernels::serial::matmul_at_b(x, d, gs); }, reps);
        const double tp = time_call([&] { kernels::matmul_at_b(x, d, gp); }, reps);
        report("matmul_at_b", ts, tp, gs.bit_equal(gp));
    }
    {
        Matrix as, ap, sps, spp;
        const double ts =
            time_call([&] { kernels::serial::sigmoid_masked(w, mask, as, &sps); }, reps);
        const double tp = time_call([&] { kernels::sigmoid_masked(w, mask, ap, &spp); }, reps);
        report("sigmoid_masked", ts, tp, as.bit_equal(ap) && sps.bit_equal(spp));
    }
    {
        Matrix logits;
        kernels::matmul(x, w, logits);
        Matrix ps, pp;
        const double ts =
            time_call([&] { kernels::serial::block_softmax(logits, offsets, cards, ps); }, reps);
        const double tp = time_call([&] { kernels::block_softmax(logits, offsets, cards, pp); }, reps);
        report("block_softmax", ts, tp, ps.bit_equal(pp));
    }
    {
        Matrix logits, probs;
        kernels::matmul(x, w, logits);
        kernels::block_softmax(logits, offsets, cards, probs);
        Matrix ds, dp;
        const double scale = 1.0 / static_cast<double>(batch);
        const double ts = time_call(
            [&] { kernels::serial::xent_backward(x, probs, offsets, cards, active, scale, ds); },
            reps);
        const double tp = time_call(
            [&] { kernels::xent_backward(x, probs, offsets, cards, active, scale, dp); }, reps);
        report("xent_backward", ts, tp, ds.bit_equal(dp));
    }
    {
        Matrix grad = random_matrix(states, states, rng, -0.1, 0.1);
        Matrix w1 = w, m1(states, states), v1(states, states);
        Matrix w2 = w, m2(states, states), v2(states, states);
        long step = 0;
        const double ts = time_call(
            [&] { kernels::serial::adam_step(w1, grad, m1, v1, 0.01, 0.9, 0.999, 1e-8, ++step); },
            reps);
        long step2 = 0;
        const double tp = time_call(
            [&] { kernels::adam_step(w2, grad, m2, v2, 0.01, 0.9, 0.999, 1e-8, ++step2); }, reps);
        report("adam_step", ts, tp, w1.bit_equal(w2));
    }
    return 0;
}
