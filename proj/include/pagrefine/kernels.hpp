#pragma once

#include <cstddef>
#include <vector>

#include "pagrefine/matrix.hpp"

namespace pagrefine::kernels {

/// Number of threads the parallel kernels will use (1 when built without
/// OpenMP). set_threads(0) restores the runtime default.
int threads();
void set_threads(int n);

/// All kernels below compute each output element with a fixed serial
/// reduction order, so results are bit-identical to the serial reference
/// regardless of thread count or schedule. Do not replace any of them
/// with an omp float reduction.

/// C = A * B. Dense, row-major.
void matmul(const Matrix& a, const Matrix& b, Matrix& c);

/// G = A^T * B where A is (n x k) and B is (n x m); G is (k x m).
/// Row i of G is the fixed-order sum over samples n of A(n,i) * B(n,:).
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& g);

/// Elementwise product.
void hadamard(const Matrix& a, const Matrix& b, Matrix& out);

/// out = sigmoid(w) .* mask; sp = out .* (1 - out) where mask is nonzero,
/// 0 elsewhere. sp may be null when the derivative is not needed.
void sigmoid_masked(const Matrix& w, const Matrix& mask, Matrix& out, Matrix* sp);

/// Softmax restricted to contiguous column blocks, one block per variable.
/// offsets[v] .. offsets[v]+cards[v] delimit block v. Max-subtraction per
/// block keeps exp() in range for arbitrary logits.
void block_softmax(const Matrix& logits, const std::vector<std::size_t>& offsets,
                   const std::vector<std::size_t>& cards, Matrix& probs);

/// Per-row cross-entropy between one-hot rows of x and probs, restricted
/// to the variable blocks listed in active_vars. log is clamped at
/// prob_floor. Fills row_loss (one entry per sample); the caller reduces
/// serially.
void block_xent_rows(const Matrix& x, const Matrix& probs,
                     const std::vector<std::size_t>& offsets,
                     const std::vector<std::size_t>& cards,
                     const std::vector<std::size_t>& active_vars,
                     double prob_floor, std::vector<double>& row_loss);

/// d = (probs - x) * scale, with columns of inactive variable blocks zeroed.
void xent_backward(const Matrix& x, const Matrix& probs,
                   const std::vector<std::size_t>& offsets,
                   const std::vector<std::size_t>& cards,
                   const std::vector<std::size_t>& active_vars,
                   double scale, Matrix& d);

/// One Adam step with bias correction, elementwise over all coordinates.
/// step is 1-based.
void adam_step(Matrix& w, const Matrix& grad, Matrix& m, Matrix& v,
               double lr, double beta1, double beta2, double eps, long step);

/// Serial mirrors of the kernels above. Used by tests to pin down the
/// parallel versions bit-for-bit and by the benchmark for speedup numbers.
namespace serial {
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& g);
void hadamard(const Matrix& a, const Matrix& b, Matrix& out);
void sigmoid_masked(const Matrix& w, const Matrix& mask, Matrix& out, Matrix* sp);
void block_softmax(const Matrix& logits, const std::vector<std::size_t>& offsets,
                   const std::vector<std::size_t>& cards, Matrix& probs);
void block_xent_rows(const Matrix& x, const Matrix& probs,
                     const std::vector<std::size_t>& offsets,
                     const std::vector<std::size_t>& cards,
                     const std::vector<std::size_t>& active_vars,
                     double prob_floor, std::vector<double>& row_loss);
void xent_backward(const Matrix& x, const Matrix& probs,
                   const std::vector<std::size_t>& offsets,
                   const std::vector<std::size_t>& cards,
                   const std::vector<std::size_t>& active_vars,
                   double scale, Matrix& d);
void adam_step(Matrix& w, const Matrix& grad, Matrix& m, Matrix& v,
               double lr, double beta1, double beta2, double eps, long step);
} // namespace serial

/// Fixed-order serial sum; the one reduction helper everything shares.
double sum(const std::vector<double>& v);

double sigmoid(double x);

} // namespace pagrefine::kernels
