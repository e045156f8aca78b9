#include "pagrefine/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pagrefine::kernels {

namespace {
int g_threads = 0; // 0 = runtime default
}

int threads() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
    g_threads = n;
#ifdef _OPENMP
    omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
#endif
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

namespace detail {

inline void check_matmul(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    if (c.rows != a.rows || c.cols != b.cols) c = Matrix(a.rows, b.cols);
}

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    double* crow = c.row(i);
    std::fill(crow, crow + c.cols, 0.0);
    const double* arow = a.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
        const double x = arow[k];
        const double* brow = b.row(k);
        for (std::size_t j = 0; j < b.cols; ++j) {
            crow[j] += x * brow[j];
        }
    }
}

inline void at_b_row(const Matrix& a, const Matrix& b, Matrix& g, std::size_t i) {
    double* grow = g.row(i);
    std::fill(grow, grow + g.cols, 0.0);
    for (std::size_t n = 0; n < a.rows; ++n) {
        const double x = a(n, i);
        const double* brow = b.row(n);
        for (std::size_t j = 0; j < b.cols; ++j) {
            grow[j] += x * brow[j];
        }
    }
}

inline void softmax_row(const Matrix& logits, const std::vector<std::size_t>& offsets,
                        const std::vector<std::size_t>& cards, Matrix& probs,
                        std::size_t n) {
    const double* lrow = logits.row(n);
    double* prow = probs.row(n);
    for (std::size_t v = 0; v < offsets.size(); ++v) {
        const std::size_t off = offsets[v];
        const std::size_t card = cards[v];
        double mx = lrow[off];
        for (std::size_t s = 1; s < card; ++s) mx = std::max(mx, lrow[off + s]);
        double z = 0.0;
        for (std::size_t s = 0; s < card; ++s) {
            const double e = std::exp(lrow[off + s] - mx);
            prow[off + s] = e;
            z += e;
        }
        const double inv = 1.0 / z;
        for (std::size_t s = 0; s < card; ++s) prow[off + s] *= inv;
    }
}

inline double xent_row(const Matrix& x, const Matrix& probs,
                       const std::vector<std::size_t>& offsets,
                       const std::vector<std::size_t>& cards,
                       const std::vector<std::size_t>& active_vars,
                       double prob_floor, std::size_t n) {
    const double* xrow = x.row(n);
    const double* prow = probs.row(n);
    double loss = 0.0;
    for (std::size_t v : active_vars) {
        const std::size_t off = offsets[v];
        const std::size_t card = cards[v];
        for (std::size_t s = 0; s < card; ++s) {
            loss -= xrow[off + s] * std::log(std::max(prow[off + s], prob_floor));
        }
    }
    return loss;
}

inline void backward_row(const Matrix& x, const Matrix& probs,
                         const std::vector<std::size_t>& offsets,
                         const std::vector<std::size_t>& cards,
                         const std::vector<std::size_t>& active_vars,
                         double scale, Matrix& d, std::size_t n) {
    const double* xrow = x.row(n);
    const double* prow = probs.row(n);
    double* drow = d.row(n);
    std::fill(drow, drow + d.cols, 0.0);
    for (std::size_t v : active_vars) {
        const std::size_t off = offsets[v];
        const std::size_t card = cards[v];
        for (std::size_t s = 0; s < card; ++s) {
            drow[off + s] = (prow[off + s] - xrow[off + s]) * scale;
        }
    }
}

inline void adam_coord(double* w, const double* g, double* m, double* v,
                       double lr, double beta1, double beta2, double eps,
                       double bc1, double bc2, std::size_t i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
}

} // namespace detail

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
    detail::check_matmul(a, b, c);
    const std::int64_t rows = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
        detail::matmul_row(a, b, c, static_cast<std::size_t>(i));
    }
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& g) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_at_b: row counts differ");
    if (g.rows != a.cols || g.cols != b.cols) g = Matrix(a.cols, b.cols);
    const std::int64_t cols = static_cast<std::int64_t>(a.cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < cols; ++i) {
        detail::at_b_row(a, b, g, static_cast<std::size_t>(i));
    }
}

void hadamard(const Matrix& a, const Matrix& b, Matrix& out) {
    if (!a.same_shape(b)) throw std::invalid_argument("hadamard: shapes differ");
    if (!out.same_shape(a)) out = Matrix(a.rows, a.cols);
    const std::int64_t n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out.data[i] = a.data[i] * b.data[i];
    }
}

void sigmoid_masked(const Matrix& w, const Matrix& mask, Matrix& out, Matrix* sp) {
    if (!w.same_shape(mask)) throw std::invalid_argument("sigmoid_masked: shapes differ");
    if (!out.same_shape(w)) out = Matrix(w.rows, w.cols);
    if (sp && !sp->same_shape(w)) *sp = Matrix(w.rows, w.cols);
    const std::int64_t n = static_cast<std::int64_t>(w.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        if (mask.data[i] != 0.0) {
            const double s = sigmoid(w.data[i]);
            out.data[i] = s;
            if (sp) sp->data[i] = s * (1.0 - s);
        } else {
            out.data[i] = 0.0;
            if (sp) sp->data[i] = 0.0;
        }
    }
}

void block_softmax(const Matrix& logits, const std::vector<std::size_t>& offsets,
                   const std::vector<std::size_t>& cards, Matrix& probs) {
    if (!probs.same_shape(logits)) probs = Matrix(logits.rows, logits.cols);
    const std::int64_t rows = static_cast<std::int64_t>(logits.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < rows; ++n) {
        detail::softmax_row(logits, offsets, cards, probs, static_cast<std::size_t>(n));
    }
}

void block_xent_rows(const Matrix& x, const Matrix& probs,
                     const std::vector<std::size_t>& offsets,
                     const std::vector<std::size_t>& cards,
                     const std::vector<std::size_t>& active_vars,
                     double prob_floor, std::vector<double>& row_loss) {
    row_loss.resize(x.rows);
    const std::int64_t rows = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < rows; ++n) {
        row_loss[n] = detail::xent_row(x, probs, offsets, cards, active_vars,
                                       prob_floor, static_cast<std::size_t>(n));
    }
}

void xent_backward(const Matrix& x, const Matrix& probs,
                   const std::vector<std::size_t>& offsets,
                   const std::vector<std::size_t>& cards,
                   const std::vector<std::size_t>& active_vars,
                   double scale, Matrix& d) {
    if (!d.same_shape(x)) d = Matrix(x.rows, x.cols);
    const std::int64_t rows = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < rows; ++n) {
        detail::backward_row(x, probs, offsets, cards, active_vars, scale, d,
                             static_cast<std::size_t>(n));
    }
}

void adam_step(Matrix& w, const Matrix& grad, Matrix& m, Matrix& v,
               double lr, double beta1, double beta2, double eps, long step) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    const std::int64_t n = static_cast<std::int64_t>(w.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        detail::adam_coord(w.data.data(), grad.data.data(), m.data.data(),
                           v.data.data(), lr, beta1, beta2, eps, bc1, bc2,
                           static_cast<std::size_t>(i));
    }
}

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
    detail::check_matmul(a, b, c);
    for (std::size_t i = 0; i < a.rows; ++i) detail::matmul_row(a, b, c, i);
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& g) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_at_b: row counts differ");
    if (g.rows != a.cols || g.cols != b.cols) g = Matrix(a.cols, b.cols);
    for (std::size_t i = 0; i < a.cols; ++i) detail::at_b_row(a, b, g, i);
}

void hadamard(const Matrix& a, const Matrix& b, Matrix& out) {
    if (!a.same_shape(b)) throw std::invalid_argument("hadamard: shapes differ");
    if (!out.same_shape(a)) out = Matrix(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
}

void sigmoid_masked(const Matrix& w, const Matrix& mask, Matrix& out, Matrix* sp) {
    if (!w.same_shape(mask)) throw std::invalid_argument("sigmoid_masked: shapes differ");
    if (!out.same_shape(w)) out = Matrix(w.rows, w.cols);
    if (sp && !sp->same_shape(w)) *sp = Matrix(w.rows, w.cols);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (mask.data[i] != 0.0) {
            const double s = sigmoid(w.data[i]);
            out.data[i] = s;
            if (sp) sp->data[i] = s * (1.0 - s);
        } else {
            out.data[i] = 0.0;
            if (sp) sp->data[i] = 0.0;
        }
    }
}

void block_softmax(const Matrix& logits, const std::vector<std::size_t>& offsets,
                   const std::vector<std::size_t>& cards, Matrix& probs) {
    if (!probs.same_shape(logits)) probs = Matrix(logits.rows, logits.cols);
    for (std::size_t n = 0; n < logits.rows; ++n) {
        detail::softmax_row(logits, offsets, cards, probs, n);
    }
}

void block_xent_rows(const Matrix& x, const Matrix& probs,
                     const std::vector<std::size_t>& offsets,
                     const std::vector<std::size_t>& cards,
                     const std::vector<std::size_t>& active_vars,
                     double prob_floor, std::vector<double>& row_loss) {
    row_loss.resize(x.rows);
    for (std::size_t n = 0; n < x.rows; ++n) {
        row_loss[n] = detail::xent_row(x, probs, offsets, cards, active_vars, prob_floor, n);
    }
}

void xent_backward(const Matrix& x, const Matrix& probs,
                   const std::vector<std::size_t>& offsets,
                   const std::vector<std::size_t>& cards,
                   const std::vector<std::size_t>& active_vars,
                   double scale, Matrix& d) {
    if (!d.same_shape(x)) d = Matrix(x.rows, x.cols);
    for (std::size_t n = 0; n < x.rows; ++n) {
        detail::backward_row(x, probs, offsets, cards, active_vars, scale, d, n);
    }
}

void adam_step(Matrix& w, const Matrix& grad, Matrix& m, Matrix& v,
               double lr, double beta1, double beta2, double eps, long step) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < w.size(); ++i) {
        detail::adam_coord(w.data.data(), grad.data.data(), m.data.data(),
                           v.data.data(), lr, beta1, beta2, eps, bc1, bc2, i);
    }
}

} // namespace serial

} // namespace pagrefine::kernels
