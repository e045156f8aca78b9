#include "pagrefine/objective.hpp"

#include <cmath>
#include <string>

#include "pagrefine/errors.hpp"
#include "pagrefine/kernels.hpp"

namespace pagrefine {

namespace {

constexpr double kProbFloor = 1e-12;

void check_finite(const LossBreakdown& lb, long step_hint) {
    const struct {
        const char* name;
        double value;
    } terms[] = {{"recon", lb.recon}, {"sparse", lb.sparse}, {"cycle", lb.cycle},
                 {"skeleton", lb.skeleton}, {"total", lb.total}};
    for (const auto& t : terms) {
        if (!std::isfinite(t.value)) {
            std::string msg = std::string("non-finite ") + t.name + " loss";
            if (step_hint >= 0) msg += " at step " + std::to_string(step_hint);
            throw NumericalError(msg);
        }
    }
}

} // namespace

PenaltyWeights build_penalty_weights(const StateFrequencies& freqs, const StateLayout& layout,
                                     const std::vector<Edge>& blocks, PenaltyMode mode) {
    PenaltyWeights out;
    out.p = Matrix(layout.total_states, layout.total_states, 1.0);
    if (mode == PenaltyMode::Ones) return out;
    for (const auto& [i, j] : blocks) {
        const std::size_t oi = layout.offset(i), oj = layout.offset(j);
        const std::size_t li = layout.card(i), lj = layout.card(j);
        double total = 0.0;
        for (std::size_t a = 0; a < li; ++a) {
            for (std::size_t b = 0; b < lj; ++b) {
                const double q = 1.0 / std::sqrt(freqs.freq[oi + a] * freqs.freq[oj + b]);
                out.p(oi + a, oj + b) = q;
                total += q;
            }
        }
        const double mean = total / static_cast<double>(li * lj);
        for (std::size_t a = 0; a < li; ++a) {
            for (std::size_t b = 0; b < lj; ++b) {
                out.p(oi + a, oj + b) /= mean;
            }
        }
    }
    return out;
}

void validate_hyperparameters(const Hyperparameters& hp) {
    for (const double lambda : {hp.lambda_sparse, hp.lambda_cycle, hp.lambda_skeleton}) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw InputError("lambda weights must be non-negative and finite");
        }
    }
    if (!(hp.tau > 0.0) || !(hp.tau <= 1.0)) {
        throw InputError("tau must lie in (0, 1]");
    }
    if (!(hp.epsilon_norm >= 0.0) || !std::isfinite(hp.epsilon_norm)) {
        throw InputError("epsilon_norm must be non-negative and finite");
    }
}

ObjectiveContext ObjectiveContext::make(const StateLayout& layout, const StateMask& mask,
                                        const PenaltyWeights& penalty,
                                        const AdmissibilityMatrix& adm,
                                        const Hyperparameters& hp) {
    validate_hyperparameters(hp);
    ObjectiveContext ctx;
    ctx.layout = &layout;
    ctx.mask = &mask;
    ctx.penalty = &penalty;
    ctx.directed_blocks = admissible_blocks(adm);
    ctx.unresolved = unresolved_pairs(adm);
    ctx.hp = hp;
    ctx.recon_vars.resize(layout.variable_count());
    for (std::size_t v = 0; v < layout.variable_count(); ++v) ctx.recon_vars[v] = v;
    return ctx;
}

Matrix masked_logits(const Matrix& x, const Matrix& w, const StateMask& mask) {
    if (x.cols != w.rows || !w.same_shape(mask.s)) {
        throw InputError("masked_logits: dimension mismatch");
    }
    Matrix wm, logits;
    kernels::hadamard(w, mask.s, wm);
    kernels::matmul(x, wm, logits);
    return logits;
}

Matrix per_variable_softmax(const Matrix& logits, const StateLayout& layout) {
    Matrix probs;
    kernels::block_softmax(logits, layout.offsets, layout.cardinalities, probs);
    return probs;
}

double recon_loss(const Matrix& x, const Matrix& probs, const StateLayout& layout,
                  const std::vector<std::size_t>& recon_vars) {
    std::vector<double> row_loss;
    kernels::block_xent_rows(x, probs, layout.offsets, layout.cardinalities, recon_vars,
                             kProbFloor, row_loss);
    const double denom = static_cast<double>(x.rows) * static_cast<double>(recon_vars.size());
    return kernels::sum(row_loss) / denom;
}

double smoothed_block_norm(const Matrix& a, const StateLayout& layout, std::size_t i,
                           std::size_t j, double eps, const Matrix* weights) {
    const std::size_t oi = layout.offset(i), oj = layout.offset(j);
    double sq = 0.0;
    for (std::size_t s = 0; s < layout.card(i); ++s) {
        for (std::size_t t = 0; t < layout.card(j); ++t) {
            double v = a(oi + s, oj + t);
            if (weights) v *= (*weights)(oi + s, oj + t);
            sq += v * v;
        }
    }
    return std::sqrt(eps + sq) - std::sqrt(eps);
}

double sparse_loss(const Matrix& adjacency, const PenaltyWeights& penalty,
                   const StateLayout& layout, const std::vector<Edge>& blocks, double eps) {
    if (blocks.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [i, j] : blocks) {
        total += smoothed_block_norm(adjacency, layout, i, j, eps, &penalty.p);
    }
    return total / static_cast<double>(blocks.size());
}

double cycle_loss_from_norms(const std::vector<double>& forward_norms,
                             const std::vector<double>& reverse_norms) {
    if (forward_norms.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < forward_norms.size(); ++k) {
        total += forward_norms[k] * reverse_norms[k];
    }
    return total / static_cast<double>(forward_norms.size());
}

double cycle_loss(const Matrix& adjacency, const StateLayout& layout,
                  const std::vector<Edge>& pairs, double eps) {
    if (pairs.empty()) return 0.0;
    std::vector<double> fwd(pairs.size()), rev(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        fwd[k] = smoothed_block_norm(adjacency, layout, pairs[k].first, pairs[k].second, eps);
        rev[k] = smoothed_block_norm(adjacency, layout, pairs[k].second, pairs[k].first, eps);
    }
    return cycle_loss_from_norms(fwd, rev);
}

double skeleton_loss(const Matrix& adjacency, const StateMask& mask,
                     std::vector<std::string>* warnings) {
    if (mask.ones == 0) {
        if (warnings) warnings->push_back("state mask is empty; skeleton loss is 0");
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t a = 0; a < mask.s.rows; ++a) {
        for (std::size_t b = 0; b < mask.s.cols; ++b) {
            if (mask.s(a, b) == 0.0) continue;
            const double gap = 1.0 - (adjacency(a, b) + adjacency(b, a));
            total += gap * gap;
        }
    }
    return total / static_cast<double>(mask.ones);
}

namespace {

/// Adds the regularizer derivatives w.r.t. A into lambda_grad (an
/// n_s x n_s accumulator), scaled by their lambda weights.
void accumulate_regularizer_grad_wrt_a(const Matrix& a, const ObjectiveContext& ctx,
                                       Matrix& lambda_grad) {
    const StateLayout& layout = *ctx.layout;
    const Hyperparameters& hp = ctx.hp;
    const double eps = hp.epsilon_norm;

    if (hp.lambda_sparse > 0.0 && !ctx.directed_blocks.empty()) {
        const double scale = hp.lambda_sparse / static_cast<double>(ctx.directed_blocks.size());
        const Matrix& p = ctx.penalty->p;
        for (const auto& [i, j] : ctx.directed_blocks) {
            const std::size_t oi = layout.offset(i), oj = layout.offset(j);
            double sq = 0.0;
            for (std::size_t s = 0; s < layout.card(i); ++s) {
                for (std::size_t t = 0; t < layout.card(j); ++t) {
                    const double v = a(oi + s, oj + t) * p(oi + s, oj + t);
                    sq += v * v;
                }
            }
            const double denom = std::sqrt(eps + sq);
            if (denom == 0.0) continue;
            for (std::size_t s = 0; s < layout.card(i); ++s) {
                for (std::size_t t = 0; t < layout.card(j); ++t) {
                    const double pw = p(oi + s, oj + t);
                    lambda_grad(oi + s, oj + t) += scale * pw * pw * a(oi + s, oj + t) / denom;
                }
            }
        }
    }

    if (hp.lambda_cycle > 0.0 && !ctx.unresolved.empty()) {
        const double scale = hp.lambda_cycle / static_cast<double>(ctx.unresolved.size());
        for (const auto& [i, j] : ctx.unresolved) {
            const std::size_t oi = layout.offset(i), oj = layout.offset(j);
            double sq_f = 0.0, sq_r = 0.0;
            for (std::size_t s = 0; s < layout.card(i); ++s) {
                for (std::size_t t = 0; t < layout.card(j); ++t) {
                    const double f = a(oi + s, oj + t);
                    sq_f += f * f;
                    const double r = a(oj + t, oi + s);
                    sq_r += r * r;
                }
            }
            const double den_f = std::sqrt(eps + sq_f);
            const double den_r = std::sqrt(eps + sq_r);
            const double norm_f = den_f - std::sqrt(eps);
            const double norm_r = den_r - std::sqrt(eps);
            if (den_f > 0.0) {
                const double k = scale * norm_r / den_f;
                for (std::size_t s = 0; s < layout.card(i); ++s) {
                    for (std::size_t t = 0; t < layout.card(j); ++t) {
                        lambda_grad(oi + s, oj + t) += k * a(oi + s, oj + t);
                    }
                }
            }
            if (den_r > 0.0) {
                const double k = scale * norm_f / den_r;
                for (std::size_t s = 0; s < layout.card(i); ++s) {
                    for (std::size_t t = 0; t < layout.card(j); ++t) {
                        lambda_grad(oj + t, oi + s) += k * a(oj + t, oi + s);
                    }
                }
            }
        }
    }

    if (hp.lambda_skeleton > 0.0 && ctx.mask->ones > 0) {
        const Matrix& s = ctx.mask->s;
        const double scale = hp.lambda_skeleton / static_cast<double>(ctx.mask->ones);
        for (std::size_t p = 0; p < s.rows; ++p) {
            for (std::size_t q = 0; q < s.cols; ++q) {
                const double weight = s(p, q) + s(q, p);
                if (weight == 0.0) continue;
                const double gap = 1.0 - (a(p, q) + a(q, p));
                lambda_grad(p, q) += scale * (-2.0) * weight * gap;
            }
        }
    }
}

} // namespace

LossBreakdown total_loss_and_gradient(const Matrix& x_batch, const Matrix& w,
                                      const ObjectiveContext& ctx, Matrix& grad,
                                      ObjectiveWorkspace& ws) {
    const StateLayout& layout = *ctx.layout;
    const StateMask& mask = *ctx.mask;
    if (x_batch.cols != layout.total_states || !w.same_shape(mask.s)) {
        throw InputError("objective: dimension mismatch between data, logits and mask");
    }

    // Forward.
    kernels::hadamard(w, mask.s, ws.masked_w);
    kernels::matmul(x_batch, ws.masked_w, ws.logits);
    kernels::block_softmax(ws.logits, layout.offsets, layout.cardinalities, ws.probs);
    kernels::block_xent_rows(x_batch, ws.probs, layout.offsets, layout.cardinalities,
                             ctx.recon_vars, kProbFloor, ws.row_loss);
    const double recon_denom =
        static_cast<double>(x_batch.rows) * static_cast<double>(ctx.recon_vars.size());

    LossBreakdown lb;
    lb.recon = kernels::sum(ws.row_loss) / recon_denom;

    kernels::sigmoid_masked(w, mask.s, ws.adjacency, &ws.sigmoid_prime);
    lb.sparse = sparse_loss(ws.adjacency, *ctx.penalty, layout, ctx.directed_blocks,
                            ctx.hp.epsilon_norm);
    lb.cycle = cycle_loss(ws.adjacency, layout, ctx.unresolved, ctx.hp.epsilon_norm);
    lb.skeleton = skeleton_loss(ws.adjacency, mask);
    lb.total = lb.recon + ctx.hp.lambda_sparse * lb.sparse + ctx.hp.lambda_cycle * lb.cycle +
               ctx.hp.lambda_skeleton * lb.skeleton;
    check_finite(lb, -1);

    // Backward: reconstruction through L = X (W .* S).
    kernels::xent_backward(x_batch, ws.probs, layout.offsets, layout.cardinalities,
                           ctx.recon_vars, 1.0 / recon_denom, ws.d);
    kernels::matmul_at_b(x_batch, ws.d, ws.grad_recon);

    // Regularizers through A = sigmoid(W) .* S.
    if (!grad.same_shape(w)) grad = Matrix(w.rows, w.cols);
    Matrix lambda_grad(w.rows, w.cols, 0.0);
    accumulate_regularizer_grad_wrt_a(ws.adjacency, ctx, lambda_grad);

    for (std::size_t idx = 0; idx < grad.size(); ++idx) {
        const double masked = mask.s.data[idx];
        grad.data[idx] =
            (ws.grad_recon.data[idx] + lambda_grad.data[idx] * ws.sigmoid_prime.data[idx]) * masked;
    }
    return lb;
}

LossBreakdown total_loss(const Matrix& x_batch, const Matrix& w, const ObjectiveContext& ctx) {
    const StateLayout& layout = *ctx.layout;
    const StateMask& mask = *ctx.mask;
    const Matrix logits = masked_logits(x_batch, w, mask);
    const Matrix probs = per_variable_softmax(logits, layout);
    LossBreakdown lb;
    lb.recon = recon_loss(x_batch, probs, layout, ctx.recon_vars);
    Matrix a;
    kernels::sigmoid_masked(w, mask.s, a, nullptr);
    lb.sparse = sparse_loss(a, *ctx.penalty, layout, ctx.directed_blocks, ctx.hp.epsilon_norm);
    lb.cycle = cycle_loss(a, layout, ctx.unresolved, ctx.hp.epsilon_norm);
    lb.skeleton = skeleton_loss(a, mask);
    lb.total = lb.recon + ctx.hp.lambda_sparse * lb.sparse + ctx.hp.lambda_cycle * lb.cycle +
               ctx.hp.lambda_skeleton * lb.skeleton;
    check_finite(lb, -1);
    return lb;
}

} // namespace pagrefine
