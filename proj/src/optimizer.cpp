#include "pagrefine/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "pagrefine/errors.hpp"
#include "pagrefine/kernels.hpp"
#include "pagrefine/rng.hpp"

namespace pagrefine {

namespace {
constexpr std::size_t kFullBatchLimit = 20000;
constexpr std::size_t kDefaultMiniBatch = 2048;
} // namespace

PriorSpec random_prior(const std::vector<Edge>& pairs, std::uint64_t seed, double p) {
    if (!(p > 0.5 && p < 1.0)) throw InputError("prior probability must lie in (0.5, 1)");
    PriorSpec spec;
    spec.source = PriorSource::Random;
    Rng rng(seed);
    for (const auto& [i, j] : pairs) {
        PriorEntry e;
        if (rng.coin()) {
            e.from = i;
            e.to = j;
        } else {
            e.from = j;
            e.to = i;
        }
        e.p = p;
        spec.entries.push_back(e);
    }
    return spec;
}

PriorSpec validate_prior(std::vector<PriorEntry> entries, const AdmissibilityMatrix& adm,
                         const std::vector<std::string>& names) {
    std::set<Edge> seen;
    for (const auto& e : entries) {
        if (e.from >= adm.var_count || e.to >= adm.var_count) {
            throw InputError("prior entry references an unknown variable index");
        }
        if (e.from == e.to) {
            throw InputError("prior entry on a single variable '" + names[e.from] + "'");
        }
        if (!(e.p > 0.5 && e.p < 1.0)) {
            throw InputError("prior probability " + std::to_string(e.p) + " for " +
                             names[e.from] + " -> " + names[e.to] + " must lie in (0.5, 1)");
        }
        if (!adm.allowed(e.from, e.to) || !adm.allowed(e.to, e.from)) {
            throw InputError("prior on " + names[e.from] + " -> " + names[e.to] +
                             " is not an unresolved adjacent pair; the structural mask wins");
        }
        const Edge key{std::min(e.from, e.to), std::max(e.from, e.to)};
        if (!seen.insert(key).second) {
            throw InputError("duplicate prior entry for pair " + names[key.first] + ", " +
                             names[key.second]);
        }
    }
    PriorSpec spec;
    spec.entries = std::move(entries);
    spec.source = PriorSource::File;
    return spec;
}

void validate_optimizer_config(const OptimizerConfig& cfg) {
    if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw InputError("eta must be positive");
    if (cfg.steps < 1) throw InputError("step count must be at least 1");
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
        throw InputError("adam beta parameters must lie in [0, 1)");
    }
    if (!(cfg.adam_epsilon > 0.0)) throw InputError("adam epsilon must be positive");
}

std::size_t resolve_batch_size(const OptimizerConfig& cfg, std::size_t sample_count) {
    if (cfg.batch_size.has_value()) {
        const std::size_t b = *cfg.batch_size;
        if (b == 0 || b >= sample_count) return sample_count;
        return b;
    }
    if (sample_count <= kFullBatchLimit) return sample_count;
    return std::min(kDefaultMiniBatch, sample_count);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Matrix init_logits(const StateMask& mask, const PriorSpec& prior, const StateLayout& layout) {
    Matrix w(mask.s.rows, mask.s.cols, 0.0);
    for (const auto& e : prior.entries) {
        const double favored = logit(e.p);
        const double reverse = logit(1.0 - e.p);
        const std::size_t of = layout.offset(e.from), ot = layout.offset(e.to);
        for (std::size_t a = 0; a < layout.card(e.from); ++a) {
            for (std::size_t b = 0; b < layout.card(e.to); ++b) {
                w(of + a, ot + b) = favored;
                w(ot + b, of + a) = reverse;
            }
        }
    }
    // Entries under a zero mask stay 0; they are already inert.
    return w;
}

RefineOutput refine(const Matrix& x, const ObjectiveContext& ctx, const PriorSpec& prior,
                    const OptimizerConfig& cfg, const StepObserver& observer) {
    Matrix w0 = init_logits(*ctx.mask, prior, *ctx.layout);
    return refine_from(std::move(w0), x, ctx, cfg, observer);
}

RefineOutput refine_from(Matrix w0, const Matrix& x, const ObjectiveContext& ctx,
                         const OptimizerConfig& cfg, const StepObserver& observer) {
    validate_optimizer_config(cfg);
    const std::size_t n = x.rows;
    if (n == 0) throw InputError("refine: empty data");
    const std::size_t batch = resolve_batch_size(cfg, n);
    const bool full_batch = batch == n;

    RefineOutput out;
    out.w = std::move(w0);
    out.trace.steps.reserve(cfg.steps);

    Matrix grad(out.w.rows, out.w.cols, 0.0);
    Matrix moment1(out.w.rows, out.w.cols, 0.0);
    Matrix moment2(out.w.rows, out.w.cols, 0.0);
    ObjectiveWorkspace ws;

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = n; // forces an initial shuffle in mini-batch mode
    Matrix batch_buf;
    if (!full_batch) batch_buf = Matrix(batch, x.cols);

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const auto t0 = std::chrono::steady_clock::now();

        const Matrix* xb = &x;
        if (!full_batch) {
            if (cursor + batch > n) {
                rng.shuffle(order);
                cursor = 0;
            }
            for (std::size_t r = 0; r < batch; ++r) {
                const double* src = x.row(order[cursor + r]);
                std::copy(src, src + x.cols, batch_buf.row(r));
            }
            cursor += batch;
            xb = &batch_buf;
        }

        StepRecord rec;
        try {
            rec.loss = total_loss_and_gradient(*xb, out.w, ctx, grad, ws);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at step " + std::to_string(t));
        }
        kernels::adam_step(out.w, grad, moment1, moment2, cfg.eta, cfg.beta1, cfg.beta2,
                           cfg.adam_epsilon, static_cast<long>(t) + 1);
        if (observer) observer(t, out.w);

        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.trace.steps.push_back(rec);
    }
    return out;
}

} // namespace pagrefine
