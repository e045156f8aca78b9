#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pagrefine/graph.hpp"
#include "pagrefine/matrix.hpp"
#include "pagrefine/objective.hpp"

namespace pagrefine {

enum class PriorSource { Random, File };

/// Directional initialization bias for one unresolved pair: the block
/// (from, to) starts at probability p, the reverse block at 1 - p.
struct PriorEntry {
    std::size_t from = 0;
    std::size_t to = 0;
    double p = 0.9;
};

struct PriorSpec {
    std::vector<PriorEntry> entries;
    PriorSource source = PriorSource::Random;
};

/// Assigns each unresolved pair a uniformly random favored direction.
PriorSpec random_prior(const std::vector<Edge>& pairs, std::uint64_t seed, double p);

/// Validates prior entries against the admissibility matrix: the pair must
/// be adjacent and unresolved (both directions open), p in (0.5, 1), and
/// each pair may appear at most once.
PriorSpec validate_prior(std::vector<PriorEntry> entries, const AdmissibilityMatrix& adm,
                         const std::vector<std::string>& names);

struct OptimizerConfig {
    double eta = 0.01;
    std::size_t steps = 140;
    /// nullopt selects automatically: full batch up to 20000 samples,
    /// otherwise mini-batches of 2048. 0 forces full batch.
    std::optional<std::size_t> batch_size;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

void validate_optimizer_config(const OptimizerConfig& cfg);

std::size_t resolve_batch_size(const OptimizerConfig& cfg, std::size_t sample_count);

struct StepRecord {
    LossBreakdown loss;
    double seconds = 0.0;
};

struct TrainingTrace {
    std::vector<StepRecord> steps;
};

struct RefineOutput {
    Matrix w;
    TrainingTrace trace;
};

/// ln(p / (1 - p)).
double logit(double p);

/// Initial logits: prior blocks at logit(p) / logit(1-p), every other
/// admissible entry at 0, masked entries left at 0 (they are inert; the
/// mask realizes the forbidden connections, no infinities involved).
Matrix init_logits(const StateMask& mask, const PriorSpec& prior, const StateLayout& layout);

/// Called after every parameter update with the step index and the
/// current logits; used by diagnostics that need the whole trajectory.
using StepObserver = std::function<void(std::size_t step, const Matrix& w)>;

/// Runs T Adam steps on the total objective starting from init_logits.
/// Mini-batches are contiguous slices of a shuffled index array,
/// reshuffled each epoch; everything is deterministic given the seed.
RefineOutput refine(const Matrix& x, const ObjectiveContext& ctx, const PriorSpec& prior,
                    const OptimizerConfig& cfg, const StepObserver& observer = {});

/// Same loop from a caller-supplied starting point.
RefineOutput refine_from(Matrix w0, const Matrix& x, const ObjectiveContext& ctx,
                         const OptimizerConfig& cfg, const StepObserver& observer = {});

} // namespace pagrefine
