#pragma once

#include <vector>

#include "pagrefine/dataset.hpp"
#include "pagrefine/graph.hpp"
#include "pagrefine/matrix.hpp"

namespace pagrefine {

/// Per-block non-negative weights for the group-lasso term, one L_i x L_j
/// matrix per admissible directed pair, normalized to mean 1 per block.
struct PenaltyWeights {
    /// Full expanded matrix; entries outside admissible blocks are 1.0 and
    /// never read.
    Matrix p;
};

enum class PenaltyMode { InverseFrequency, Ones };

/// Default weighting: entries proportional to 1/sqrt(freq_a * freq_b),
/// rescaled so every admissible block has mean 1. Compensates for rare
/// states dominating or vanishing from block norms.
PenaltyWeights build_penalty_weights(const StateFrequencies& freqs, const StateLayout& layout,
                                     const std::vector<Edge>& blocks, PenaltyMode mode);

struct Hyperparameters {
    double lambda_sparse = 0.01;
    double lambda_cycle = 5.0;
    double lambda_skeleton = 0.1;
    double tau = 0.1;
    double epsilon_norm = 1e-8;
};

void validate_hyperparameters(const Hyperparameters& hp);

struct LossBreakdown {
    double recon = 0.0;    // nats
    double sparse = 0.0;
    double cycle = 0.0;
    double skeleton = 0.0;
    double total = 0.0;
};

/// Everything the loss needs besides the batch and the logits. recon_vars
/// lists the variables entering the reconstruction term (all by default;
/// the unresolved-only variant restricts it).
struct ObjectiveContext {
    const StateLayout* layout = nullptr;
    const StateMask* mask = nullptr;
    const PenaltyWeights* penalty = nullptr;
    std::vector<Edge> directed_blocks;   // admissible (i, j)
    std::vector<Edge> unresolved;        // both-admissible pairs, i < j
    Hyperparameters hp;
    std::vector<std::size_t> recon_vars;

    static ObjectiveContext make(const StateLayout& layout, const StateMask& mask,
                                 const PenaltyWeights& penalty,
                                 const AdmissibilityMatrix& adm,
                                 const Hyperparameters& hp);
};

/// L = X (W .* S).
Matrix masked_logits(const Matrix& x, const Matrix& w, const StateMask& mask);

/// Softmax restricted to each variable's state block, max-subtracted.
Matrix per_variable_softmax(const Matrix& logits, const StateLayout& layout);

/// Mean cross-entropy between one-hot data and block probabilities over
/// the given variables; normalized by batch size times variable count.
double recon_loss(const Matrix& x, const Matrix& probs, const StateLayout& layout,
                  const std::vector<std::size_t>& recon_vars);

/// sqrt(eps + ||block||_F^2) - sqrt(eps); reduces to the Frobenius norm as
/// eps -> 0 and is exactly 0 on zero blocks.
double smoothed_block_norm(const Matrix& a, const StateLayout& layout, std::size_t i,
                           std::size_t j, double eps, const Matrix* weights = nullptr);

double sparse_loss(const Matrix& adjacency, const PenaltyWeights& penalty,
                   const StateLayout& layout, const std::vector<Edge>& blocks, double eps);

/// Mean over pairs of the product of the two directional norms.
double cycle_loss(const Matrix& adjacency, const StateLayout& layout,
                  const std::vector<Edge>& pairs, double eps);

/// The pairwise coupling as a function of the two directional norms.
/// Exposed so its bilinear structure can be probed directly.
double cycle_loss_from_norms(const std::vector<double>& forward_norms,
                             const std::vector<double>& reverse_norms);

double skeleton_loss(const Matrix& adjacency, const StateMask& mask,
                     std::vector<std::string>* warnings = nullptr);

/// Scratch buffers reused across optimization steps.
struct ObjectiveWorkspace {
    Matrix masked_w;
    Matrix logits;
    Matrix probs;
    Matrix d;
    Matrix adjacency;
    Matrix sigmoid_prime;
    Matrix grad_recon;
    std::vector<double> row_loss;
};

/// Loss and its exact gradient with respect to the logit matrix. The
/// reconstruction term differentiates through X(W .* S); the regularizers
/// through sigmoid(W) .* S. Entries with S == 0 get gradient exactly 0.
/// Throws NumericalError when any term is non-finite.
LossBreakdown total_loss_and_gradient(const Matrix& x_batch, const Matrix& w,
                                      const ObjectiveContext& ctx, Matrix& grad,
                                      ObjectiveWorkspace& ws);

/// Loss only (same path, gradient skipped). Used by finite-difference
/// checks and step-free evaluations.
LossBreakdown total_loss(const Matrix& x_batch, const Matrix& w, const ObjectiveContext& ctx);

} // namespace pagrefine
