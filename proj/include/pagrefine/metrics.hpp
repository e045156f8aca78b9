#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pagrefine/extraction.hpp"
#include "pagrefine/graph.hpp"

namespace pagrefine {

struct MetricsReport {
    std::optional<std::size_t> shd;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> unresolved_ratio;
    double tau = 0.0;
    std::size_t est_edges = 0;
    std::optional<std::size_t> truth_edges;
    std::optional<std::size_t> true_positives;
};

/// Number of node pairs where the two graphs disagree: a missing, extra,
/// or reversed edge each counts 1.
std::size_t shd(const Dag& est, const Dag& truth);

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t true_positives = 0;
};

/// Exact directed-edge matches only; no skeleton credit.
F1Result f1_directed(const Dag& est, const Dag& truth);

/// Fraction of unresolved pairs whose directional block-max strengths both
/// exceed tau (strict). Empty pair set yields 0 with a warning.
double unresolved_ratio(const EdgeStrengths& strengths, const std::vector<Edge>& pairs,
                        double tau, std::vector<std::string>* warnings = nullptr);

/// Throws InputError unless the graphs carry identical node-name sets;
/// returns est re-indexed into truth's node order.
Dag align_node_sets(const Dag& est, const Dag& truth);

} // namespace pagrefine
