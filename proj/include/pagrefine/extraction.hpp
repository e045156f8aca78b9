#pragma once

#include <set>
#include <vector>

#include "pagrefine/graph.hpp"
#include "pagrefine/matrix.hpp"

namespace pagrefine {

/// Variable-level directional strengths aggregated from the continuous
/// adjacency: block max drives edge extraction, block mean picks the
/// weakest edge during cycle projection.
struct EdgeStrengths {
    Matrix block_max;  // M x M
    Matrix block_mean; // M x M
};

struct RemovedEdge {
    Edge edge;
    double mean_strength = 0.0;
    std::vector<std::size_t> cycle; // witness at the removal step
};

struct ProjectionLog {
    std::vector<RemovedEdge> removed;
    bool acyclic_before = true;
    std::size_t raw_edge_count = 0;
};

EdgeStrengths block_strengths(const Matrix& adjacency, const StateLayout& layout,
                              const AdmissibilityMatrix& adm);

/// Raw edge set {i -> j : block_max(i, j) > tau} (strict).
std::set<Edge> threshold_edges(const EdgeStrengths& strengths, double tau);

/// Repeatedly finds the deterministic cycle witness and removes its
/// minimum mean-strength edge, ties broken lexicographically on (i, j),
/// until the graph is acyclic.
std::pair<Dag, ProjectionLog> cycle_projection(std::size_t node_count, std::set<Edge> raw_edges,
                                               const Matrix& mean_strength);

} // namespace pagrefine
