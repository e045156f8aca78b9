#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pagrefine/dataset.hpp"
#include "pagrefine/matrix.hpp"

namespace pagrefine {

using Edge = std::pair<std::size_t, std::size_t>; // directed (from, to)

/// Directed graph over named nodes. Acyclicity is a property callers
/// establish with is_acyclic / validate_dag, not a constructor guarantee,
/// because intermediate edge sets (raw extraction output) may be cyclic.
struct Dag {
    std::size_t node_count = 0;
    std::vector<std::string> names; // size node_count
    std::set<Edge> edges;

    Dag() = default;
    explicit Dag(std::size_t n);
    Dag(std::size_t n, std::set<Edge> e);

    bool has_edge(std::size_t i, std::size_t j) const {
        return edges.count({i, j}) != 0;
    }
};

/// Endpoint mark of a PAG edge.
enum class Mark { Circle, Arrow, Tail };

std::string mark_name(Mark m);
Mark mark_from_name(const std::string& s);

/// One PAG edge: unordered pair {a, b} with a mark at each endpoint.
/// Stored with a < b.
struct PagEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    Mark mark_a = Mark::Circle; // mark at endpoint a
    Mark mark_b = Mark::Circle; // mark at endpoint b
};

struct Pag {
    std::size_t node_count = 0;
    std::vector<std::string> names;
    std::vector<PagEdge> edges;

    Pag() = default;
    explicit Pag(std::size_t n);

    const PagEdge* find_edge(std::size_t i, std::size_t j) const;
};

void validate_pag(const Pag& pag);

/// m(i, j) == 1 iff orienting i -> j is admissible.
struct AdmissibilityMatrix {
    std::size_t var_count = 0;
    std::vector<std::uint8_t> m; // row-major var_count^2

    AdmissibilityMatrix() = default;
    explicit AdmissibilityMatrix(std::size_t n) : var_count(n), m(n * n, 0) {}

    bool allowed(std::size_t i, std::size_t j) const { return m[i * var_count + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { m[i * var_count + j] = v ? 1 : 0; }
};

/// State-level feasibility: block-constant 0/1 matrix over the expanded
/// dimension, zero on within-variable blocks.
struct StateMask {
    Matrix s;                 // total_states^2, entries 0.0 or 1.0
    std::size_t ones = 0;     // number of admissible entries
};

/// Compiles PAG endpoint semantics into directional admissibility:
/// non-adjacent pairs forbid both directions, a tail-arrow edge resolves
/// one direction, anything else leaves both open. Unshielded colliders
/// then forbid the reverse directions of their forced parents. An
/// arrow-arrow edge outside any collider triggers a warning and stays
/// both-admissible.
AdmissibilityMatrix pag_admissibility(const Pag& pag,
                                      std::vector<std::string>* warnings = nullptr);

StateMask lift_to_state_mask(const AdmissibilityMatrix& m, const StateLayout& layout);

/// Directed variable pairs allowed by m, in lexicographic order.
std::vector<Edge> admissible_blocks(const AdmissibilityMatrix& m);

/// Unordered pairs (i < j) with both directions admissible.
std::vector<Edge> unresolved_pairs(const AdmissibilityMatrix& m);

struct CycleCheck {
    bool acyclic = true;
    /// When cyclic: vertices of one directed cycle, in order, without
    /// repeating the first vertex. Deterministic: DFS from the
    /// lowest-index vertex, lowest-index neighbor first.
    std::vector<std::size_t> cycle;
};

CycleCheck is_acyclic(std::size_t node_count, const std::set<Edge>& edges);

/// Kahn order, lowest index first among ready nodes; empty when cyclic.
std::optional<std::vector<std::size_t>> topological_order(std::size_t node_count,
                                                          const std::set<Edge>& edges);

void validate_dag(const Dag& dag);

/// Test-stand PAG for a known DAG: the true skeleton with circle marks,
/// plus the unshielded colliders of the DAG oriented (arrow at the
/// collision node, tail at each parent).
Pag oracle_pag_from_dag(const Dag& truth);

} // namespace pagrefine
