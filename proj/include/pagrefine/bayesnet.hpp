#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pagrefine/dataset.hpp"
#include "pagrefine/graph.hpp"

namespace pagrefine {

/// Discrete Bayesian network node: CPT rows are indexed by the mixed-radix
/// parent configuration with the first listed parent most significant.
struct BayesNode {
    std::string name;
    std::size_t card = 2;
    std::vector<std::size_t> parents;
    Matrix cpt; // rows = product of parent cards, cols = card
};

struct BayesNet {
    std::vector<BayesNode> nodes;

    std::size_t node_count() const { return nodes.size(); }
    Dag dag() const;
};

/// All structural and CPT problems found, one message each; empty when the
/// network is well-formed.
std::vector<std::string> validate(const BayesNet& bn);

/// Ancestral sampling in topological order; deterministic given the seed.
DiscreteDataset forward_sample(const BayesNet& bn, std::size_t n, std::uint64_t seed);

/// Bundled synthetic benchmarks.
BayesNet chain3_fixture();     // A -> B -> C, binary
BayesNet collider3_fixture();  // A -> C <- B, binary
BayesNet net8_fixture();       // 8 nodes, mixed 2/3 states, Dirichlet(1) CPTs
BayesNet net15_fixture();      // 15 nodes, mixed 2/3 states
BayesNet net50_fixture();      // 50 nodes, all 3 states (scaling benchmark)

/// Random DAG + Dirichlet(1) CPTs; the generator behind the fixtures.
BayesNet random_bayes_net(std::size_t node_count, std::uint64_t seed, double edge_prob,
                          std::size_t max_parents, const std::vector<std::size_t>& card_choices);

} // namespace pagrefine
