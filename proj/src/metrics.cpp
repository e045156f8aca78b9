#include "pagrefine/metrics.hpp"

#include <algorithm>
#include <map>

#include "pagrefine/errors.hpp"

namespace pagrefine {

namespace {

void require_same_nodes(const Dag& est, const Dag& truth) {
    if (est.node_count != truth.node_count) {
        throw InputError("graphs have different node counts");
    }
}

} // namespace

std::size_t shd(const Dag& est, const Dag& truth) {
    require_same_nodes(est, truth);
    std::size_t distance = 0;
    for (std::size_t i = 0; i < est.node_count; ++i) {
        for (std::size_t j = i + 1; j < est.node_count; ++j) {
            const int est_state = est.has_edge(i, j) ? 1 : (est.has_edge(j, i) ? 2 : 0);
            const int truth_state = truth.has_edge(i, j) ? 1 : (truth.has_edge(j, i) ? 2 : 0);
            if (est_state != truth_state) ++distance;
        }
    }
    return distance;
}

F1Result f1_directed(const Dag& est, const Dag& truth) {
    require_same_nodes(est, truth);
    F1Result r;
    for (const auto& e : est.edges) {
        if (truth.edges.count(e)) ++r.true_positives;
    }
    r.precision = est.edges.empty()
                      ? 0.0
                      : static_cast<double>(r.true_positives) / static_cast<double>(est.edges.size());
    r.recall = truth.edges.empty()
                   ? 0.0
                   : static_cast<double>(r.true_positives) / static_cast<double>(truth.edges.size());
    const double pr = r.precision + r.recall;
    r.f1 = pr > 0.0 ? 2.0 * r.precision * r.recall / pr : 0.0;
    return r;
}

double unresolved_ratio(const EdgeStrengths& strengths, const std::vector<Edge>& pairs,
                        double tau, std::vector<std::string>* warnings) {
    if (pairs.empty()) {
        if (warnings) warnings->push_back("no unresolved pairs; unresolved ratio is 0");
        return 0.0;
    }
    std::size_t both = 0;
    for (const auto& [i, j] : pairs) {
        if (strengths.block_max(i, j) > tau && strengths.block_max(j, i) > tau) ++both;
    }
    return static_cast<double>(both) / static_cast<double>(pairs.size());
}

Dag align_node_sets(const Dag& est, const Dag& truth) {
    if (est.node_count != truth.node_count) {
        throw InputError("node sets differ: " + std::to_string(est.node_count) + " vs " +
                         std::to_string(truth.node_count) + " nodes");
    }
    std::map<std::string, std::size_t> truth_index;
    for (std::size_t i = 0; i < truth.node_count; ++i) truth_index[truth.names[i]] = i;
    std::vector<std::size_t> remap(est.node_count);
    for (std::size_t i = 0; i < est.node_count; ++i) {
        auto it = truth_index.find(est.names[i]);
        if (it == truth_index.end()) {
            throw InputError("node '" + est.names[i] + "' missing from the other graph");
        }
        remap[i] = it->second;
    }
    Dag aligned(truth.node_count);
    aligned.names = truth.names;
    for (const auto& [u, v] : est.edges) {
        aligned.edges.insert({remap[u], remap[v]});
    }
    return aligned;
}

} // namespace pagrefine
