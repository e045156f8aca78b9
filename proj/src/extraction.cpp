#include "pagrefine/extraction.hpp"

#include <algorithm>

#include "pagrefine/errors.hpp"

namespace pagrefine {

EdgeStrengths block_strengths(const Matrix& adjacency, const StateLayout& layout,
                              const AdmissibilityMatrix& adm) {
    const std::size_t m = layout.variable_count();
    if (adm.var_count != m || adjacency.rows != layout.total_states ||
        adjacency.cols != layout.total_states) {
        throw InputError("block_strengths: dimension mismatch");
    }
    EdgeStrengths out;
    out.block_max = Matrix(m, m, 0.0);
    out.block_mean = Matrix(m, m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j || !adm.allowed(i, j)) continue;
            const std::size_t oi = layout.offset(i), oj = layout.offset(j);
            double mx = 0.0, total = 0.0;
            for (std::size_t a = 0; a < layout.card(i); ++a) {
                for (std::size_t b = 0; b < layout.card(j); ++b) {
                    const double v = adjacency(oi + a, oj + b);
                    mx = std::max(mx, v);
                    total += v;
                }
            }
            out.block_max(i, j) = mx;
            out.block_mean(i, j) = total / static_cast<double>(layout.card(i) * layout.card(j));
        }
    }
    return out;
}

std::set<Edge> threshold_edges(const EdgeStrengths& strengths, double tau) {
    if (!(tau > 0.0) || !(tau <= 1.0)) throw InputError("tau must lie in (0, 1]");
    std::set<Edge> edges;
    const std::size_t m = strengths.block_max.rows;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i != j && strengths.block_max(i, j) > tau) edges.insert({i, j});
        }
    }
    return edges;
}

std::pair<Dag, ProjectionLog> cycle_projection(std::size_t node_count, std::set<Edge> raw_edges,
                                               const Matrix& mean_strength) {
    ProjectionLog log;
    log.raw_edge_count = raw_edges.size();

    auto check = is_acyclic(node_count, raw_edges);
    log.acyclic_before = check.acyclic;
    while (!check.acyclic) {
        const auto& cyc = check.cycle;
        Edge weakest{0, 0};
        double weakest_strength = 0.0;
        bool first = true;
        for (std::size_t k = 0; k < cyc.size(); ++k) {
            const Edge e{cyc[k], cyc[(k + 1) % cyc.size()]};
            const double s = mean_strength(e.first, e.second);
            if (first || s < weakest_strength ||
                (s == weakest_strength && e < weakest)) {
                weakest = e;
                weakest_strength = s;
                first = false;
            }
        }
        raw_edges.erase(weakest);
        log.removed.push_back({weakest, weakest_strength, cyc});
        check = is_acyclic(node_count, raw_edges);
    }

    Dag dag(node_count, std::move(raw_edges));
    return {std::move(dag), std::move(log)};
}

} // namespace pagrefine
