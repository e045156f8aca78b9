#include "pagrefine/graph.hpp"

#include <algorithm>
#include <queue>

#include "pagrefine/errors.hpp"

namespace pagrefine {

namespace {

std::vector<std::string> default_names(std::size_t n) {
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) names[i] = "X" + std::to_string(i);
    return names;
}

} // namespace

Dag::Dag(std::size_t n) : node_count(n), names(default_names(n)) {}

Dag::Dag(std::size_t n, std::set<Edge> e) : node_count(n), names(default_names(n)), edges(std::move(e)) {}

Pag::Pag(std::size_t n) : node_count(n), names(default_names(n)) {}

std::string mark_name(Mark m) {
    switch (m) {
        case Mark::Circle: return "circle";
        case Mark::Arrow: return "arrow";
        case Mark::Tail: return "tail";
    }
    return "circle";
}

Mark mark_from_name(const std::string& s) {
    if (s == "circle") return Mark::Circle;
    if (s == "arrow") return Mark::Arrow;
    if (s == "tail") return Mark::Tail;
    throw InputError("unknown endpoint mark '" + s + "' (expected circle|arrow|tail)");
}

const PagEdge* Pag::find_edge(std::size_t i, std::size_t j) const {
    const std::size_t a = std::min(i, j), b = std::max(i, j);
    for (const auto& e : edges) {
        if (e.a == a && e.b == b) return &e;
    }
    return nullptr;
}

void validate_pag(const Pag& pag) {
    if (pag.names.size() != pag.node_count) throw InputError("pag: name count mismatch");
    std::set<Edge> seen;
    for (const auto& e : pag.edges) {
        if (e.a >= pag.node_count || e.b >= pag.node_count) throw InputError("pag: edge endpoint out of range");
        if (e.a == e.b) throw InputError("pag: self loop on node " + pag.names[e.a]);
        if (e.a > e.b) throw InputError("pag: edges must be stored with a < b");
        if (!seen.insert({e.a, e.b}).second) {
            throw InputError("pag: duplicate edge between " + pag.names[e.a] + " and " + pag.names[e.b]);
        }
    }
}

AdmissibilityMatrix pag_admissibility(const Pag& pag, std::vector<std::string>* warnings) {
    validate_pag(pag);
    const std::size_t n = pag.node_count;
    AdmissibilityMatrix m(n);

    // Per-edge endpoint rules.
    for (const auto& e : pag.edges) {
        const bool resolved_ab = (e.mark_a == Mark::Tail && e.mark_b == Mark::Arrow);
        const bool resolved_ba = (e.mark_a == Mark::Arrow && e.mark_b == Mark::Tail);
        if (resolved_ab) {
            m.set(e.a, e.b, true);
        } else if (resolved_ba) {
            m.set(e.b, e.a, true);
        } else {
            m.set(e.a, e.b, true);
            m.set(e.b, e.a, true);
        }
    }

    // Unshielded colliders: arrowheads at k on edges {i,k} and {j,k} with
    // i, j non-adjacent forbid k -> i and k -> j.
    auto arrow_at = [&](std::size_t endpoint, const PagEdge& e) {
        return (e.a == endpoint ? e.mark_a : e.mark_b) == Mark::Arrow;
    };
    std::vector<std::uint8_t> in_collider_arrow(pag.edges.size(), 0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k) continue;
            const PagEdge* eik = pag.find_edge(i, k);
            if (!eik || !arrow_at(k, *eik)) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (j == k || j == i) continue;
                const PagEdge* ejk = pag.find_edge(j, k);
                if (!ejk || !arrow_at(k, *ejk)) continue;
                if (pag.find_edge(i, j)) continue; // shielded
                m.set(k, i, false);
                m.set(k, j, false);
                for (std::size_t idx = 0; idx < pag.edges.size(); ++idx) {
                    if (&pag.edges[idx] == eik || &pag.edges[idx] == ejk) in_collider_arrow[idx] = 1;
                }
            }
        }
    }

    if (warnings) {
        for (std::size_t idx = 0; idx < pag.edges.size(); ++idx) {
            const auto& e = pag.edges[idx];
            if (e.mark_a == Mark::Arrow && e.mark_b == Mark::Arrow && !in_collider_arrow[idx]) {
                warnings->push_back("edge " + pag.names[e.a] + " <-> " + pag.names[e.b] +
                                    " is bidirected outside any unshielded collider; "
                                    "treating both directions as admissible");
            }
        }
    }
    return m;
}

StateMask lift_to_state_mask(const AdmissibilityMatrix& m, const StateLayout& layout) {
    if (m.var_count != layout.variable_count()) {
        throw InputError("state mask: admissibility and layout variable counts differ");
    }
    StateMask out;
    out.s = Matrix(layout.total_states, layout.total_states, 0.0);
    for (std::size_t i = 0; i < m.var_count; ++i) {
        for (std::size_t j = 0; j < m.var_count; ++j) {
            if (i == j || !m.allowed(i, j)) continue;
            for (std::size_t a = 0; a < layout.card(i); ++a) {
                for (std::size_t b = 0; b < layout.card(j); ++b) {
                    out.s(layout.offset(i) + a, layout.offset(j) + b) = 1.0;
                    ++out.ones;
                }
            }
        }
    }
    return out;
}

std::vector<Edge> admissible_blocks(const AdmissibilityMatrix& m) {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < m.var_count; ++i) {
        for (std::size_t j = 0; j < m.var_count; ++j) {
            if (i != j && m.allowed(i, j)) out.push_back({i, j});
        }
    }
    return out;
}

std::vector<Edge> unresolved_pairs(const AdmissibilityMatrix& m) {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < m.var_count; ++i) {
        for (std::size_t j = i + 1; j < m.var_count; ++j) {
            if (m.allowed(i, j) && m.allowed(j, i)) out.push_back({i, j});
        }
    }
    return out;
}

CycleCheck is_acyclic(std::size_t node_count, const std::set<Edge>& edges) {
    std::vector<std::vector<std::size_t>> adj(node_count);
    for (const auto& [u, v] : edges) adj[u].push_back(v);
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());

    enum : std::uint8_t { White, Gray, Black };
    std::vector<std::uint8_t> color(node_count, White);
    std::vector<std::size_t> stack; // current DFS path

    // Iterative DFS; frame = (node, next neighbor index).
    std::vector<std::pair<std::size_t, std::size_t>> frames;
    for (std::size_t root = 0; root < node_count; ++root) {
        if (color[root] != White) continue;
        frames.push_back({root, 0});
        color[root] = Gray;
        stack.push_back(root);
        while (!frames.empty()) {
            auto& [u, next] = frames.back();
            if (next < adj[u].size()) {
                const std::size_t v = adj[u][next++];
                if (color[v] == White) {
                    color[v] = Gray;
                    stack.push_back(v);
                    frames.push_back({v, 0});
                } else if (color[v] == Gray) {
                    CycleCheck res;
                    res.acyclic = false;
                    auto it = std::find(stack.begin(), stack.end(), v);
                    res.cycle.assign(it, stack.end());
                    return res;
                }
            } else {
                color[u] = Black;
                stack.pop_back();
                frames.pop_back();
            }
        }
    }
    return {};
}

std::optional<std::vector<std::size_t>> topological_order(std::size_t node_count,
                                                          const std::set<Edge>& edges) {
    std::vector<std::size_t> indegree(node_count, 0);
    std::vector<std::vector<std::size_t>> adj(node_count);
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        ++indegree[v];
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < node_count; ++i) {
        if (indegree[i] == 0) ready.push(i);
    }
    std::vector<std::size_t> order;
    order.reserve(node_count);
    while (!ready.empty()) {
        const std::size_t u = ready.top();
        ready.pop();
        order.push_back(u);
        for (std::size_t v : adj[u]) {
            if (--indegree[v] == 0) ready.push(v);
        }
    }
    if (order.size() != node_count) return std::nullopt;
    return order;
}

void validate_dag(const Dag& dag) {
    if (dag.names.size() != dag.node_count) throw InputError("dag: name count mismatch");
    for (const auto& [u, v] : dag.edges) {
        if (u >= dag.node_count || v >= dag.node_count) throw InputError("dag: edge endpoint out of range");
        if (u == v) throw InputError("dag: self loop on node " + dag.names[u]);
    }
    const auto check = is_acyclic(dag.node_count, dag.edges);
    if (!check.acyclic) {
        std::string msg = "dag: directed cycle";
        for (std::size_t v : check.cycle) msg += " " + dag.names[v];
        throw InputError(msg);
    }
}

Pag oracle_pag_from_dag(const Dag& truth) {
    validate_dag(truth);
    Pag pag(truth.node_count);
    pag.names = truth.names;

    auto adjacent = [&](std::size_t i, std::size_t j) {
        return truth.has_edge(i, j) || truth.has_edge(j, i);
    };

    std::vector<PagEdge> edges;
    for (const auto& [u, v] : truth.edges) {
        PagEdge e;
        e.a = std::min(u, v);
        e.b = std::max(u, v);
        edges.push_back(e);
    }
    std::sort(edges.begin(), edges.end(), [](const PagEdge& x, const PagEdge& y) {
        return std::make_pair(x.a, x.b) < std::make_pair(y.a, y.b);
    });

    auto find = [&](std::size_t i, std::size_t j) -> PagEdge& {
        const std::size_t a = std::min(i, j), b = std::max(i, j);
        for (auto& e : edges) {
            if (e.a == a && e.b == b) return e;
        }
        throw std::logic_error("oracle pag: missing edge");
    };
    auto set_mark = [](PagEdge& e, std::size_t endpoint, Mark m) {
        if (e.a == endpoint) {
            e.mark_a = m;
        } else {
            e.mark_b = m;
        }
    };

    // Unshielded colliders i -> k <- j with i, j non-adjacent.
    for (std::size_t k = 0; k < truth.node_count; ++k) {
        std::vector<std::size_t> parents;
        for (std::size_t i = 0; i < truth.node_count; ++i) {
            if (truth.has_edge(i, k)) parents.push_back(i);
        }
        for (std::size_t pi = 0; pi < parents.size(); ++pi) {
            for (std::size_t pj = pi + 1; pj < parents.size(); ++pj) {
                const std::size_t i = parents[pi], j = parents[pj];
                if (adjacent(i, j)) continue;
                PagEdge& eik = find(i, k);
                set_mark(eik, k, Mark::Arrow);
                set_mark(eik, i, Mark::Tail);
                PagEdge& ejk = find(j, k);
                set_mark(ejk, k, Mark::Arrow);
                set_mark(ejk, j, Mark::Tail);
            }
        }
    }

    pag.edges = std::move(edges);
    return pag;
}

} // namespace pagrefine
