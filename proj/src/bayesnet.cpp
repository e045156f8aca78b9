#include "pagrefine/bayesnet.hpp"

#include <cmath>
#include <numeric>

#include "pagrefine/errors.hpp"
#include "pagrefine/rng.hpp"

namespace pagrefine {

Dag BayesNet::dag() const {
    Dag g(node_count());
    for (std::size_t i = 0; i < nodes.size(); ++i) g.names[i] = nodes[i].name;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t p : nodes[i].parents) g.edges.insert({p, i});
    }
    return g;
}

std::vector<std::string> validate(const BayesNet& bn) {
    std::vector<std::string> errors;
    const std::size_t m = bn.node_count();
    if (m == 0) {
        errors.push_back("network has no nodes");
        return errors;
    }
    for (std::size_t i = 0; i < m; ++i) {
        const auto& node = bn.nodes[i];
        if (node.card < 2) {
            errors.push_back("node " + node.name + ": cardinality must be at least 2");
        }
        std::size_t expected_rows = 1;
        bool parents_ok = true;
        for (std::size_t p : node.parents) {
            if (p >= m) {
                errors.push_back("node " + node.name + ": parent index out of range");
                parents_ok = false;
                break;
            }
            if (p == i) {
                errors.push_back("node " + node.name + ": lists itself as parent");
                parents_ok = false;
                break;
            }
            expected_rows *= bn.nodes[p].card;
        }
        if (!parents_ok) continue;
        if (node.cpt.rows != expected_rows || node.cpt.cols != node.card) {
            errors.push_back("node " + node.name + ": cpt is " + std::to_string(node.cpt.rows) +
                             "x" + std::to_string(node.cpt.cols) + ", expected " +
                             std::to_string(expected_rows) + "x" + std::to_string(node.card));
            continue;
        }
        for (std::size_t r = 0; r < node.cpt.rows; ++r) {
            double total = 0.0;
            bool negative = false;
            for (std::size_t c = 0; c < node.cpt.cols; ++c) {
                const double p = node.cpt(r, c);
                if (p < 0.0) negative = true;
                total += p;
            }
            if (negative) {
                errors.push_back("node " + node.name + ": negative probability in row " +
                                 std::to_string(r));
            }
            if (std::abs(total - 1.0) > 1e-9) {
                errors.push_back("node " + node.name + ": row " + std::to_string(r) +
                                 " sums to " + std::to_string(total));
            }
        }
    }
    const auto check = is_acyclic(m, bn.dag().edges);
    if (!check.acyclic) {
        std::string msg = "directed cycle:";
        for (std::size_t v : check.cycle) msg += " " + bn.nodes[v].name;
        errors.push_back(msg);
    }
    return errors;
}

DiscreteDataset forward_sample(const BayesNet& bn, std::size_t n, std::uint64_t seed) {
    const auto errors = validate(bn);
    if (!errors.empty()) {
        std::string msg = "invalid bayes net:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw InputError(msg);
    }
    if (n == 0) throw InputError("sample count must be positive");

    const auto order = topological_order(bn.node_count(), bn.dag().edges);
    DiscreteDataset ds;
    ds.variable_count = bn.node_count();
    ds.sample_count = n;
    ds.variable_names.resize(ds.variable_count);
    ds.cardinalities.resize(ds.variable_count);
    for (std::size_t i = 0; i < bn.node_count(); ++i) {
        ds.variable_names[i] = bn.nodes[i].name;
        ds.cardinalities[i] = bn.nodes[i].card;
    }
    ds.rows.assign(n * ds.variable_count, 0);

    Rng rng(seed);
    for (std::size_t s = 0; s < n; ++s) {
        std::int32_t* row = &ds.rows[s * ds.variable_count];
        for (std::size_t v : *order) {
            const auto& node = bn.nodes[v];
            std::size_t cpt_row = 0;
            for (std::size_t p : node.parents) {
                cpt_row = cpt_row * bn.nodes[p].card + static_cast<std::size_t>(row[p]);
            }
            const double u = rng.uniform();
            double cum = 0.0;
            std::size_t state = node.card - 1;
            for (std::size_t c = 0; c < node.card; ++c) {
                cum += node.cpt(cpt_row, c);
                if (u < cum) {
                    state = c;
                    break;
                }
            }
            row[v] = static_cast<std::int32_t>(state);
        }
    }
    return ds;
}

namespace {

Matrix dirichlet_cpt(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix cpt(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            // Dirichlet(1) row via normalized Exp(1) draws.
            const double e = -std::log(1.0 - rng.uniform());
            cpt(r, c) = e;
            total += e;
        }
        for (std::size_t c = 0; c < cols; ++c) cpt(r, c) /= total;
    }
    return cpt;
}

} // namespace

BayesNet random_bayes_net(std::size_t node_count, std::uint64_t seed, double edge_prob,
                          std::size_t max_parents, const std::vector<std::size_t>& card_choices) {
    Rng rng(seed);
    BayesNet bn;
    bn.nodes.resize(node_count);

    std::vector<std::size_t> rank(node_count);
    std::iota(rank.begin(), rank.end(), 0);
    rng.shuffle(rank); // rank[k] = node at topological position k

    for (std::size_t i = 0; i < node_count; ++i) {
        bn.nodes[i].name = "V" + std::to_string(i);
        bn.nodes[i].card = card_choices[rng.below(card_choices.size())];
    }
    for (std::size_t k = 1; k < node_count; ++k) {
        const std::size_t child = rank[k];
        for (std::size_t q = 0; q < k; ++q) {
            if (bn.nodes[child].parents.size() >= max_parents) break;
            if (rng.uniform() < edge_prob) {
                bn.nodes[child].parents.push_back(rank[q]);
            }
        }
    }
    for (auto& node : bn.nodes) {
        std::size_t rows = 1;
        for (std::size_t p : node.parents) rows *= bn.nodes[p].card;
        node.cpt = dirichlet_cpt(rows, node.card, rng);
    }
    return bn;
}

BayesNet chain3_fixture() {
    BayesNet bn;
    bn.nodes.resize(3);
    bn.nodes[0] = {"A", 2, {}, Matrix(1, 2)};
    bn.nodes[0].cpt(0, 0) = 0.7;
    bn.nodes[0].cpt(0, 1) = 0.3;
    bn.nodes[1] = {"B", 2, {0}, Matrix(2, 2)};
    bn.nodes[1].cpt(0, 0) = 0.8;
    bn.nodes[1].cpt(0, 1) = 0.2;
    bn.nodes[1].cpt(1, 0) = 0.2;
    bn.nodes[1].cpt(1, 1) = 0.8;
    bn.nodes[2] = {"C", 2, {1}, Matrix(2, 2)};
    bn.nodes[2].cpt(0, 0) = 0.75;
    bn.nodes[2].cpt(0, 1) = 0.25;
    bn.nodes[2].cpt(1, 0) = 0.25;
    bn.nodes[2].cpt(1, 1) = 0.75;
    return bn;
}

BayesNet collider3_fixture() {
    BayesNet bn;
    bn.nodes.resize(3);
    bn.nodes[0] = {"A", 2, {}, Matrix(1, 2)};
    bn.nodes[0].cpt(0, 0) = 0.6;
    bn.nodes[0].cpt(0, 1) = 0.4;
    bn.nodes[1] = {"B", 2, {}, Matrix(1, 2)};
    bn.nodes[1].cpt(0, 0) = 0.4;
    bn.nodes[1].cpt(0, 1) = 0.6;
    bn.nodes[2] = {"C", 2, {0, 1}, Matrix(4, 2)};
    const double p1[4] = {0.1, 0.7, 0.6, 0.9}; // P(C=1 | A, B), A most significant
    for (std::size_t r = 0; r < 4; ++r) {
        bn.nodes[2].cpt(r, 0) = 1.0 - p1[r];
        bn.nodes[2].cpt(r, 1) = p1[r];
    }
    return bn;
}

BayesNet net8_fixture() {
    return random_bayes_net(8, 104, 0.35, 3, {2, 3});
}

BayesNet net15_fixture() {
    return random_bayes_net(15, 202, 0.18, 3, {2, 3});
}

BayesNet net50_fixture() {
    return random_bayes_net(50, 303, 0.06, 3, {3});
}

} // namespace pagrefine
