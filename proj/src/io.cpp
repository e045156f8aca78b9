#include "pagrefine/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pagrefine/errors.hpp"

namespace pagrefine {

using nlohmann::json;

namespace {

json parse_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(path + ": invalid JSON: " + e.what());
    }
}

std::vector<std::string> read_node_names(const json& j, const std::string& path) {
    if (!j.contains("nodes") || !j["nodes"].is_array()) {
        throw InputError(path + ": missing \"nodes\" array");
    }
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto& n : j["nodes"]) {
        if (!n.is_string()) throw InputError(path + ": node names must be strings");
        names.push_back(n.get<std::string>());
        if (!seen.insert(names.back()).second) {
            throw InputError(path + ": duplicate node name '" + names.back() + "'");
        }
    }
    return names;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name,
                     const std::string& path) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw InputError(path + ": unknown node '" + name + "'");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
    if (!out) throw InputError("write failed: " + path);
}

Pag load_pag_json(const std::string& path) {
    const json j = parse_json_file(path);
    Pag pag(0);
    pag.names = read_node_names(j, path);
    pag.node_count = pag.names.size();
    if (j.contains("edges")) {
        for (const auto& e : j["edges"]) {
            PagEdge edge;
            std::size_t a = index_of(pag.names, e.at("a").get<std::string>(), path);
            std::size_t b = index_of(pag.names, e.at("b").get<std::string>(), path);
            Mark mark_a = mark_from_name(e.at("mark_a").get<std::string>());
            Mark mark_b = mark_from_name(e.at("mark_b").get<std::string>());
            if (a > b) {
                std::swap(a, b);
                std::swap(mark_a, mark_b);
            }
            edge.a = a;
            edge.b = b;
            edge.mark_a = mark_a;
            edge.mark_b = mark_b;
            pag.edges.push_back(edge);
        }
    }
    validate_pag(pag);
    return pag;
}

void save_pag_json(const Pag& pag, const std::string& path) {
    json j;
    j["nodes"] = pag.names;
    json edges = json::array();
    for (const auto& e : pag.edges) {
        edges.push_back({{"a", pag.names[e.a]},
                         {"b", pag.names[e.b]},
                         {"mark_a", mark_name(e.mark_a)},
                         {"mark_b", mark_name(e.mark_b)}});
    }
    j["edges"] = edges;
    write_file(path, j.dump(2) + "\n");
}

Dag load_dag_json(const std::string& path) {
    const json j = parse_json_file(path);
    Dag dag(0);
    dag.names = read_node_names(j, path);
    dag.node_count = dag.names.size();
    if (j.contains("edges")) {
        for (const auto& e : j["edges"]) {
            const std::size_t u = index_of(dag.names, e.at("from").get<std::string>(), path);
            const std::size_t v = index_of(dag.names, e.at("to").get<std::string>(), path);
            dag.edges.insert({u, v});
        }
    }
    validate_dag(dag);
    return dag;
}

void save_dag_json(const Dag& dag, const std::string& path) {
    json j;
    j["nodes"] = dag.names;
    json edges = json::array();
    for (const auto& [u, v] : dag.edges) {
        edges.push_back({{"from", dag.names[u]}, {"to", dag.names[v]}});
    }
    j["edges"] = edges;
    write_file(path, j.dump(2) + "\n");
}

BayesNet load_bayesnet_json(const std::string& path) {
    const json j = parse_json_file(path);
    if (!j.contains("nodes") || !j["nodes"].is_array()) {
        throw InputError(path + ": missing \"nodes\" array");
    }
    BayesNet bn;
    std::vector<std::string> names;
    for (const auto& n : j["nodes"]) {
        names.push_back(n.at("name").get<std::string>());
    }
    for (const auto& n : j["nodes"]) {
        BayesNode node;
        node.name = n.at("name").get<std::string>();
        node.card = n.at("card").get<std::size_t>();
        if (n.contains("parents")) {
            for (const auto& p : n["parents"]) {
                node.parents.push_back(index_of(names, p.get<std::string>(), path));
            }
        }
        const auto& cpt = n.at("cpt");
        if (!cpt.is_array() || cpt.empty()) {
            throw InputError(path + ": node " + node.name + " has an empty cpt");
        }
        node.cpt = Matrix(cpt.size(), cpt[0].size());
        for (std::size_t r = 0; r < cpt.size(); ++r) {
            if (cpt[r].size() != node.cpt.cols) {
                throw InputError(path + ": node " + node.name + " has ragged cpt rows");
            }
            for (std::size_t c = 0; c < node.cpt.cols; ++c) {
                node.cpt(r, c) = cpt[r][c].get<double>();
            }
        }
        bn.nodes.push_back(std::move(node));
    }
    return bn;
}

void save_bayesnet_json(const BayesNet& bn, const std::string& path) {
    json nodes = json::array();
    for (const auto& node : bn.nodes) {
        json parents = json::array();
        for (std::size_t p : node.parents) parents.push_back(bn.nodes[p].name);
        json cpt = json::array();
        for (std::size_t r = 0; r < node.cpt.rows; ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < node.cpt.cols; ++c) row.push_back(node.cpt(r, c));
            cpt.push_back(row);
        }
        nodes.push_back({{"name", node.name},
                         {"card", node.card},
                         {"parents", parents},
                         {"cpt", cpt}});
    }
    json j;
    j["nodes"] = nodes;
    write_file(path, j.dump(2) + "\n");
}

std::vector<PriorEntry> load_prior_entries(const std::string& path,
                                           const std::vector<std::string>& names) {
    const json j = parse_json_file(path);
    if (!j.is_array()) throw InputError(path + ": prior file must be a JSON array");
    std::vector<PriorEntry> entries;
    for (const auto& e : j) {
        PriorEntry entry;
        entry.from = index_of(names, e.at("from").get<std::string>(), path);
        entry.to = index_of(names, e.at("to").get<std::string>(), path);
        entry.p = e.at("p").get<double>();
        entries.push_back(entry);
    }
    return entries;
}

std::map<std::string, std::size_t> load_cardinality_sidecar(const std::string& path) {
    const json j = parse_json_file(path);
    if (!j.is_object()) throw InputError(path + ": sidecar must be a JSON object");
    std::map<std::string, std::size_t> cards;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_number_unsigned() || it.value().get<std::size_t>() < 2) {
            throw InputError(path + ": cardinality for '" + it.key() +
                             "' must be an integer >= 2");
        }
        cards[it.key()] = it.value().get<std::size_t>();
    }
    return cards;
}

void save_cardinality_sidecar(const DiscreteDataset& ds, const std::string& path) {
    json j = json::object();
    for (std::size_t i = 0; i < ds.variable_count; ++i) {
        j[ds.variable_names[i]] = ds.cardinalities[i];
    }
    write_file(path, j.dump(2) + "\n");
}

void save_trace_csv(const TrainingTrace& trace, const std::string& path,
                    const OptimizerConfig* opt) {
    std::ostringstream out;
    if (opt) {
        out << "# adam eta=" << metric_to_string(opt->eta) << " beta1=" << metric_to_string(opt->beta1)
            << " beta2=" << metric_to_string(opt->beta2)
            << " epsilon=" << metric_to_string(opt->adam_epsilon) << " steps=" << opt->steps
            << " seed=" << opt->seed << '\n';
    }
    out << "step,recon,sparse,cycle,skeleton,total\n";
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const auto& lb = trace.steps[t].loss;
        out << t << ',' << format_double(lb.recon) << ',' << format_double(lb.sparse) << ','
            << format_double(lb.cycle) << ',' << format_double(lb.skeleton) << ','
            << format_double(lb.total) << '\n';
    }
    write_file(path, out.str());
}

void save_timings_csv(const TrainingTrace& trace, const std::string& path) {
    std::ostringstream out;
    out << "step,seconds\n";
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        out << t << ',' << format_double(trace.steps[t].seconds) << '\n';
    }
    write_file(path, out.str());
}

void save_adjacency(const Matrix& a, const StateLayout& layout,
                    const std::vector<std::string>& names, const std::string& bin_path,
                    const std::string& meta_path) {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + bin_path);
    out.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    if (!out) throw InputError("write failed: " + bin_path);

    json vars = json::array();
    for (std::size_t v = 0; v < layout.variable_count(); ++v) {
        vars.push_back({{"name", names[v]},
                        {"card", layout.card(v)},
                        {"offset", layout.offset(v)}});
    }
    json meta;
    meta["n_s"] = layout.total_states;
    meta["dtype"] = "float64";
    meta["order"] = "row-major";
    meta["byte_order"] = "little-endian";
    meta["variables"] = vars;
    write_file(meta_path, meta.dump(2) + "\n");
}

void save_projection_json(const ProjectionLog& log, const std::vector<std::string>& names,
                          const std::string& path) {
    json removed = json::array();
    for (const auto& r : log.removed) {
        json cycle = json::array();
        for (std::size_t v : r.cycle) cycle.push_back(names[v]);
        removed.push_back({{"from", names[r.edge.first]},
                           {"to", names[r.edge.second]},
                           {"mean_strength", r.mean_strength},
                           {"cycle", cycle}});
    }
    json j;
    j["dag_before_check"] = log.acyclic_before;
    j["raw_edges"] = log.raw_edge_count;
    j["edges_removed"] = log.removed.size();
    j["removed_pct"] = log.raw_edge_count == 0
                           ? 0.0
                           : 100.0 * static_cast<double>(log.removed.size()) /
                                 static_cast<double>(log.raw_edge_count);
    j["removed"] = removed;
    write_file(path, j.dump(2) + "\n");
}

void save_metrics_json(const MetricsReport& report, const std::string& path) {
    json j;
    j["shd"] = report.shd.has_value() ? json(*report.shd) : json(nullptr);
    j["precision"] = report.precision.has_value() ? json(*report.precision) : json(nullptr);
    j["recall"] = report.recall.has_value() ? json(*report.recall) : json(nullptr);
    j["f1"] = report.f1.has_value() ? json(*report.f1) : json(nullptr);
    j["unresolved_ratio"] =
        report.unresolved_ratio.has_value() ? json(*report.unresolved_ratio) : json(nullptr);
    j["tau"] = report.tau;
    j["est_edges"] = report.est_edges;
    j["truth_edges"] = report.truth_edges.has_value() ? json(*report.truth_edges) : json(nullptr);
    j["true_positives"] =
        report.true_positives.has_value() ? json(*report.true_positives) : json(nullptr);
    write_file(path, j.dump(2) + "\n");
}

std::string metric_to_string(double v) {
    return json(v).dump();
}

} // namespace pagrefine
