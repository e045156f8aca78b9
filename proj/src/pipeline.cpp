#include "pagrefine/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <sstream>

#include "pagrefine/errors.hpp"
#include "pagrefine/io.hpp"
#include "pagrefine/kernels.hpp"

namespace pagrefine {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw InputError("config: cannot parse '" + value + "' as a number for key '" + key + "'");
    }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size() || v < 0) throw std::invalid_argument(value);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw InputError("config: cannot parse '" + value + "' as a count for key '" + key + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw InputError("config: cannot parse '" + value + "' as a boolean for key '" + key + "'");
}

/// Reindexes the PAG into the dataset's variable order.
Pag align_pag_to_dataset(const Pag& pag, const DiscreteDataset& ds) {
    if (pag.node_count != ds.variable_count) {
        throw InputError("pag has " + std::to_string(pag.node_count) + " nodes but data has " +
                         std::to_string(ds.variable_count) + " variables");
    }
    std::map<std::string, std::size_t> col_of;
    for (std::size_t i = 0; i < ds.variable_count; ++i) col_of[ds.variable_names[i]] = i;
    std::vector<std::size_t> remap(pag.node_count);
    for (std::size_t i = 0; i < pag.node_count; ++i) {
        auto it = col_of.find(pag.names[i]);
        if (it == col_of.end()) {
            throw InputError("pag node '" + pag.names[i] + "' not found in data columns");
        }
        remap[i] = it->second;
    }
    Pag out(ds.variable_count);
    out.names = ds.variable_names;
    for (const auto& e : pag.edges) {
        PagEdge ne;
        std::size_t a = remap[e.a], b = remap[e.b];
        Mark ma = e.mark_a, mb = e.mark_b;
        if (a > b) {
            std::swap(a, b);
            std::swap(ma, mb);
        }
        ne.a = a;
        ne.b = b;
        ne.mark_a = ma;
        ne.mark_b = mb;
        out.edges.push_back(ne);
    }
    std::sort(out.edges.begin(), out.edges.end(), [](const PagEdge& x, const PagEdge& y) {
        return std::make_pair(x.a, x.b) < std::make_pair(y.a, y.b);
    });
    return out;
}

} // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "data") {
        cfg.data_path = value;
    } else if (key == "pag") {
        cfg.pag_path = value;
    } else if (key == "truth") {
        cfg.truth_path = value;
    } else if (key == "prior_file") {
        cfg.prior_path = value;
    } else if (key == "cards") {
        cfg.cards_path = value;
    } else if (key == "out") {
        cfg.output_dir = value;
    } else if (key == "lambda1") {
        cfg.hp.lambda_sparse = parse_double(key, value);
    } else if (key == "lambda2") {
        cfg.hp.lambda_cycle = parse_double(key, value);
    } else if (key == "lambda3") {
        cfg.hp.lambda_skeleton = parse_double(key, value);
    } else if (key == "tau") {
        cfg.hp.tau = parse_double(key, value);
    } else if (key == "eps_norm") {
        cfg.hp.epsilon_norm = parse_double(key, value);
    } else if (key == "eta") {
        cfg.opt.eta = parse_double(key, value);
    } else if (key == "steps") {
        cfg.opt.steps = parse_size(key, value);
    } else if (key == "batch") {
        if (value == "auto") {
            cfg.opt.batch_size.reset();
        } else if (value == "full") {
            cfg.opt.batch_size = 0;
        } else {
            cfg.opt.batch_size = parse_size(key, value);
        }
    } else if (key == "seed") {
        cfg.opt.seed = parse_size(key, value);
    } else if (key == "beta1") {
        cfg.opt.beta1 = parse_double(key, value);
    } else if (key == "beta2") {
        cfg.opt.beta2 = parse_double(key, value);
    } else if (key == "adam_eps") {
        cfg.opt.adam_epsilon = parse_double(key, value);
    } else if (key == "prior") {
        if (value == "random") {
            cfg.prior_mode = PriorMode::Random;
        } else if (value == "file") {
            cfg.prior_mode = PriorMode::File;
        } else if (value == "none") {
            cfg.prior_mode = PriorMode::None;
        } else {
            throw InputError("config: prior must be random|file|none, got '" + value + "'");
        }
    } else if (key == "prior_p") {
        cfg.prior_p = parse_double(key, value);
    } else if (key == "cycle_projection") {
        cfg.cycle_projection_enabled = parse_bool(key, value);
    } else if (key == "penalty") {
        if (value == "invfreq") {
            cfg.penalty_mode = PenaltyMode::InverseFrequency;
        } else if (value == "ones") {
            cfg.penalty_mode = PenaltyMode::Ones;
        } else {
            throw InputError("config: penalty must be invfreq|ones, got '" + value + "'");
        }
    } else if (key == "recon") {
        if (value == "all") {
            cfg.recon_scope = ReconScope::All;
        } else if (value == "unresolved") {
            cfg.recon_scope = ReconScope::Unresolved;
        } else {
            throw InputError("config: recon must be all|unresolved, got '" + value + "'");
        }
    } else {
        throw InputError("config: unknown key '" + key + "'");
    }
}

RunConfig parse_config_file(const std::string& path) {
    const std::string text = read_file(path);
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw InputError(path + ": line " + std::to_string(line_no) +
                             " is not of the form key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw InputError(path + ": line " + std::to_string(line_no) + " has an empty key or value");
        }
        apply_config_line(cfg, key, value);
    }
    return cfg;
}

Dag prior_only_orientation(const Pag& pag, const PriorSpec& prior) {
    const AdmissibilityMatrix adm = pag_admissibility(pag);
    Dag out(pag.node_count);
    out.names = pag.names;
    for (std::size_t i = 0; i < pag.node_count; ++i) {
        for (std::size_t j = i + 1; j < pag.node_count; ++j) {
            const bool fwd = adm.allowed(i, j), rev = adm.allowed(j, i);
            if (fwd && !rev) out.edges.insert({i, j});
            if (rev && !fwd) out.edges.insert({j, i});
        }
    }
    for (const auto& e : prior.entries) {
        out.edges.insert({e.from, e.to});
    }
    return out;
}

RunResult run_refinement_in_memory(const PipelineInputs& in, const RunConfig& cfg,
                                   const PriorSpec* prior_override) {
    const auto t_start = std::chrono::steady_clock::now();
    RunResult result;

    validate_hyperparameters(cfg.hp);
    validate_optimizer_config(cfg.opt);
    const DiscreteDataset& ds = *in.dataset;
    validate_dataset(ds);

    const Pag pag = align_pag_to_dataset(*in.pag, ds);
    const StateLayout layout = build_layout(ds);
    const ExpandedData expanded = one_hot_expand(ds, layout);
    const StateFrequencies freqs = state_frequencies(expanded, layout, &result.warnings);

    const AdmissibilityMatrix adm = pag_admissibility(pag, &result.warnings);
    const StateMask mask = lift_to_state_mask(adm, layout);
    const auto blocks = admissible_blocks(adm);
    const auto pairs = unresolved_pairs(adm);
    const PenaltyWeights penalty = build_penalty_weights(freqs, layout, blocks, cfg.penalty_mode);

    ObjectiveContext ctx = ObjectiveContext::make(layout, mask, penalty, adm, cfg.hp);
    if (cfg.recon_scope == ReconScope::Unresolved) {
        std::vector<std::uint8_t> touched(ds.variable_count, 0);
        for (const auto& [i, j] : pairs) touched[i] = touched[j] = 1;
        ctx.recon_vars.clear();
        for (std::size_t v = 0; v < ds.variable_count; ++v) {
            if (touched[v]) ctx.recon_vars.push_back(v);
        }
        if (ctx.recon_vars.empty()) {
            throw InputError("recon = unresolved, but the pag leaves no pair unresolved");
        }
    }

    PriorSpec prior;
    if (prior_override) {
        prior = *prior_override;
    } else {
        switch (cfg.prior_mode) {
            case PriorMode::Random:
                prior = random_prior(pairs, cfg.opt.seed, cfg.prior_p);
                break;
            case PriorMode::File: {
                auto entries = load_prior_entries(cfg.prior_path, ds.variable_names);
                prior = validate_prior(std::move(entries), adm, ds.variable_names);
                break;
            }
            case PriorMode::None:
                prior = PriorSpec{};
                break;
        }
    }

    RefineOutput refined = refine(expanded.x, ctx, prior, cfg.opt);
    result.trace = std::move(refined.trace);

    Matrix adjacency;
    kernels::sigmoid_masked(refined.w, mask.s, adjacency, nullptr);

    const EdgeStrengths strengths = block_strengths(adjacency, layout, adm);
    result.metrics.unresolved_ratio =
        unresolved_ratio(strengths, pairs, cfg.hp.tau, &result.warnings);
    result.metrics.tau = cfg.hp.tau;

    std::set<Edge> raw = threshold_edges(strengths, cfg.hp.tau);
    if (raw.empty()) {
        result.warnings.push_back("no edge strength exceeds tau = " +
                                  std::to_string(cfg.hp.tau) + "; extracted graph is empty");
    }
    if (cfg.cycle_projection_enabled) {
        auto [dag, log] = cycle_projection(ds.variable_count, std::move(raw), strengths.block_mean);
        result.dag = std::move(dag);
        result.projection = std::move(log);
    } else {
        result.projection.raw_edge_count = raw.size();
        result.projection.acyclic_before = is_acyclic(ds.variable_count, raw).acyclic;
        if (!result.projection.acyclic_before) {
            result.warnings.push_back("cycle projection disabled and raw graph is cyclic");
        }
        result.dag = Dag(ds.variable_count, std::move(raw));
    }
    result.dag.names = ds.variable_names;
    result.metrics.est_edges = result.dag.edges.size();

    if (in.truth) {
        const Dag aligned_truth = align_node_sets(*in.truth, result.dag);
        result.metrics.shd = shd(result.dag, aligned_truth);
        const F1Result f1 = f1_directed(result.dag, aligned_truth);
        result.metrics.precision = f1.precision;
        result.metrics.recall = f1.recall;
        result.metrics.f1 = f1.f1;
        result.metrics.true_positives = f1.true_positives;
        result.metrics.truth_edges = aligned_truth.edges.size();
    }

    result.adjacency = std::move(adjacency);
    result.layout = layout;
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

RunResult run_refinement(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw InputError("config: missing data path");
    if (cfg.pag_path.empty()) throw InputError("config: missing pag path");
    if (cfg.output_dir.empty()) throw InputError("config: missing output directory");
    if (cfg.prior_mode == PriorMode::File && cfg.prior_path.empty()) {
        throw InputError("config: prior = file requires prior_file");
    }

    std::map<std::string, std::size_t> cards;
    const std::map<std::string, std::size_t>* cards_ptr = nullptr;
    if (!cfg.cards_path.empty()) {
        cards = load_cardinality_sidecar(cfg.cards_path);
        cards_ptr = &cards;
    }
    const DiscreteDataset ds = load_csv(cfg.data_path, cards_ptr);
    const Pag pag = load_pag_json(cfg.pag_path);
    std::optional<Dag> truth;
    if (!cfg.truth_path.empty()) truth = load_dag_json(cfg.truth_path);

    PipelineInputs in;
    in.dataset = &ds;
    in.pag = &pag;
    in.truth = truth ? &*truth : nullptr;

    RunResult result = run_refinement_in_memory(in, cfg);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const fs::path out(cfg.output_dir);
    save_dag_json(result.dag, (out / "dag.json").string());
    save_adjacency(result.adjacency, result.layout, ds.variable_names,
                   (out / "adjacency.bin").string(), (out / "adjacency.meta.json").string());
    save_trace_csv(result.trace, (out / "trace.csv").string(), &cfg.opt);
    save_timings_csv(result.trace, (out / "timings.csv").string());
    save_projection_json(result.projection, ds.variable_names, (out / "projection.json").string());
    save_metrics_json(result.metrics, (out / "metrics.json").string());

    std::ostringstream summary;
    summary << "seed,shd,f1,precision,recall,unresolved_ratio,est_edges,removed_edges,seconds\n";
    summary << cfg.opt.seed << ','
            << (result.metrics.shd ? std::to_string(*result.metrics.shd) : "") << ','
            << (result.metrics.f1 ? metric_to_string(*result.metrics.f1) : "") << ','
            << (result.metrics.precision ? metric_to_string(*result.metrics.precision) : "") << ','
            << (result.metrics.recall ? metric_to_string(*result.metrics.recall) : "") << ','
            << metric_to_string(result.metrics.unresolved_ratio.value_or(0.0)) << ','
            << result.metrics.est_edges << ',' << result.projection.removed.size() << ','
            << result.seconds << '\n';
    write_file((out / "summary.csv").string(), summary.str());

    return result;
}

std::string summary_line(const RunResult& result) {
    std::ostringstream out;
    out << "shd=" << (result.metrics.shd ? std::to_string(*result.metrics.shd) : "-");
    out << " f1=" << (result.metrics.f1 ? metric_to_string(*result.metrics.f1) : "-");
    out << " unresolved_ratio="
        << metric_to_string(result.metrics.unresolved_ratio.value_or(0.0));
    out << " seconds=" << result.seconds;
    return out.str();
}

} // namespace pagrefine
