#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pagrefine/bayesnet.hpp"
#include "pagrefine/errors.hpp"
#include "pagrefine/io.hpp"
#include "pagrefine/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pagrefine;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_sample(const std::string& bn_path, std::size_t n, std::uint64_t seed,
               const std::string& out_dir) {
    const BayesNet bn = load_bayesnet_json(bn_path);
    const auto errors = validate(bn);
    if (!errors.empty()) {
        std::cerr << "invalid bayes net:\n";
        for (const auto& e : errors) std::cerr << "  " << e << '\n';
        return kExitInput;
    }
    const DiscreteDataset ds = forward_sample(bn, n, seed);
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    write_file((out / "data.csv").string(), dataset_to_csv(ds));
    save_dag_json(bn.dag(), (out / "truth.json").string());
    save_cardinality_sidecar(ds, (out / "cards.json").string());
    std::cout << "wrote " << ds.sample_count << " samples of " << ds.variable_count
              << " variables to " << out_dir << '\n';
    return kExitOk;
}

int cmd_oracle_pag(const std::string& truth_path, const std::string& out_path) {
    const Dag truth = load_dag_json(truth_path);
    const Pag pag = oracle_pag_from_dag(truth);
    save_pag_json(pag, out_path);
    std::cout << "wrote pag with " << pag.edges.size() << " edges to " << out_path << '\n';
    return kExitOk;
}

/// Per-seed sweep worker result.
struct SweepRow {
    std::uint64_t seed = 0;
    std::optional<RunResult> result;
    std::string error;
    bool numerical = false;
};

int cmd_refine(RunConfig cfg, const std::optional<std::pair<std::uint64_t, std::uint64_t>>& seeds) {
    if (!seeds) {
        const RunResult result = run_refinement(cfg);
        print_warnings(result.warnings);
        std::cout << summary_line(result) << '\n';
        return kExitOk;
    }

    std::vector<std::uint64_t> seed_list;
    for (std::uint64_t s = seeds->first; s <= seeds->second; ++s) seed_list.push_back(s);
    std::vector<SweepRow> rows(seed_list.size());

    std::vector<std::thread> workers;
    for (std::size_t k = 0; k < seed_list.size(); ++k) {
        workers.emplace_back([&, k] {
            RunConfig view = cfg;
            view.opt.seed = seed_list[k];
            view.output_dir =
                (fs::path(cfg.output_dir) / ("seed_" + std::to_string(seed_list[k]))).string();
            rows[k].seed = seed_list[k];
            try {
                rows[k].result = run_refinement(view);
            } catch (const NumericalError& e) {
                rows[k].error = e.what();
                rows[k].numerical = true;
            } catch (const std::exception& e) {
                rows[k].error = e.what();
            }
        });
    }
    for (auto& w : workers) w.join();

    fs::create_directories(cfg.output_dir);
    std::ostringstream summary;
    summary << "seed,shd,f1,precision,recall,unresolved_ratio,est_edges,removed_edges,seconds\n";
    int exit_code = kExitOk;
    std::vector<double> shds;
    for (const auto& row : rows) {
        if (!row.result) {
            std::cerr << "seed " << row.seed << " failed: " << row.error << '\n';
            exit_code = row.numerical ? kExitNumerical : kExitInput;
            continue;
        }
        const RunResult& r = *row.result;
        print_warnings(r.warnings);
        std::cout << "seed=" << row.seed << ' ' << summary_line(r) << '\n';
        if (r.metrics.shd) shds.push_back(static_cast<double>(*r.metrics.shd));
        summary << row.seed << ','
                << (r.metrics.shd ? std::to_string(*r.metrics.shd) : "") << ','
                << (r.metrics.f1 ? metric_to_string(*r.metrics.f1) : "") << ','
                << (r.metrics.precision ? metric_to_string(*r.metrics.precision) : "") << ','
                << (r.metrics.recall ? metric_to_string(*r.metrics.recall) : "") << ','
                << metric_to_string(r.metrics.unresolved_ratio.value_or(0.0)) << ','
                << r.metrics.est_edges << ',' << r.projection.removed.size() << ',' << r.seconds
                << '\n';
    }
    write_file((fs::path(cfg.output_dir) / "summary.csv").string(), summary.str());
    if (!shds.empty()) {
        double mean = 0.0;
        for (double s : shds) mean += s;
        mean /= static_cast<double>(shds.size());
        double var = 0.0;
        for (double s : shds) var += (s - mean) * (s - mean);
        var /= static_cast<double>(shds.size());
        std::cout << "shd over " << shds.size() << " seeds: mean=" << mean
                  << " std=" << std::sqrt(var) << '\n';
    }
    return exit_code;
}

int cmd_eval(const std::string& est_path, const std::string& truth_path, double tau,
             const std::string& out_path) {
    const Dag est = load_dag_json(est_path);
    const Dag truth = load_dag_json(truth_path);
    const Dag aligned = align_node_sets(est, truth);

    MetricsReport report;
    report.tau = tau;
    report.shd = shd(aligned, truth);
    const F1Result f1 = f1_directed(aligned, truth);
    report.precision = f1.precision;
    report.recall = f1.recall;
    report.f1 = f1.f1;
    report.true_positives = f1.true_positives;
    report.est_edges = aligned.edges.size();
    report.truth_edges = truth.edges.size();
    // No continuous adjacency here, so the unresolved ratio stays unset.

    if (!out_path.empty()) save_metrics_json(report, out_path);
    std::cout << "shd=" << *report.shd << " f1=" << metric_to_string(*report.f1)
              << " precision=" << metric_to_string(*report.precision)
              << " recall=" << metric_to_string(*report.recall) << '\n';
    return kExitOk;
}

std::optional<std::pair<std::uint64_t, std::uint64_t>> parse_seed_range(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        throw InputError("--seeds expects a range like 1..5, got '" + text + "'");
    }
    try {
        const std::uint64_t lo = std::stoull(text.substr(0, dots));
        const std::uint64_t hi = std::stoull(text.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument(text);
        return std::make_pair(lo, hi);
    } catch (const std::exception&) {
        throw InputError("--seeds expects a range like 1..5, got '" + text + "'");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PAG-to-DAG refinement by differentiable optimization over state-expanded adjacencies"};
    app.require_subcommand(1);

    // sample
    auto* sample = app.add_subcommand("sample", "Sample observational data from a Bayesian network");
    std::string sample_bn, sample_out;
    std::size_t sample_n = 1000;
    std::uint64_t sample_seed = 1;
    sample->add_option("--bn", sample_bn, "Bayesian network JSON")->required();
    sample->add_option("--n", sample_n, "Number of samples")->required();
    sample->add_option("--seed", sample_seed, "Random seed");
    sample->add_option("--out", sample_out, "Output directory")->required();

    // oracle-pag
    auto* oracle = app.add_subcommand("oracle-pag", "Build the oracle PAG of a ground-truth DAG");
    std::string oracle_truth, oracle_out;
    oracle->add_option("--truth", oracle_truth, "Ground-truth DAG JSON")->required();
    oracle->add_option("--out", oracle_out, "Output PAG JSON")->required();

    // refine
    auto* refine_cmd = app.add_subcommand("refine", "Refine a PAG into a DAG");
    std::string refine_config, seeds_text;
    refine_cmd->add_option("--config", refine_config, "Config file (key = value lines)");
    refine_cmd->add_option("--seeds", seeds_text, "Seed sweep range, e.g. 1..5");
    const std::vector<std::string> keys = {
        "data",  "pag",   "truth", "prior_file", "cards", "out",     "lambda1",          "lambda2",
        "lambda3", "tau", "eps_norm", "eta",     "steps", "batch",   "seed",             "beta1",
        "beta2", "adam_eps", "prior", "prior_p", "recon", "penalty", "cycle_projection"};
    auto holders = std::make_shared<std::vector<std::string>>(keys.size());
    for (std::size_t k = 0; k < keys.size(); ++k) {
        refine_cmd->add_option("--" + keys[k], (*holders)[k], "Override config key " + keys[k]);
    }

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Compare an estimated DAG against a ground truth");
    std::string eval_est, eval_truth, eval_out;
    double eval_tau = 0.1;
    eval_cmd->add_option("--est", eval_est, "Estimated DAG JSON")->required();
    eval_cmd->add_option("--truth", eval_truth, "Ground-truth DAG JSON")->required();
    eval_cmd->add_option("--tau", eval_tau, "Extraction threshold recorded in the report");
    eval_cmd->add_option("--out", eval_out, "Write the metrics report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) {
            return cmd_sample(sample_bn, sample_n, sample_seed, sample_out);
        }
        if (oracle->parsed()) {
            return cmd_oracle_pag(oracle_truth, oracle_out);
        }
        if (refine_cmd->parsed()) {
            RunConfig cfg;
            if (!refine_config.empty()) cfg = parse_config_file(refine_config);
            for (std::size_t k = 0; k < keys.size(); ++k) {
                if (!(*holders)[k].empty()) apply_config_line(cfg, keys[k], (*holders)[k]);
            }
            return cmd_refine(std::move(cfg), parse_seed_range(seeds_text));
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_est, eval_truth, eval_tau, eval_out);
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitOk;
}
