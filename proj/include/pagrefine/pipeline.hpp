#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pagrefine/dataset.hpp"
#include "pagrefine/extraction.hpp"
#include "pagrefine/graph.hpp"
#include "pagrefine/metrics.hpp"
#include "pagrefine/objective.hpp"
#include "pagrefine/optimizer.hpp"

namespace pagrefine {

enum class PriorMode { Random, File, None };
enum class ReconScope { All, Unresolved };

/// One refinement experiment: inputs, hyperparameters, flags. Defaults
/// follow the reference configuration (lambda = 0.01/5/0.1, tau = 0.1,
/// eta = 0.01, 140 steps).
struct RunConfig {
    std::string data_path;
    std::string pag_path;
    std::string truth_path;   // optional
    std::string prior_path;   // required when prior_mode == File
    std::string cards_path;   // optional cardinality sidecar
    std::string output_dir;

    Hyperparameters hp;
    OptimizerConfig opt;
    PriorMode prior_mode = PriorMode::Random;
    double prior_p = 0.9;
    bool cycle_projection_enabled = true;
    PenaltyMode penalty_mode = PenaltyMode::InverseFrequency;
    ReconScope recon_scope = ReconScope::All;
};

/// Flat key = value file, '#' comments. Unknown keys are errors.
RunConfig parse_config_file(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

struct RunResult {
    Dag dag;
    ProjectionLog projection;
    MetricsReport metrics;
    TrainingTrace trace;
    Matrix adjacency;   // sigmoid(W) .* S at the final step
    StateLayout layout;
    double seconds = 0.0;
    std::vector<std::string> warnings;
};

/// Loads everything, refines, extracts, scores, and writes the output
/// directory: dag.json, adjacency.bin, adjacency.meta.json, trace.csv,
/// timings.csv, projection.json, metrics.json, summary.csv.
RunResult run_refinement(const RunConfig& cfg);

/// In-memory variant used by tests and the acceptance suite: everything
/// already loaded, nothing written.
struct PipelineInputs {
    const DiscreteDataset* dataset = nullptr;
    const Pag* pag = nullptr;
    const Dag* truth = nullptr; // may be null
};

RunResult run_refinement_in_memory(const PipelineInputs& in, const RunConfig& cfg,
                                   const PriorSpec* prior_override = nullptr);

/// Baseline that orients every unresolved pair by its prior favored
/// direction without optimization; resolved directions come straight from
/// the admissibility matrix. May contain cycles.
Dag prior_only_orientation(const Pag& pag, const PriorSpec& prior);

std::string summary_line(const RunResult& result);

} // namespace pagrefine
