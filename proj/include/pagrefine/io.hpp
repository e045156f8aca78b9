#pragma once

#include <map>
#include <string>

#include "pagrefine/bayesnet.hpp"
#include "pagrefine/dataset.hpp"
#include "pagrefine/extraction.hpp"
#include "pagrefine/graph.hpp"
#include "pagrefine/metrics.hpp"
#include "pagrefine/optimizer.hpp"

namespace pagrefine {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Graph formats.
// PAG: {"nodes": [names], "edges": [{"a","b","mark_a","mark_b"}]}
// DAG: {"nodes": [names], "edges": [{"from","to"}]}
Pag load_pag_json(const std::string& path);
void save_pag_json(const Pag& pag, const std::string& path);
Dag load_dag_json(const std::string& path);
void save_dag_json(const Dag& dag, const std::string& path);

// BN: {"nodes": [{"name","card","parents":[names],"cpt":[[p...],...]}]}
// CPT rows ordered by mixed-radix parent configuration, first parent most
// significant.
BayesNet load_bayesnet_json(const std::string& path);
void save_bayesnet_json(const BayesNet& bn, const std::string& path);

// Prior file: [{"from","to","p"}, ...]; validated against admissibility.
std::vector<PriorEntry> load_prior_entries(const std::string& path,
                                           const std::vector<std::string>& names);

// Cardinality sidecar: {"name": card, ...}
std::map<std::string, std::size_t> load_cardinality_sidecar(const std::string& path);
void save_cardinality_sidecar(const DiscreteDataset& ds, const std::string& path);

/// Loss columns only; per-step wall times go to a separate file so reruns
/// are byte-identical. When given, the optimizer settings are recorded in
/// a leading comment line.
void save_trace_csv(const TrainingTrace& trace, const std::string& path,
                    const OptimizerConfig* opt = nullptr);
void save_timings_csv(const TrainingTrace& trace, const std::string& path);

/// Row-major float64 dump of the continuous adjacency plus a JSON sidecar
/// describing the layout.
void save_adjacency(const Matrix& a, const StateLayout& layout,
                    const std::vector<std::string>& names, const std::string& bin_path,
                    const std::string& meta_path);

void save_projection_json(const ProjectionLog& log, const std::vector<std::string>& names,
                          const std::string& path);

void save_metrics_json(const MetricsReport& report, const std::string& path);

/// Serialized form of a metric value, reused by the summary line so the
/// printed numbers match the file exactly.
std::string metric_to_string(double v);

} // namespace pagrefine
