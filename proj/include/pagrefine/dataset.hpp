#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pagrefine/matrix.hpp"

namespace pagrefine {

/// Discrete tabular data: integer state codes, one column per variable.
struct DiscreteDataset {
    std::vector<std::string> variable_names;
    std::vector<std::size_t> cardinalities; // each >= 2
    std::vector<std::int32_t> rows;         // row-major N x M, code in [0, card)

    std::size_t sample_count = 0;   // N
    std::size_t variable_count = 0; // M

    std::int32_t code(std::size_t n, std::size_t i) const {
        return rows[n * variable_count + i];
    }
};

/// Maps each variable to its contiguous block of state indices inside the
/// expanded dimension.
struct StateLayout {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> cardinalities;
    std::size_t total_states = 0;

    std::size_t variable_count() const { return offsets.size(); }
    std::size_t offset(std::size_t v) const { return offsets[v]; }
    std::size_t card(std::size_t v) const { return cardinalities[v]; }
    /// Variable owning expanded index s.
    std::size_t variable_of(std::size_t s) const;
};

/// One-hot expanded data: N x total_states, each variable block sums to 1
/// per row.
struct ExpandedData {
    Matrix x;
};

/// Empirical marginal frequency of every state, floored away from zero.
struct StateFrequencies {
    std::vector<double> freq; // length total_states, entries in (0, 1]
};

/// Loads a dataset from CSV: header row of names, body of integer codes.
/// Cardinalities are inferred as 1 + max code per column unless the
/// optional sidecar (variable name -> cardinality) raises them.
DiscreteDataset load_csv(const std::string& path,
                         const std::map<std::string, std::size_t>* cardinality_override = nullptr);

/// Parses CSV text directly; load_csv is a thin file wrapper around this.
DiscreteDataset parse_csv(const std::string& text, const std::string& origin,
                          const std::map<std::string, std::size_t>* cardinality_override = nullptr);

void validate_dataset(const DiscreteDataset& ds);

StateLayout build_layout(const DiscreteDataset& ds);

ExpandedData one_hot_expand(const DiscreteDataset& ds, const StateLayout& layout);

/// Column means of the expanded data. States never observed are clamped to
/// 1/(2N), with the remaining block mass rescaled so each block still sums
/// to 1; a warning is recorded per clamped block.
StateFrequencies state_frequencies(const ExpandedData& x, const StateLayout& layout,
                                   std::vector<std::string>* warnings = nullptr);

/// Writes a dataset back to CSV (header + integer codes).
std::string dataset_to_csv(const DiscreteDataset& ds);

} // namespace pagrefine
