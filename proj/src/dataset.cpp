#include "pagrefine/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "pagrefine/errors.hpp"

namespace pagrefine {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

} // namespace

std::size_t StateLayout::variable_of(std::size_t s) const {
    for (std::size_t v = 0; v + 1 < offsets.size(); ++v) {
        if (s < offsets[v + 1]) return v;
    }
    return offsets.size() - 1;
}

DiscreteDataset parse_csv(const std::string& text, const std::string& origin,
                          const std::map<std::string, std::size_t>* cardinality_override) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError(origin + ": empty file");
    }
    DiscreteDataset ds;
    ds.variable_names = split_line(line);
    ds.variable_count = ds.variable_names.size();
    if (ds.variable_count == 0 || ds.variable_names[0].empty()) {
        throw InputError(origin + ": missing header row");
    }
    {
        std::set<std::string> seen;
        for (const auto& name : ds.variable_names) {
            if (name.empty()) throw InputError(origin + ": empty variable name in header");
            if (!seen.insert(name).second) {
                throw InputError(origin + ": duplicate variable name '" + name + "'");
            }
        }
    }

    std::vector<std::int32_t> max_code(ds.variable_count, -1);
    std::vector<std::set<std::int32_t>> distinct(ds.variable_count);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != ds.variable_count) {
            throw InputError(origin + ": line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(ds.variable_count));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& cell = cells[i];
            if (cell.empty()) {
                throw InputError(origin + ": missing value at line " + std::to_string(line_no) +
                                 ", column '" + ds.variable_names[i] + "'");
            }
            std::int32_t value = 0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || value < 0) {
                throw InputError(origin + ": cannot parse '" + cell +
                                 "' as a non-negative integer at line " +
                                 std::to_string(line_no) + ", column '" +
                                 ds.variable_names[i] + "'");
            }
            ds.rows.push_back(value);
            max_code[i] = std::max(max_code[i], value);
            distinct[i].insert(value);
        }
    }
    ds.sample_count = ds.rows.size() / ds.variable_count;
    if (ds.sample_count == 0) {
        throw InputError(origin + ": no data rows");
    }

    ds.cardinalities.resize(ds.variable_count);
    for (std::size_t i = 0; i < ds.variable_count; ++i) {
        if (distinct[i].size() < 2) {
            throw InputError(origin + ": constant variable '" + ds.variable_names[i] + "'");
        }
        std::size_t card = static_cast<std::size_t>(max_code[i]) + 1;
        if (cardinality_override) {
            auto it = cardinality_override->find(ds.variable_names[i]);
            if (it != cardinality_override->end()) {
                if (it->second < card) {
                    throw InputError(origin + ": cardinality override " +
                                     std::to_string(it->second) + " for '" +
                                     ds.variable_names[i] + "' is below observed max code " +
                                     std::to_string(max_code[i]));
                }
                card = it->second;
            }
        }
        ds.cardinalities[i] = card;
    }
    validate_dataset(ds);
    return ds;
}

DiscreteDataset load_csv(const std::string& path,
                         const std::map<std::string, std::size_t>* cardinality_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open data file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path, cardinality_override);
}

void validate_dataset(const DiscreteDataset& ds) {
    if (ds.variable_count == 0) throw InputError("dataset has no variables");
    if (ds.sample_count == 0) throw InputError("dataset has no rows");
    if (ds.variable_names.size() != ds.variable_count ||
        ds.cardinalities.size() != ds.variable_count ||
        ds.rows.size() != ds.sample_count * ds.variable_count) {
        throw InputError("dataset fields are inconsistent");
    }
    for (std::size_t i = 0; i < ds.variable_count; ++i) {
        if (ds.cardinalities[i] < 2) {
            throw InputError("variable '" + ds.variable_names[i] + "' has cardinality " +
                             std::to_string(ds.cardinalities[i]) + ", need at least 2");
        }
    }
    for (std::size_t n = 0; n < ds.sample_count; ++n) {
        for (std::size_t i = 0; i < ds.variable_count; ++i) {
            const auto c = ds.code(n, i);
            if (c < 0 || static_cast<std::size_t>(c) >= ds.cardinalities[i]) {
                throw InputError("code " + std::to_string(c) + " out of range for variable '" +
                                 ds.variable_names[i] + "' at row " + std::to_string(n));
            }
        }
    }
}

StateLayout build_layout(const DiscreteDataset& ds) {
    StateLayout layout;
    layout.cardinalities = ds.cardinalities;
    layout.offsets.resize(ds.variable_count);
    std::size_t off = 0;
    for (std::size_t i = 0; i < ds.variable_count; ++i) {
        layout.offsets[i] = off;
        off += ds.cardinalities[i];
    }
    layout.total_states = off;
    return layout;
}

ExpandedData one_hot_expand(const DiscreteDataset& ds, const StateLayout& layout) {
    ExpandedData out;
    out.x = Matrix(ds.sample_count, layout.total_states, 0.0);
    for (std::size_t n = 0; n < ds.sample_count; ++n) {
        double* row = out.x.row(n);
        for (std::size_t i = 0; i < ds.variable_count; ++i) {
            row[layout.offset(i) + static_cast<std::size_t>(ds.code(n, i))] = 1.0;
        }
    }
    return out;
}

StateFrequencies state_frequencies(const ExpandedData& x, const StateLayout& layout,
                                   std::vector<std::string>* warnings) {
    const std::size_t n = x.x.rows;
    StateFrequencies out;
    out.freq.assign(layout.total_states, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = x.x.row(r);
        for (std::size_t s = 0; s < layout.total_states; ++s) out.freq[s] += row[s];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& f : out.freq) f *= inv_n;

    for (std::size_t v = 0; v < layout.variable_count(); ++v) {
        const std::size_t off = layout.offset(v);
        const std::size_t card = layout.card(v);
        std::size_t zeros = 0;
        for (std::size_t s = 0; s < card; ++s) {
            if (out.freq[off + s] == 0.0) ++zeros;
        }
        if (zeros == 0) continue;
        double floor = 1.0 / (2.0 * static_cast<double>(n));
        // A very small sample under a forced cardinality could make the
        // floored mass exceed the block; cap it at half the block.
        floor = std::min(floor, 0.5 / static_cast<double>(zeros));
        const double scale = 1.0 - static_cast<double>(zeros) * floor;
        for (std::size_t s = 0; s < card; ++s) {
            double& f = out.freq[off + s];
            f = (f == 0.0) ? floor : f * scale;
        }
        if (warnings) {
            warnings->push_back("variable block " + std::to_string(v) + " has " +
                                std::to_string(zeros) +
                                " unobserved state(s); frequencies floored to " +
                                std::to_string(floor));
        }
    }
    return out;
}

std::string dataset_to_csv(const DiscreteDataset& ds) {
    std::ostringstream out;
    for (std::size_t i = 0; i < ds.variable_count; ++i) {
        if (i) out << ',';
        out << ds.variable_names[i];
    }
    out << '\n';
    for (std::size_t n = 0; n < ds.sample_count; ++n) {
        for (std::size_t i = 0; i < ds.variable_count; ++i) {
            if (i) out << ',';
            out << ds.code(n, i);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace pagrefine
