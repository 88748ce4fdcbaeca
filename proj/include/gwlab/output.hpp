#pragma once

// Output formats.
//
// CSV: leading '#' lines carry the program version and the resolved
// configuration as one line of compact JSON, then a header row and data
// rows. Reals are printed in shortest round-trip form.
//
// JSON: {"version": ..., "config": ..., "data": ...}.
//
// Tree profiles: one JSON object per line,
//   {"height": T, "layers": [[Z_1(0), ..., Z_N(0)], ...], "censored": false}

#include "gwlab/asymptotics.hpp"
#include "gwlab/convergence_lab.hpp"
#include "gwlab/model.hpp"
#include "gwlab/montecarlo.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace gwlab {

const char* version() noexcept;

/// Shortest text that reads back as the same double; inf and nan spelled out.
std::string format_real(double v);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);

    void add_row(std::vector<std::string> cells);
    /// Convenience for all-numeric rows.
    void add_numeric_row(const std::vector<double>& cells);

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<std::string>>& data() const noexcept { return rows_; }

    /// The '#' preamble followed by the table.
    std::string str(const nlohmann::json& resolved_config) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

nlohmann::json envelope(const nlohmann::json& resolved_config, nlohmann::json data);

nlohmann::json to_json(const ModelSpec& spec);
nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const AsymptoticConstants& c);
nlohmann::json to_json(const ConvergenceTable& t);

CsvTable to_csv(const ConvergenceTable& t);

/// Aligned plain-text rendering with the label, verdict and extrapolated limit.
std::string render_text(const ConvergenceTable& t);

/// Generic aligned rendering of a CSV table (no preamble).
std::string render_text(const CsvTable& t);

std::string tree_json_line(const TreeProfile& tree);

}  // namespace gwlab
