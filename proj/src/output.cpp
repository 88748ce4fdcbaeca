#include "gwlab/output.hpp"

#include "gwlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace gwlab {

using nlohmann::json;

const char* version() noexcept { return GWLAB_VERSION; }

std::string format_real(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') {
            out += '"';
        }
        out += ch;
    }
    return out + "\"";
}

// JSON cannot hold inf/nan; those become strings.
json real_json(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return format_real(v);
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) {
        throw StructuralError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(columns_.size()));
    }
    rows_.push_back(std::move(cells));
}

void CsvTable::add_numeric_row(const std::vector<double>& cells) {
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (double v : cells) {
        text.push_back(format_real(v));
    }
    add_row(std::move(text));
}

std::string CsvTable::str(const json& resolved_config) const {
    std::ostringstream os;
    os << "# gwlab " << version() << "\n";
    os << "# config " << resolved_config.dump() << "\n";
    for (std::size_t k = 0; k < columns_.size(); ++k) {
        os << (k ? "," : "") << csv_cell(columns_[k]);
    }
    os << "\n";
    for (const auto& row : rows_) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            os << (k ? "," : "") << csv_cell(row[k]);
        }
        os << "\n";
    }
    return os.str();
}

json envelope(const json& resolved_config, json data) {
    return json{{"version", version()}, {"config", resolved_config}, {"data", std::move(data)}};
}

json to_json(const ModelSpec& spec) {
    json types = json::array();
    for (int i = 1; i <= spec.types(); ++i) {
        json comps = json::array();
        for (const auto& c : spec.components(i)) {
            json e{{"target", c.target}, {"kind", to_string(c.law.kind())}};
            switch (c.law.kind()) {
                case LawKind::poisson:
                case LawKind::geometric:
                    e["mean"] = c.law.parameter();
                    break;
                case LawKind::bernoulli:
                    e["p"] = c.law.parameter();
                    break;
                case LawKind::binomial:
                    e["trials"] = c.law.trials();
                    e["p"] = c.law.parameter();
                    break;
                case LawKind::deterministic:
                    e["k"] = c.law.trials();
                    break;
            }
            comps.push_back(std::move(e));
        }
        types.push_back(json{{"type", i}, {"components", std::move(comps)}});
    }
    return json{{"types", std::move(types)}};
}

json to_json(const ValidationReport& report) {
    json f = json::array();
    for (const auto& x : report.findings) {
        f.push_back(json{{"check", x.check},
                         {"type", x.type_index},
                         {"value", real_json(x.value)},
                         {"passed", x.passed},
                         {"detail", x.detail}});
    }
    return json{{"passed", report.all_passed()}, {"findings", std::move(f)}};
}

json to_json(const AsymptoticConstants& c) {
    const int n = c.types();
    json gamma = json::array(), b = json::array(), m_next = json::array(), cc = json::array(), c1 = json::array(),
         d = json::array(), g = json::array(), a = json::array();
    for (int i = 0; i <= n; ++i) {
        gamma.push_back(c.gamma(i));
    }
    for (int i = 0; i < n; ++i) {
        d.push_back(c.D(i));
    }
    for (int i = 1; i <= n; ++i) {
        b.push_back(c.b(i));
        cc.push_back(c.c(i));
        c1.push_back(c.c1(i));
        g.push_back(c.g(i));
        if (i < n) {
            m_next.push_back(c.m_next(i));
        }
        json row = json::array();
        for (int j = 1; j <= n; ++j) {
            row.push_back(c.a(i, j));
        }
        a.push_back(std::move(row));
    }
    return json{{"types", n},      {"gamma", gamma}, {"b", b}, {"m_next", m_next}, {"a", a},
                {"c", cc},         {"c1", c1},       {"D", d}, {"g", g}};
}

json to_json(const ConvergenceTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        rows.push_back(json{{"n", r.n},
                            {"m", r.m},
                            {"exact", real_json(r.exact)},
                            {"predicted", real_json(r.predicted)},
                            {"ratio", real_json(r.ratio)},
                            {"exact_error", real_json(r.exact_error)}});
    }
    return json{{"kind", to_string(t.kind)},
                {"label", t.label},
                {"rows", std::move(rows)},
                {"extrapolated", real_json(t.extrapolated)},
                {"verdict", to_string(t.verdict)}};
}

CsvTable to_csv(const ConvergenceTable& t) {
    CsvTable csv({t.kind == TableKind::Tot1 ? "lambda" : "n", "m", "exact", "predicted", "ratio", "exact_error"});
    for (const auto& r : t.rows) {
        csv.add_row({format_real(r.n), std::to_string(r.m), format_real(r.exact), format_real(r.predicted),
                     format_real(r.ratio), format_real(r.exact_error)});
    }
    return csv;
}

namespace {

std::string aligned(const std::vector<std::string>& head, const std::vector<std::vector<std::string>>& body) {
    std::vector<std::size_t> w(head.size());
    for (std::size_t k = 0; k < head.size(); ++k) {
        w[k] = head[k].size();
        for (const auto& r : body) {
            w[k] = std::max(w[k], r[k].size());
        }
    }
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            os << (k ? "  " : "") << std::string(w[k] - cells[k].size(), ' ') << cells[k];
        }
        os << "\n";
    };
    line(head);
    for (const auto& r : body) {
        line(r);
    }
    return os.str();
}

std::string short_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8g", v);
    return buf;
}

}  // namespace

std::string render_text(const ConvergenceTable& t) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : t.rows) {
        body.push_back({short_real(r.n), std::to_string(r.m), short_real(r.exact), short_real(r.predicted),
                        short_real(r.ratio), short_real(r.exact_error)});
    }
    std::ostringstream os;
    os << t.label << "\n";
    os << aligned({t.kind == TableKind::Tot1 ? "lambda" : "n", "m", "exact", "predicted", "ratio", "error"}, body);
    os << "extrapolated ratio " << short_real(t.extrapolated) << ", verdict " << to_string(t.verdict) << "\n";
    return os.str();
}

std::string render_text(const CsvTable& t) {
    // Full precision stays in the CSV; the text view shortens long reals.
    std::vector<std::vector<std::string>> body = t.data();
    for (auto& row : body) {
        for (auto& c : row) {
            double v = 0;
            const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec == std::errc() && res.ptr == c.data() + c.size() && c.find_first_of(".eE") != std::string::npos) {
                c = short_real(v);
            }
        }
    }
    return aligned(t.columns(), body);
}

std::string tree_json_line(const TreeProfile& tree) {
    return json{{"height", tree.height}, {"layers", tree.layers}, {"censored", tree.censored}}.dump();
}

}  // namespace gwlab
