#include "gwlab/cli.hpp"

#include "gwlab/acceptance.hpp"
#include "gwlab/errors.hpp"
#include "gwlab/model_io.hpp"
#include "gwlab/montecarlo.hpp"
#include "gwlab/output.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <toml.hpp>

namespace gwlab {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw StructuralError(where + ": " + what);
}

/// Strict reader over one config table: every key must be consumed.
class Section {
public:
    Section(const toml::table* tbl, std::string name) : tbl_(tbl), name_(std::move(name)) {}

    bool present() const { return tbl_ != nullptr; }
    bool has(const char* key) const { return tbl_ && tbl_->contains(key); }

    double real(const char* key, double def) {
        const toml::node* n = take(key);
        return n ? as_real(*n, where(key)) : def;
    }
    std::int64_t integer(const char* key, std::int64_t def) {
        const toml::node* n = take(key);
        if (!n) {
            return def;
        }
        if (!n->is_integer()) {
            bad(where(key), "expected an integer");
        }
        return n->value<std::int64_t>().value();
    }
    bool boolean(const char* key, bool def) {
        const toml::node* n = take(key);
        if (!n) {
            return def;
        }
        if (!n->is_boolean()) {
            bad(where(key), "expected true or false");
        }
        return n->value<bool>().value();
    }
    std::string text(const char* key, std::string def) {
        const toml::node* n = take(key);
        if (!n) {
            return def;
        }
        if (!n->is_string()) {
            bad(where(key), "expected a string");
        }
        return n->value<std::string>().value();
    }
    std::vector<double> reals(const char* key, std::vector<double> def) {
        const toml::node* n = take(key);
        return n ? real_list(*n, where(key)) : def;
    }
    std::vector<int> ints(const char* key, std::vector<int> def) {
        const toml::node* n = take(key);
        if (!n) {
            return def;
        }
        std::vector<int> out;
        for (double v : real_list(*n, where(key))) {
            if (v != std::floor(v)) {
                bad(where(key), "expected integers");
            }
            out.push_back(static_cast<int>(v));
        }
        return out;
    }
    /// An array of arrays of reals.
    std::vector<std::vector<double>> real_sets(const char* key, std::vector<std::vector<double>> def) {
        const toml::node* n = take(key);
        if (!n) {
            return def;
        }
        const auto* arr = n->as_array();
        if (!arr) {
            bad(where(key), "expected an array of arrays");
        }
        std::vector<std::vector<double>> out;
        for (const auto& el : *arr) {
            if (!el.is_array()) {
                bad(where(key), "expected an array of arrays, e.g. [[0.5, 1.0]]");
            }
            out.push_back(real_list(el, where(key)));
        }
        return out;
    }
    const toml::table* table(const char* key) {
        const toml::node* n = take(key);
        if (!n) {
            return nullptr;
        }
        if (!n->is_table()) {
            bad(where(key), "expected a table");
        }
        return n->as_table();
    }

    void finish() const {
        if (!tbl_) {
            return;
        }
        for (const auto& [k, v] : *tbl_) {
            if (!used_.count(std::string(k.str()))) {
                bad(name_, "unknown key '" + std::string(k.str()) + "'");
            }
        }
    }

    std::string where(const char* key) const { return name_ + "." + key; }

private:
    const toml::node* take(const char* key) {
        used_.insert(key);
        return tbl_ ? tbl_->get(key) : nullptr;
    }
    static double as_real(const toml::node& n, const std::string& where) {
        if (!n.is_integer() && !n.is_floating_point()) {
            bad(where, "expected a number");
        }
        return n.value<double>().value();
    }
    static std::vector<double> real_list(const toml::node& n, const std::string& where) {
        const auto* arr = n.as_array();
        if (!arr) {
            bad(where, "expected an array of numbers");
        }
        std::vector<double> out;
        for (const auto& el : *arr) {
            out.push_back(as_real(el, where));
        }
        return out;
    }

    const toml::table* tbl_;
    std::string name_;
    std::set<std::string> used_;
};

template <class E>
E pick(const std::string& where, const std::string& value, const std::map<std::string, E>& names) {
    const auto it = names.find(value);
    if (it == names.end()) {
        std::string all;
        for (const auto& [k, v] : names) {
            all += (all.empty() ? "" : ", ") + k;
        }
        bad(where, "'" + value + "' is not one of " + all);
    }
    return it->second;
}

const std::map<std::string, Precision> precision_names = {{"standard", Precision::standard},
                                                          {"compensated", Precision::compensated}};
const std::map<std::string, TableKind> regime_names = {
    {"T2", TableKind::T2}, {"T3", TableKind::T3}, {"T4", TableKind::T4}, {"T5", TableKind::T5}};
const std::map<std::string, MRule> m_rule_names = {{"fixed", MRule::fixed},
                                                   {"sharp", MRule::sharp},
                                                   {"geometric_mean", MRule::geometric_mean},
                                                   {"final_stage", MRule::final_stage}};
const std::map<std::string, T3Exponent> exponent_names = {{"lemma", T3Exponent::lemma},
                                                          {"theorem", T3Exponent::theorem}};
const std::map<std::string, DerivativeMode> derivative_names = {
    {"sensitivity", DerivativeMode::sensitivity}, {"finite_difference", DerivativeMode::finite_difference}};
const std::map<std::string, McParams::Suite> suite_names = {{"extinction", McParams::Suite::extinction},
                                                            {"conditional", McParams::Suite::conditional},
                                                            {"progeny", McParams::Suite::progeny},
                                                            {"trees", McParams::Suite::trees}};

template <class E>
std::string name_of(E value, const std::map<std::string, E>& names) {
    for (const auto& [k, v] : names) {
        if (v == value) {
            return k;
        }
    }
    return "?";
}

Perturbation read_perturbation(const toml::table* tbl, const std::string& where) {
    if (!tbl) {
        return Perturbation::none();
    }
    Section s(tbl, where);
    const std::string kind = s.text("kind", "zero");
    Perturbation p;
    if (kind == "zero") {
    } else if (kind == "power") {
        p = Perturbation::power(s.real("c", 1.0), s.real("p", 0.25));
    } else if (kind == "table") {
        p.kind = Perturbation::Kind::table;
        p.table = s.reals("values", {});
    } else {
        bad(where + ".kind", "'" + kind + "' is not one of zero, power, table");
    }
    s.finish();
    return p;
}

json perturbation_json(const Perturbation& p) {
    switch (p.kind) {
        case Perturbation::Kind::zero:
            return json{{"kind", "zero"}};
        case Perturbation::Kind::power:
            return json{{"kind", "power"}, {"c", p.c}, {"p", p.p}};
        case Perturbation::Kind::table:
            return json{{"kind", "table"}, {"values", p.table}};
    }
    return {};
}

void read_model(ExperimentConfig& cfg, const toml::table* tbl, const std::filesystem::path& base_dir) {
    if (!tbl) {
        return;
    }
    if (tbl->contains("file") || tbl->contains("unit_types")) {
        Section s(tbl, "model");
        if (s.has("file")) {
            std::filesystem::path p = s.text("file", "");
            if (p.is_relative() && !base_dir.empty()) {
                p = base_dir / p;
            }
            cfg.model = load_model_toml(p);
            cfg.model_source = json{{"file", p.generic_string()}};
        } else {
            const auto n = s.integer("unit_types", 2);
            if (n < 1 || n > 64) {
                bad("model.unit_types", "must be in 1..64");
            }
            cfg.model = unit_moment_model(static_cast<int>(n));
            cfg.model_source = json{{"unit_types", n}};
        }
        s.finish();
        if (tbl->size() > 1) {
            bad("model", "give exactly one of file, unit_types or an inline [model.types] table");
        }
        return;
    }
    cfg.model = model_from_toml(*tbl, "model");
    cfg.model_source = "inline";
}

void read_grid(Section& s, std::vector<double>& grid) {
    grid = s.reals("n", grid);
    for (double v : grid) {
        if (!(v >= 1) || v != std::floor(v)) {
            bad(s.where("n"), "generations must be positive integers");
        }
    }
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir,
                                         std::string_view source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ": " << e.description();
        throw StructuralError(os.str());
    }
    ExperimentConfig cfg;
    Section top(&root, std::string(source));

    read_model(cfg, top.table("model"), base_dir);

    {
        Section s(top.table("run"), "run");
        const auto seed = s.integer("seed", static_cast<std::int64_t>(cfg.seed));
        if (seed < 0) {
            bad("run.seed", "must be nonnegative");
        }
        cfg.seed = static_cast<std::uint64_t>(seed);
        const auto workers = s.integer("workers", cfg.workers);
        if (workers < 0 || workers > 4096) {
            bad("run.workers", "must be in 0..4096");
        }
        cfg.workers = static_cast<int>(workers);
        cfg.precision = pick("run.precision", s.text("precision", "standard"), precision_names);
        cfg.out = s.text("out", cfg.out);
        s.finish();
    }
    for (auto [name, target] : {std::pair{"extinction", &cfg.extinction}, std::pair{"survival", &cfg.survival}}) {
        Section s(top.table(name), name);
        read_grid(s, target->n);
        target->types = s.ints("types", target->types);
        s.finish();
    }
    {
        Section s(top.table("conditional"), "conditional");
        auto& c = cfg.conditional;
        c.regime = pick("conditional.regime", s.text("regime", to_string(c.regime)), regime_names);
        read_grid(s, c.n);
        c.lambda = s.real_sets("lambda", c.lambda);
        if (s.has("m_rule")) {
            c.m_rule = pick("conditional.m_rule", s.text("m_rule", ""), m_rule_names);
        }
        c.m = s.integer("m", c.m);
        c.x = s.real("x", c.x);
        c.y = s.real("y", c.y);
        c.i = static_cast<int>(s.integer("i", c.i));
        c.exponent = pick("conditional.exponent", s.text("exponent", to_string(c.exponent)), exponent_names);
        s.finish();
    }
    {
        Section s(top.table("phi"), "phi");
        auto& p = cfg.phi;
        p.i = static_cast<int>(s.integer("i", p.i));
        p.lambda = s.real_sets("lambda", p.lambda);
        p.closed_form_grid = s.reals("closed_form_grid", p.closed_form_grid);
        p.limit_m = s.integer("limit_m", p.limit_m);
        p.closed_form_tol = s.real("closed_form_tol", p.closed_form_tol);
        p.limit_tol = s.real("limit_tol", p.limit_tol);
        p.options.rtol = s.real("rtol", p.options.rtol);
        p.options.start_level = s.real("start_level", p.options.start_level);
        p.options.derivatives = pick("phi.derivatives", s.text("derivatives", "sensitivity"), derivative_names);
        p.options.fd_step = s.real("fd_step", p.options.fd_step);
        p.gradient = s.boolean("gradient", p.gradient);
        s.finish();
    }
    {
        Section s(top.table("yaglom"), "yaglom");
        read_grid(s, cfg.yaglom.n);
        cfg.yaglom.lambda = s.reals("lambda", cfg.yaglom.lambda);
        s.finish();
    }
    {
        Section s(top.table("mc"), "mc");
        auto& m = cfg.mc;
        m.suite = pick("mc.suite", s.text("suite", "extinction"), suite_names);
        m.replicas = s.integer("replicas", m.replicas);
        m.max_generations = s.integer("max_generations", m.max_generations);
        m.population_cap = s.integer("population_cap", m.population_cap);
        m.n_max = s.integer("n_max", m.n_max);
        m.n = s.integer("n", m.n);
        m.m = s.integer("m", m.m);
        m.u = s.real_sets("u", m.u);
        m.min_expected = s.real("min_expected", m.min_expected);
        m.p = static_cast<int>(s.integer("p", m.p));
        m.i = static_cast<int>(s.integer("i", m.i));
        m.j = static_cast<int>(s.integer("j", m.j));
        m.lambda = s.reals("lambda", m.lambda);
        s.finish();
    }
    {
        Section s(top.table("lemma1"), "lemma1");
        auto& r = cfg.lemma1.recursion;
        r.A = s.real("A", r.A);
        r.B = s.real("B", r.B);
        r.alpha = s.real("alpha", r.alpha);
        r.beta = s.real("beta", r.beta);
        r.eps1 = read_perturbation(s.table("eps1"), "lemma1.eps1");
        r.eps2 = read_perturbation(s.table("eps2"), "lemma1.eps2");
        read_grid(s, cfg.lemma1.n);
        s.finish();
    }
    {
        Section s(top.table("report"), "report");
        cfg.report.only = s.ints("only", cfg.report.only);
        s.finish();
    }
    top.finish();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw StructuralError("cannot open config file " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_experiment_config(os.str(), path.parent_path(), path.string());
}

json ExperimentConfig::resolved(std::string_view command) const {
    json j{{"command", std::string(command)},
           {"seed", seed},
           {"workers", workers},
           {"precision", to_string(precision)},
           {"out", out}};
    if (model) {
        j["model"] = to_json(*model);
        j["model_source"] = model_source;
    }
    const auto grid_json = [](const ExtinctionParams& p) { return json{{"n", p.n}, {"types", p.types}}; };
    if (command == "extinction") {
        j["extinction"] = grid_json(extinction);
    } else if (command == "survival") {
        j["survival"] = grid_json(survival);
    } else if (command == "conditional") {
        const auto& c = conditional;
        j["conditional"] = json{{"regime", to_string(c.regime)},
                                {"n", c.n},
                                {"lambda", c.lambda},
                                {"m_rule", to_string(c.m_rule.value_or(default_m_rule(c.regime)))},
                                {"m", c.m},
                                {"x", c.x},
                                {"y", c.y},
                                {"i", c.i},
                                {"exponent", to_string(c.exponent)}};
    } else if (command == "phi") {
        const auto& p = phi;
        j["phi"] = json{{"i", p.i},
                        {"lambda", p.lambda},
                        {"closed_form_grid", p.closed_form_grid},
                        {"limit_m", p.limit_m},
                        {"closed_form_tol", p.closed_form_tol},
                        {"limit_tol", p.limit_tol},
                        {"rtol", p.options.rtol},
                        {"start_level", p.options.start_level},
                        {"derivatives", name_of(p.options.derivatives, derivative_names)},
                        {"fd_step", p.options.fd_step},
                        {"gradient", p.gradient}};
    } else if (command == "yaglom") {
        j["yaglom"] = json{{"n", yaglom.n}, {"lambda", yaglom.lambda}};
    } else if (command == "mc") {
        const auto& m = mc;
        j["mc"] = json{{"suite", name_of(m.suite, suite_names)},
                       {"replicas", m.replicas},
                       {"max_generations", m.max_generations},
                       {"population_cap", m.population_cap},
                       {"n_max", m.n_max},
                       {"n", m.n},
                       {"m", m.m},
                       {"u", m.u},
                       {"min_expected", m.min_expected},
                       {"p", m.p},
                       {"i", m.i},
                       {"j", m.j},
                       {"lambda", m.lambda}};
    } else if (command == "lemma1") {
        const auto& r = lemma1.recursion;
        j["lemma1"] = json{{"A", r.A},
                           {"B", r.B},
                           {"alpha", r.alpha},
                           {"beta", r.beta},
                           {"eps1", perturbation_json(r.eps1)},
                           {"eps2", perturbation_json(r.eps2)},
                           {"n", lemma1.n}};
    } else if (command == "report") {
        j["report"] = json{{"only", report.only}};
    }
    return j;
}

namespace {

// ---------------------------------------------------------------- running

/// Collects the files of one run. Text is echoed to the stream as it comes.
class Artifacts {
public:
    Artifacts(const ExperimentConfig& cfg, std::string_view command, std::ostream& out)
        : dir_(cfg.out), command_(command), resolved_(cfg.resolved(command)), out_(out) {
        if (!dir_.empty()) {
            std::filesystem::create_directories(dir_);
        }
    }

    const json& resolved() const { return resolved_; }

    void text(const std::string& s) {
        out_ << s;
        text_ += s;
    }
    void csv(const std::string& suffix, const CsvTable& t) { write(suffix + ".csv", t.str(resolved_)); }
    void json_file(const std::string& suffix, json data) {
        write(suffix + ".json", envelope(resolved_, std::move(data)).dump(2) + "\n");
    }
    void lines(const std::string& suffix, const std::vector<std::string>& body) {
        std::string s = json{{"version", version()}, {"config", resolved_}}.dump() + "\n";
        for (const auto& l : body) {
            s += l + "\n";
        }
        write(suffix + ".jsonl", s);
    }
    void finish() {
        write(".txt", "# gwlab " + std::string(version()) + "\n# config " + resolved_.dump() + "\n" + text_);
        if (!dir_.empty()) {
            out_ << "wrote " << (dir_ / command_).generic_string() << ".*\n";
        }
    }

private:
    void write(const std::string& suffix, const std::string& content) const {
        if (dir_.empty()) {
            return;
        }
        const auto path = dir_ / (command_ + suffix);
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw StructuralError("cannot write " + path.string());
        }
        f << content;
    }

    std::filesystem::path dir_;
    std::string command_;
    json resolved_;
    std::ostream& out_;
    std::string text_;
};

const ModelSpec& need_model(const ExperimentConfig& cfg) {
    if (!cfg.model) {
        throw StructuralError("this command needs a model: pass --model <file> or add a [model] table");
    }
    return *cfg.model;
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (double x : v) {
        s += (s.empty() ? "" : " ") + format_real(x);
    }
    return s;
}

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

int worst_verdict_code(const std::vector<ConvergenceTable>& tables) {
    for (const auto& t : tables) {
        if (t.verdict != Verdict::converging) {
            return exit_verification_failed;
        }
    }
    return exit_ok;
}

int cmd_validate(const ExperimentConfig& cfg, Artifacts& art) {
    const ModelSpec& spec = need_model(cfg);
    const ValidationReport rep = validate_hypothesis_a(spec);
    CsvTable csv({"check", "type", "value", "passed", "detail"});
    std::ostringstream os;
    for (const auto& f : rep.findings) {
        csv.add_row({f.check, std::to_string(f.type_index), format_real(f.value), f.passed ? "true" : "false",
                     f.detail});
        os << (f.passed ? "pass  " : "FAIL  ") << f.check << " type " << f.type_index << " value "
           << short_num(f.value) << (f.detail.empty() ? "" : "  " + f.detail) << "\n";
    }
    json data = to_json(rep);
    if (rep.all_passed()) {
        data["constants"] = to_json(constants(moments(spec)));
    }
    os << (rep.all_passed() ? "all checks passed\n" : "some checks failed\n");
    art.text(os.str());
    art.csv("", csv);
    art.json_file("", std::move(data));
    return rep.all_passed() ? exit_ok : exit_verification_failed;
}

int cmd_extinction(const ExperimentConfig& cfg, Artifacts& art, bool survival) {
    const ModelSpec& spec = need_model(cfg);
    const ExtinctionParams& p = survival ? cfg.survival : cfg.extinction;
    const int nt = spec.types();
    const std::vector<double> grid = sorted_unique(p.n);
    std::vector<int> types = p.types;
    if (types.empty()) {
        for (int i = 1; i <= nt; ++i) {
            types.push_back(i);
        }
    }
    for (int i : types) {
        if (i < 1 || i > nt) {
            throw StructuralError("type " + std::to_string(i) + " out of range 1.." + std::to_string(nt));
        }
    }
    // Q at n-1 and n for every grid point, streamed.
    std::map<std::int64_t, std::vector<double>> q_at;
    std::set<std::int64_t> wanted;
    for (double n : grid) {
        wanted.insert(static_cast<std::int64_t>(n));
        wanted.insert(static_cast<std::int64_t>(n) - 1);
    }
    std::vector<double> q(static_cast<std::size_t>(nt), 1.0), next(q.size());
    const std::int64_t n_max = grid.empty() ? 0 : static_cast<std::int64_t>(grid.back());
    for (std::int64_t k = 0; k <= n_max; ++k) {
        if (k > 0) {
            survival_step(spec, q, next);
            q.swap(next);
        }
        if (wanted.count(k)) {
            q_at[k] = q;
        }
    }
    std::vector<std::string> cols = {"type", "n"};
    for (int l = 1; l <= nt; ++l) {
        cols.push_back("Q_" + std::to_string(l));
    }
    for (const char* c : {"pmf", "predicted", "ratio"}) {
        cols.push_back(c);
    }
    CsvTable csv(cols);
    json tables = json::array();
    std::vector<ConvergenceTable> all;
    TableParams tp;
    for (int i : types) {
        tp.i = i;
        const ConvergenceTable t = theorem_table(survival ? TableKind::Survival : TableKind::T1, spec, tp, grid);
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto n = static_cast<std::int64_t>(grid[r]);
            const auto& qn = q_at.at(n);
            std::vector<std::string> cells = {std::to_string(i), std::to_string(n)};
            for (double v : qn) {
                cells.push_back(format_real(v));
            }
            const double pmf = q_at.at(n - 1)[static_cast<std::size_t>(i - 1)] - qn[static_cast<std::size_t>(i - 1)];
            cells.push_back(format_real(survival ? pmf : t.rows[r].exact));
            cells.push_back(format_real(t.rows[r].predicted));
            cells.push_back(format_real(t.rows[r].ratio));
            csv.add_row(std::move(cells));
        }
        art.text(render_text(t));
        tables.push_back(to_json(t));
        all.push_back(t);
    }
    art.csv("", csv);
    art.json_file("", std::move(tables));
    return worst_verdict_code(all);
}

CsvTable tables_csv(const std::vector<ConvergenceTable>& tables, const std::vector<std::vector<double>>& sets) {
    CsvTable csv({"set", "lambda", "n", "m", "exact", "predicted", "ratio", "exact_error"});
    for (std::size_t k = 0; k < tables.size(); ++k) {
        for (const auto& r : tables[k].rows) {
            csv.add_row({std::to_string(k + 1), join(sets[k]), format_real(r.n), std::to_string(r.m),
                         format_real(r.exact), format_real(r.predicted), format_real(r.ratio),
                         format_real(r.exact_error)});
        }
    }
    return csv;
}

void emit_tables(Artifacts& art, const std::vector<ConvergenceTable>& tables,
                 const std::vector<std::vector<double>>& sets) {
    json arr = json::array();
    for (const auto& t : tables) {
        art.text(render_text(t));
        arr.push_back(to_json(t));
    }
    art.csv("", tables_csv(tables, sets));
    art.json_file("", std::move(arr));
}

int cmd_conditional(const ExperimentConfig& cfg, Artifacts& art) {
    const ModelSpec& spec = need_model(cfg);
    const auto& c = cfg.conditional;
    TableParams tp;
    tp.i = c.i;
    tp.x = c.x;
    tp.y = c.y;
    tp.m_rule = c.m_rule.value_or(default_m_rule(c.regime));
    tp.m_fixed = c.m;
    tp.exponent = c.exponent;
    tp.precision = cfg.precision;
    if (c.lambda.empty()) {
        throw StructuralError("conditional.lambda: need at least one lambda set");
    }
    const auto tables = theorem_tables(c.regime, spec, tp, c.lambda, sorted_unique(c.n));
    emit_tables(art, tables, c.lambda);
    return worst_verdict_code(tables);
}

int cmd_yaglom(const ExperimentConfig& cfg, Artifacts& art) {
    const ModelSpec& spec = need_model(cfg);
    std::vector<ConvergenceTable> tables;
    std::vector<std::vector<double>> sets;
    TableParams tp;
    for (double lam : cfg.yaglom.lambda) {
        tp.lambda = {lam};
        tables.push_back(theorem_table(TableKind::Yaglom, spec, tp, sorted_unique(cfg.yaglom.n)));
        sets.push_back({lam});
    }
    emit_tables(art, tables, sets);
    return worst_verdict_code(tables);
}

int cmd_phi(const ExperimentConfig& cfg, Artifacts& art) {
    const ModelSpec& spec = need_model(cfg);
    const auto& p = cfg.phi;
    const AsymptoticConstants c = constants(moments(spec));
    const PhiSolver solver(c, p.i, p.options);
    bool ok = true;
    std::ostringstream os;

    CsvTable points({"point", "lambda", "phi", "error", "pgf_limit", "rel_diff", "gradient"});
    double worst_limit = 0;
    int k = 0;
    for (const auto& lam : p.lambda) {
        const PhiValue v = solver(lam, p.gradient);
        double lim = std::nan(""), rel = std::nan("");
        if (p.limit_m > 0) {
            lim = phi_via_pgf_limit(spec, p.i, lam, p.limit_m);
            rel = lim != 0 ? std::abs(v.value - lim) / std::abs(lim) : std::abs(v.value);
            worst_limit = std::max(worst_limit, rel);
        }
        points.add_row({std::to_string(++k), join(lam), format_real(v.value), format_real(v.error), format_real(lim),
                        format_real(rel), join(v.gradient)});
    }
    os << "Phi_" << p.i << " at " << p.lambda.size() << " points\n" << render_text(points);
    if (p.limit_m > 0 && !p.lambda.empty()) {
        const bool pass = worst_limit <= p.limit_tol;
        ok = ok && pass;
        os << "pgf limit (m=" << p.limit_m << "): max rel diff " << short_num(worst_limit) << " "
           << (pass ? "within " : "EXCEEDS ") << short_num(p.limit_tol) << "\n";
    }
    json data{{"constants", to_json(c)}, {"points", json::array()}};
    for (const auto& row : points.data()) {
        data["points"].push_back(row);
    }

    if (spec.types() == 2 && p.i == 1 && !p.closed_form_grid.empty()) {
        CsvTable grid({"lambda1", "lambda2", "solver", "closed_form", "rel_err"});
        double worst = 0;
        for (double a : p.closed_form_grid) {
            for (double b : p.closed_form_grid) {
                const double lam[2] = {a, b};
                const double v = solver(lam).value;
                const double w = phi_closed_form_pair(c.b(1), c.m_next(1), a, b);
                const double rel = w != 0 ? std::abs(v - w) / std::abs(w) : std::abs(v);
                worst = std::max(worst, rel);
                grid.add_numeric_row({a, b, v, w, rel});
            }
        }
        const bool pass = worst <= p.closed_form_tol;
        ok = ok && pass;
        os << "closed form on " << grid.data().size() << " grid points: max rel err " << short_num(worst) << " "
           << (pass ? "within " : "EXCEEDS ") << short_num(p.closed_form_tol) << "\n";
        art.csv("_closed_form", grid);
        data["closed_form_max_rel_err"] = worst;
    }
    art.text(os.str());
    art.csv("", points);
    art.json_file("", std::move(data));
    return ok ? exit_ok : exit_verification_failed;
}

McConfig mc_config(const ExperimentConfig& cfg) {
    McConfig m;
    m.seed = cfg.seed;
    m.workers = cfg.workers;
    m.replicas = cfg.mc.replicas;
    m.max_generations = cfg.mc.max_generations;
    m.population_cap = cfg.mc.population_cap;
    return m;
}

int cmd_mc(const ExperimentConfig& cfg, Artifacts& art) {
    const ModelSpec& spec = need_model(cfg);
    const auto& p = cfg.mc;
    const McConfig mc = mc_config(cfg);
    std::ostringstream os;
    int code = exit_ok;
    switch (p.suite) {
        case McParams::Suite::extinction: {
            const auto hist = simulate_extinction_times(spec, mc, p.n_max);
            const auto exact = extinction_pmf(spec, 1, p.n_max);
            const double r = static_cast<double>(mc.replicas);
            CsvTable csv({"n", "count", "empirical", "exact", "z"});
            double ks = 0, ce = 0, cx = 0;
            for (std::int64_t n = 1; n <= p.n_max; ++n) {
                const double e = exact.pmf[static_cast<std::size_t>(n)];
                const double q = hist.empirical_pmf(n);
                ce += q;
                cx += e;
                ks = std::max(ks, std::abs(ce - cx));
                const double sd = std::sqrt(e * (1 - e) / r);
                csv.add_row({std::to_string(n), std::to_string(hist.counts[static_cast<std::size_t>(n)]),
                             format_real(q), format_real(e), format_real(sd > 0 ? (q - e) / sd : 0.0)});
            }
            const double bound = std::sqrt(std::log(2.0 / std::erfc(4.0 / std::sqrt(2.0))) / (2.0 * r));
            os << "extinction times of " << mc.replicas << " replicas, n <= " << p.n_max << ": KS distance "
               << short_num(ks) << ", 4 sigma band " << short_num(bound) << ", beyond " << hist.beyond
               << ", censored " << hist.censored << "\n";
            code = ks <= bound ? exit_ok : exit_verification_failed;
            art.csv("", csv);
            art.json_file("", json{{"ks", ks}, {"band", bound}, {"beyond", hist.beyond}, {"censored", hist.censored},
                                   {"counts", hist.counts}});
            break;
        }
        case McParams::Suite::conditional: {
            const auto ens = conditional_ensemble(spec, p.n, p.m, mc, p.min_expected);
            const auto snap = conditioning_snapshot(spec, p.n, p.m, cfg.precision);
            std::vector<std::vector<double>> us = p.u;
            if (us.empty()) {
                std::vector<double> u(static_cast<std::size_t>(spec.types()), 1.0);
                u.back() = std::exp(-1.0 / static_cast<double>(p.n));
                us.push_back(u);
            }
            CsvTable csv({"u", "estimate", "std_error", "exact", "z"});
            os << "conditional ensemble n=" << p.n << " m=" << p.m << ": " << ens.accepted << " accepted of "
               << ens.replicas << " (P(T=n) = " << short_num(ens.exact_probability) << "), censored "
               << ens.censored << "\n";
            for (const auto& u : us) {
                const Estimate e = ens.laplace(u);
                const double x = conditional_laplace(spec, snap, u, {cfg.precision}).value;
                const double z = e.std_error > 0 ? (e.mean - x) / e.std_error : (e.mean == x ? 0.0 : INFINITY);
                csv.add_row({join(u), format_real(e.mean), format_real(e.std_error), format_real(x), format_real(z)});
                os << "  u = (" << join(u) << "): " << short_num(e.mean) << " +- " << short_num(e.std_error)
                   << " vs exact " << short_num(x) << ", z = " << short_num(z) << "\n";
                if (!(std::abs(z) <= 3.0)) {
                    code = exit_verification_failed;
                }
            }
            CsvTable samples([&] {
                std::vector<std::string> cols = {"sample"};
                for (int l = 1; l <= spec.types(); ++l) {
                    cols.push_back("Z_" + std::to_string(l));
                }
                return cols;
            }());
            for (std::size_t k = 0; k < ens.samples.size(); ++k) {
                std::vector<std::string> cells = {std::to_string(k + 1)};
                for (auto z : ens.samples[k]) {
                    cells.push_back(std::to_string(z));
                }
                samples.add_row(std::move(cells));
            }
            art.csv("", csv);
            art.csv("_samples", samples);
            art.json_file("", json{{"accepted", ens.accepted},
                                   {"replicas", ens.replicas},
                                   {"censored", ens.censored},
                                   {"exact_probability", ens.exact_probability},
                                   {"samples", ens.samples}});
            break;
        }
        case McParams::Suite::progeny: {
            const auto st = total_progeny(spec, mc, p.p, p.i, p.j);
            std::optional<AsymptoticConstants> c;
            if (p.p == 1 && p.j == p.i + 1 && p.i < spec.types()) {
                c = constants(moments(spec));
            }
            CsvTable csv({"lambda", "estimate", "std_error", "predicted", "ratio"});
            os << "total progeny W_{" << p.p << "," << p.i << "," << p.j << "} over " << mc.replicas
               << " replicas, censored " << st.censored_count << "\n";
            for (double lam : p.lambda) {
                const Estimate e = st.one_minus_laplace(lam);
                const double pred = c ? rhs_tot1(*c, {p.i, lam}) : std::nan("");
                csv.add_numeric_row({lam, e.mean, e.std_error, pred, e.mean / pred});
                os << "  lambda " << short_num(lam) << ": " << short_num(e.mean) << " +- " << short_num(e.std_error);
                if (c) {
                    os << ", predicted " << short_num(pred) << ", ratio " << short_num(e.mean / pred);
                }
                os << "\n";
            }
            art.csv("", csv);
            art.json_file("", json{{"w", st.w}, {"censored_count", st.censored_count}});
            break;
        }
        case McParams::Suite::trees: {
            std::vector<std::string> lines;
            std::int64_t censored = 0, tallest = 0;
            simulate(spec, mc, [&](const TrajectorySample& s) {
                const TreeProfile t = tree_export(s);
                censored += t.censored ? 1 : 0;
                tallest = std::max(tallest, t.height);
                lines.push_back(tree_json_line(t));
            });
            os << lines.size() << " tree profiles, tallest " << tallest << ", censored " << censored << "\n";
            art.lines("_trees", lines);
            break;
        }
    }
    art.text(os.str());
    return code;
}

int cmd_lemma1(const ExperimentConfig& cfg, Artifacts& art) {
    const auto& r = cfg.lemma1.recursion;
    const std::vector<double> grid = sorted_unique(cfg.lemma1.n);
    if (grid.empty()) {
        throw StructuralError("lemma1.n: need at least one generation");
    }
    const auto seq = lemma_basic_iterate(r, static_cast<std::int64_t>(grid.back()));
    const double target = r.A / r.B;
    CsvTable csv({"n", "value", "target", "ratio"});
    std::vector<double> values, dev;
    for (double n : grid) {
        const double v = seq[static_cast<std::size_t>(n)];
        values.push_back(v);
        dev.push_back(std::abs(v - target));
        csv.add_numeric_row({n, v, target, target != 0 ? v / target : std::nan("")});
    }
    const Verdict verdict = trend_verdict(dev);
    std::ostringstream os;
    os << "n^(alpha-beta) Delta_n with A/B = " << short_num(target) << "\n" << render_text(csv);
    json data{{"rows", csv.data()}, {"verdict", to_string(verdict)}};
    if (values.size() >= 3) {
        const LimitEstimate le = limit_estimate(values);
        os << "extrapolated " << short_num(le.limit) << ", ";
        data["extrapolated"] = le.limit;
    }
    os << "verdict " << to_string(verdict) << "\n";
    art.text(os.str());
    art.csv("", csv);
    art.json_file("", std::move(data));
    return verdict == Verdict::converging ? exit_ok : exit_verification_failed;
}

int cmd_report(const ExperimentConfig& cfg, Artifacts& art) {
    AcceptanceOptions opts;
    opts.seed = cfg.seed;
    opts.workers = cfg.workers;
    opts.only = cfg.report.only;
    CsvTable csv({"id", "name", "passed", "seconds", "limit", "detail"});
    json arr = json::array();
    int failed = 0;
    run_acceptance(opts, [&](const CriterionResult& r) {
        art.text(summary_line(r) + "\n");
        csv.add_row({std::to_string(r.id), r.name, r.passed ? "true" : "false", format_real(r.seconds),
                     format_real(r.limit), r.detail});
        arr.push_back(json{{"id", r.id},
                           {"name", r.name},
                           {"passed", r.passed},
                           {"seconds", r.seconds},
                           {"limit", r.limit},
                           {"detail", r.detail}});
        failed += r.passed ? 0 : 1;
    });
    art.text(std::to_string(arr.size() - static_cast<std::size_t>(failed)) + "/" + std::to_string(arr.size()) +
             " criteria passed\n");
    art.csv("", csv);
    art.json_file("", std::move(arr));
    return failed == 0 ? exit_ok : exit_verification_failed;
}

}  // namespace

int run(std::string_view command, const ExperimentConfig& cfg, std::ostream& out) {
    Artifacts art(cfg, command, out);
    int code = exit_usage;
    if (command == "validate") {
        code = cmd_validate(cfg, art);
    } else if (command == "extinction") {
        code = cmd_extinction(cfg, art, false);
    } else if (command == "survival") {
        code = cmd_extinction(cfg, art, true);
    } else if (command == "conditional") {
        code = cmd_conditional(cfg, art);
    } else if (command == "phi") {
        code = cmd_phi(cfg, art);
    } else if (command == "yaglom") {
        code = cmd_yaglom(cfg, art);
    } else if (command == "mc") {
        code = cmd_mc(cfg, art);
    } else if (command == "lemma1") {
        code = cmd_lemma1(cfg, art);
    } else if (command == "report") {
        code = cmd_report(cfg, art);
    } else {
        throw StructuralError("unknown command '" + std::string(command) + "'");
    }
    art.finish();
    return code;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact, asymptotic and Monte Carlo computations for decomposable critical branching processes"};
    app.set_version_flag("--version", std::string("gwlab ") + version());
    app.require_subcommand(1, 1);

    std::string config_path, out_dir, precision, model_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    app.add_option("--config", config_path, "TOML experiment config")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "directory for CSV, JSON and text outputs");
    app.add_option("--seed", seed, "random seed (u64)");
    app.add_option("--precision", precision, "standard or compensated")
        ->check(CLI::IsMember({"standard", "compensated"}));
    app.add_option("--workers", workers, "worker threads, 0 = all")->check(CLI::Range(0, 4096));
    app.add_option("--model", model_path, "model TOML file (overrides [model])")->check(CLI::ExistingFile);

    const std::vector<std::pair<const char*, const char*>> commands = {
        {"validate", "check the criticality hypothesis and print the constants"},
        {"extinction", "extinction-time pmf against its power-law asymptote"},
        {"survival", "survival probabilities against their power-law asymptote"},
        {"conditional", "laws conditioned on the extinction moment against their limits"},
        {"phi", "evaluate Phi_i and cross-check it"},
        {"yaglom", "Laplace transform of the survivors against the Yaglom limit"},
        {"mc", "Monte Carlo suites"},
        {"lemma1", "iterate the basic recursion"},
        {"report", "run the acceptance suite"},
    };
    std::optional<std::string> regime;
    std::optional<double> x, y;
    std::optional<int> level;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        if (std::string_view(name) == "conditional") {
            sub->add_option("--regime", regime, "T2, T3, T4 or T5")->check(CLI::IsMember({"T2", "T3", "T4", "T5"}));
            sub->add_option("--x", x, "final-stage fraction m/n");
            sub->add_option("--y", y, "sharp-boundary multiplier");
            sub->add_option("--i", level, "type level i");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
        if (!model_path.empty()) {
            cfg.model = load_model_toml(model_path);
            cfg.model_source = json{{"file", std::filesystem::path(model_path).generic_string()}};
        }
        if (!out_dir.empty()) {
            cfg.out = out_dir;
        }
        if (seed) {
            cfg.seed = *seed;
        }
        if (workers) {
            cfg.workers = *workers;
        }
        if (!precision.empty()) {
            cfg.precision = precision == "compensated" ? Precision::compensated : Precision::standard;
        }
        if (regime) {
            cfg.conditional.regime = regime_names.at(*regime);
        }
        if (x) {
            cfg.conditional.x = *x;
        }
        if (y) {
            cfg.conditional.y = *y;
        }
        if (level) {
            cfg.conditional.i = *level;
        }
        return run(command, cfg, out);
    } catch (const StructuralError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ConstantsUndefinedError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ConditioningError& e) {
        err << "infeasible: " << e.what() << "\n";
        return exit_infeasible;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return exit_infeasible;
    } catch (const SolverError& e) {
        err << "infeasible: " << e.what() << "\n";
        return exit_infeasible;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
}

}  // namespace gwlab
