#include "gwlab/model_io.hpp"

#include "gwlab/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gwlab {

namespace {

[[noreturn]] void fail(std::string_view where, const std::string& what) {
    throw StructuralError(std::string(where) + ": " + what);
}

void only_keys(const toml::table& tbl, std::string_view where, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : tbl) {
        if (!allowed.count(std::string(k.str()))) {
            fail(where, "unknown key '" + std::string(k.str()) + "'");
        }
    }
}

double real_field(const toml::table& tbl, std::string_view where, const char* key) {
    const auto* node = tbl.get(key);
    if (!node) {
        fail(where, std::string("missing '") + key + "'");
    }
    if (auto v = node->value<double>(); v && (node->is_floating_point() || node->is_integer())) {
        return *v;
    }
    fail(where, std::string("'") + key + "' must be a number");
}

std::int64_t int_field(const toml::table& tbl, std::string_view where, const char* key) {
    const auto* node = tbl.get(key);
    if (!node) {
        fail(where, std::string("missing '") + key + "'");
    }
    if (!node->is_integer()) {
        fail(where, std::string("'") + key + "' must be an integer");
    }
    return node->value<std::int64_t>().value();
}

std::string real_text(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) {
        s += ".0";
    }
    return s;
}

}  // namespace

ComponentLaw component_from_toml(const toml::table& tbl, std::string_view where) {
    const auto kind = tbl["kind"].value<std::string>();
    if (!kind) {
        fail(where, "missing string 'kind'");
    }
    const std::string w(where);
    if (*kind == "poisson" || *kind == "geometric") {
        only_keys(tbl, where, {"kind", "mean"});
        const double mean = real_field(tbl, where, "mean");
        try {
            return *kind == "poisson" ? ComponentLaw::poisson(mean) : ComponentLaw::geometric(mean);
        } catch (const StructuralError& e) {
            fail(where, e.what());
        }
    }
    try {
        if (*kind == "bernoulli") {
            only_keys(tbl, where, {"kind", "p"});
            return ComponentLaw::bernoulli(real_field(tbl, where, "p"));
        }
        if (*kind == "binomial") {
            only_keys(tbl, where, {"kind", "trials", "p"});
            return ComponentLaw::binomial(int_field(tbl, where, "trials"), real_field(tbl, where, "p"));
        }
        if (*kind == "deterministic") {
            only_keys(tbl, where, {"kind", "k"});
            return ComponentLaw::deterministic(int_field(tbl, where, "k"));
        }
    } catch (const StructuralError& e) {
        const std::string msg = e.what();
        if (msg.rfind(w, 0) == 0) {
            throw;
        }
        fail(where, msg);
    }
    fail(where, "unknown kind '" + *kind + "' (poisson, geometric, bernoulli, binomial, deterministic)");
}

ModelSpec model_from_toml(const toml::table& tbl, std::string_view where) {
    only_keys(tbl, where, {"name", "types"});
    const auto* types = tbl["types"].as_table();
    if (!types) {
        fail(where, "missing [types] table");
    }
    std::vector<OffspringLaw> laws;
    for (const auto& [key, node] : *types) {
        const std::string ks(key.str());
        int i = 0;
        const auto [ptr, ec] = std::from_chars(ks.data(), ks.data() + ks.size(), i);
        if (ec != std::errc() || ptr != ks.data() + ks.size() || i < 1) {
            fail(where, "type key '" + ks + "' is not a positive integer");
        }
        const auto* law_tbl = node.as_table();
        if (!law_tbl) {
            fail(where, "types." + ks + " must be a table");
        }
        OffspringLaw law;
        law.type_index = i;
        for (const auto& [ckey, cnode] : *law_tbl) {
            const std::string cs(ckey.str());
            const std::string cw = std::string(where) + ".types." + ks + "." + cs;
            int target = 0;
            if (cs == "own") {
                target = i;
            } else if (cs == "next") {
                target = i + 1;
            } else if (cs.rfind("to_", 0) == 0) {
                const auto [p2, e2] = std::from_chars(cs.data() + 3, cs.data() + cs.size(), target);
                if (e2 != std::errc() || p2 != cs.data() + cs.size()) {
                    fail(cw, "bad component key");
                }
                if (target == i || target == i + 1) {
                    fail(cw, "use 'own' / 'next' for the own and next types");
                }
            } else {
                fail(std::string(where) + ".types." + ks, "unknown key '" + cs + "' (own, next, to_<j>)");
            }
            const auto* ctbl = cnode.as_table();
            if (!ctbl) {
                fail(cw, "component must be an inline table");
            }
            if (!law.components.emplace(target, component_from_toml(*ctbl, cw)).second) {
                fail(cw, "duplicate component");
            }
        }
        laws.push_back(std::move(law));
    }
    try {
        return ModelSpec(std::move(laws));
    } catch (const StructuralError& e) {
        fail(where, e.what());
    }
}

ModelSpec parse_model_toml(std::string_view text, std::string_view source) {
    toml::table tbl;
    try {
        tbl = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (line " << e.source().begin.line << ")";
        fail(source, os.str());
    }
    return model_from_toml(tbl, source);
}

ModelSpec load_model_toml(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw StructuralError("cannot open model file " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_model_toml(os.str(), path.string());
}

std::string model_to_toml(const ModelSpec& spec) {
    std::ostringstream os;
    for (int i = 1; i <= spec.types(); ++i) {
        if (i > 1) {
            os << "\n";
        }
        os << "[types." << i << "]\n";
        for (const auto& c : spec.components(i)) {
            std::string key = c.target == i ? "own" : c.target == i + 1 ? "next" : "to_" + std::to_string(c.target);
            os << key << " = { kind = \"" << to_string(c.law.kind()) << "\"";
            switch (c.law.kind()) {
                case LawKind::poisson:
                case LawKind::geometric:
                    os << ", mean = " << real_text(c.law.parameter());
                    break;
                case LawKind::bernoulli:
                    os << ", p = " << real_text(c.law.parameter());
                    break;
                case LawKind::binomial:
                    os << ", trials = " << c.law.trials() << ", p = " << real_text(c.law.parameter());
                    break;
                case LawKind::deterministic:
                    os << ", k = " << c.law.trials();
                    break;
            }
            os << " }\n";
        }
    }
    return os.str();
}

}  // namespace gwlab
