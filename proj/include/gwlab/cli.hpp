#pragma once

// Config-driven front end. An experiment config is a TOML file with an
// optional [model] table, a [run] table of common settings and one table per
// subcommand; every key is checked and unknown ones are refused. See the
// README for the full key list.

#include "gwlab/asymptotics.hpp"
#include "gwlab/convergence_lab.hpp"
#include "gwlab/model.hpp"
#include "gwlab/pgf_engine.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gwlab {

enum ExitCode : int {
    exit_ok = 0,
    exit_verification_failed = 1,
    exit_usage = 2,
    exit_infeasible = 3,
};

struct ExtinctionParams {
    std::vector<double> n = {1e3, 1e4, 1e5};
    /// Starting types; empty means every type.
    std::vector<int> types;
};

struct ConditionalParams {
    TableKind regime = TableKind::T5;
    std::vector<double> n = {500, 2000, 5000};
    std::vector<std::vector<double>> lambda = {{1.0}};
    /// Unset: the regime's natural rule.
    std::optional<MRule> m_rule;
    std::int64_t m = 1;
    double x = 0.5;
    double y = 1.0;
    int i = 1;
    T3Exponent exponent = T3Exponent::lemma;
};

struct PhiParams {
    int i = 1;
    std::vector<std::vector<double>> lambda = {{0.0, 1.0}};
    /// Square grid for the two-type closed-form comparison (skipped for other models).
    std::vector<double> closed_form_grid = {0, 0.1, 0.5, 1, 2, 5, 10};
    std::int64_t limit_m = 10000;
    double closed_form_tol = 1e-8;
    double limit_tol = 0.02;
    PhiOptions options;
    bool gradient = false;
};

struct YaglomParams {
    std::vector<double> n = {1e2, 1e3, 1e4};
    std::vector<double> lambda = {1.0};
};

struct McParams {
    enum class Suite { extinction, conditional, progeny, trees };
    Suite suite = Suite::extinction;
    std::int64_t replicas = 100000;
    std::int64_t max_generations = 1'000'000;
    std::int64_t population_cap = 10'000'000;
    /// extinction suite
    std::int64_t n_max = 100;
    /// conditional suite
    std::int64_t n = 200;
    std::int64_t m = 100;
    std::vector<std::vector<double>> u;
    double min_expected = 100.0;
    /// progeny suite
    int p = 1, i = 1, j = 2;
    std::vector<double> lambda = {1e-2, 1e-3, 1e-4};
};

struct Lemma1Params {
    RecursionSpec recursion;
    std::vector<double> n = {1e3, 1e4, 1e5, 1e6};
};

struct ReportParams {
    std::vector<int> only;
};

struct ExperimentConfig {
    std::optional<ModelSpec> model;
    /// How the model was given, for the echo.
    nlohmann::json model_source;
    std::uint64_t seed = 7;
    int workers = 1;
    Precision precision = Precision::standard;
    std::string out;

    ExtinctionParams extinction;
    ExtinctionParams survival;
    ConditionalParams conditional;
    PhiParams phi;
    YaglomParams yaglom;
    McParams mc;
    Lemma1Params lemma1;
    ReportParams report;

    /// The settings a subcommand actually used, with the model inlined.
    nlohmann::json resolved(std::string_view command) const;
};

/// Strict parse; relative model paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {},
                                         std::string_view source = "config");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Runs one subcommand with a resolved config. Text goes to `out`; files go
/// to cfg.out when it is set.
int run(std::string_view command, const ExperimentConfig& cfg, std::ostream& out);

/// Full command line entry point (argv[0] is the program name).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gwlab
