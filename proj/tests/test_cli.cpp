#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/cli.hpp"
#include "gwlab/errors.hpp"
#include "gwlab/output.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace gwlab;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = GWLAB_SOURCE_DIR;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gwlab");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gwlab_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string config(const std::string& name) { return (source_dir / "configs" / name).string(); }

const char* subcritical = R"(
[types.1]
own = { kind = "poisson", mean = 0.5 }
next = { kind = "poisson", mean = 1.0 }
[types.2]
own = { kind = "geometric", mean = 1.0 }
)";

}  // namespace

TEST_CASE("strict config parsing") {
    CHECK_NOTHROW(parse_experiment_config("[model]\nunit_types = 2\n"));
    CHECK_THROWS_AS(parse_experiment_config("[model]\nunit_types = 2\n[run]\nsed = 3\n"), StructuralError);
    CHECK_THROWS_AS(parse_experiment_config("[nonsense]\n"), StructuralError);
    CHECK_THROWS_AS(parse_experiment_config("[model]\nunit_types = 2\nfile = \"x.toml\"\n"), StructuralError);
    CHECK_THROWS_AS(parse_experiment_config("[conditional]\nregime = \"T9\"\n"), StructuralError);
    CHECK_THROWS_AS(parse_experiment_config("[mc]\nsuite = \"extinction\"\nreplicas = \"many\"\n"), StructuralError);
    CHECK_THROWS_AS(parse_experiment_config("[run]\nprecision = \"quad\"\n"), StructuralError);
    CHECK_THROWS_AS(parse_experiment_config("[run\n"), StructuralError);

    const auto c = parse_experiment_config("[run]\nseed = 11\nprecision = \"compensated\"\n[conditional]\nregime = \"T3\"\n"
                                           "i = 2\nlambda = [[0.5, 1.0]]\n[model]\nunit_types = 3\n");
    CHECK(c.seed == 11);
    CHECK(c.precision == Precision::compensated);
    CHECK(c.conditional.regime == TableKind::T3);
    CHECK(c.conditional.i == 2);
    REQUIRE(c.model.has_value());
    CHECK(*c.model == unit_moment_model(3));

    const auto f = load_experiment_config(config("extinction.toml"));
    REQUIRE(f.model.has_value());
    CHECK(*f.model == unit_moment_model(2));
}

TEST_CASE("validate exit codes") {
    const fs::path dir = scratch("validate");
    const fs::path bad = dir / "sub.toml";
    std::ofstream(bad) << subcritical;
    const fs::path good = source_dir / "configs" / "models" / "unit2.toml";
    CHECK(cli({"--model", good.string(), "validate"}).code == exit_ok);
    const auto r = cli({"--model", bad.string(), "validate"});
    CHECK(r.code == exit_verification_failed);
    CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("extinction run writes consistent artifacts") {
    const fs::path dir = scratch("extinction");
    const auto r = cli({"--config", config("extinction.toml"), "--out", dir.string(), "extinction"});
    REQUIRE(r.code == exit_ok);
    for (const char* f : {"extinction.csv", "extinction.json", "extinction.txt"}) {
        REQUIRE(fs::exists(dir / f));
    }
    const std::string csv = slurp(dir / "extinction.csv");
    CHECK(csv.rfind(std::string("# gwlab ") + version() + "\n", 0) == 0);
    CHECK(csv.find("# config ") != std::string::npos);

    // last data row ends with the ratio column
    std::istringstream lines(csv);
    std::string line, last;
    while (std::getline(lines, line)) {
        if (!line.empty() && line[0] != '#') {
            last = line;
        }
    }
    const double ratio = std::stod(last.substr(last.rfind(',') + 1));
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.15));

    const auto j = nlohmann::json::parse(slurp(dir / "extinction.json"));
    CHECK(j["version"] == version());
    CHECK(j["config"]["command"] == "extinction");
    CHECK(j.contains("data"));
    // stdout is the text artifact plus a closing "wrote" line
    const std::string txt = slurp(dir / "extinction.txt");
    const std::string body = r.out.substr(0, r.out.rfind("wrote "));
    REQUIRE(txt.size() >= body.size());
    CHECK(txt.substr(txt.size() - body.size()) == body);
    CHECK(r.out.find("wrote ") != std::string::npos);
}

TEST_CASE("repeated runs are byte-identical") {
    const fs::path dir = scratch("repeat");
    std::vector<std::string> run = {"--config", config("mc_progeny.toml"), "--out", dir.string(), "mc"};
    REQUIRE(cli(run).code == exit_ok);
    std::map<std::string, std::string> first;
    for (const auto& e : fs::directory_iterator(dir)) {
        first[e.path().filename().string()] = slurp(e.path());
    }
    REQUIRE(!first.empty());
    REQUIRE(cli(run).code == exit_ok);
    for (const auto& [name, text] : first) {
        INFO(name);
        CHECK(slurp(dir / name) == text);
    }
}

TEST_CASE("every artifact carries the version") {
    const fs::path dir = scratch("trees");
    REQUIRE(cli({"--config", config("mc_trees.toml"), "--out", dir.string(), "mc"}).code == exit_ok);
    const std::string jsonl = slurp(dir / "mc_trees.jsonl");
    const auto head = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
    CHECK(head["version"] == version());
    CHECK(head.contains("config"));
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string text = slurp(e.path());
        INFO(e.path().string());
        CHECK(text.find(version()) != std::string::npos);
    }
}

TEST_CASE("usage errors and infeasible requests") {
    CHECK(cli({"--bogus", "validate"}).code == exit_usage);
    CHECK(cli({}).code == exit_usage);
    CHECK(cli({"validate"}).code == exit_usage);
    CHECK(cli({"--model", "/no/such/file.toml", "validate"}).code == exit_usage);
    CHECK(cli({"--config", config("phi.toml"), "--precision", "quad", "phi"}).code == exit_usage);

    const fs::path dir = scratch("infeasible");
    const fs::path cfg = dir / "mc.toml";
    std::ofstream(cfg) << "[model]\nunit_types = 2\n[mc]\nsuite = \"conditional\"\nreplicas = 1000\nn = 200\nm = 100\n"
                          "u = [[1.0, 0.99]]\n";
    const auto r = cli({"--config", cfg.string(), "mc"});
    CHECK(r.code == exit_infeasible);
    CHECK(r.err.find("replicas") != std::string::npos);
}

TEST_CASE("command-line overrides show up in the echo") {
    const fs::path dir = scratch("seed");
    REQUIRE(cli({"--config", config("mc_extinction.toml"), "--seed", "12345", "--out", dir.string(), "mc"}).code ==
            exit_ok);
    const auto j = nlohmann::json::parse(slurp(dir / "mc.json"));
    CHECK(j["config"]["seed"] == 12345);
    CHECK(cli({"--version"}).out.find(version()) != std::string::npos);
}
