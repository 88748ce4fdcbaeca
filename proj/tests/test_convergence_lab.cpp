#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/convergence_lab.hpp"
#include "gwlab/errors.hpp"

#include <cmath>

using namespace gwlab;

TEST_CASE("perturbation sequences") {
    CHECK(Perturbation::none().at(5) == 0.0);
    CHECK(Perturbation::power(2.0, 0.5).at(4) == doctest::Approx(1.0));
    Perturbation t;
    t.kind = Perturbation::Kind::table;
    t.table = {0.1, 0.2};
    CHECK(t.at(1) == 0.1);
    CHECK(t.at(2) == 0.2);
    CHECK(t.at(3) == 0.0);
}

TEST_CASE("rescaled recursion tends to A / B") {
    RecursionSpec r;
    const auto v = lemma_basic_iterate(r, 100000);
    REQUIRE(v.size() == 100001);
    CHECK(v[0] == 0.0);
    CHECK(v.back() == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(v.back() - 1.0) < std::abs(v[1000] - 1.0));

    r.A = 2.0;
    r.alpha = 1.5;
    r.beta = 0.5;
    CHECK(lemma_basic_iterate(r, 100000).back() == doctest::Approx(2.0).epsilon(0.01));

    r.B = 4.0;
    r.eps1 = Perturbation::power(1.0, 0.25);
    r.eps2 = Perturbation::power(-1.0, 0.25);
    CHECK(lemma_basic_iterate(r, 1000000).back() == doctest::Approx(0.5).epsilon(0.05));

    r.A = 0.0;
    for (double x : lemma_basic_iterate(r, 100)) {
        CHECK(x == 0.0);
    }
}

TEST_CASE("recursion parameters are checked") {
    RecursionSpec r;
    r.beta = 1.0;
    CHECK_THROWS_AS(r.validate(), DomainError);
    r.beta = 0.5;
    r.alpha = 0.4;
    CHECK_THROWS_AS(r.validate(), DomainError);
    r.alpha = 1.0;
    r.B = 0.0;
    CHECK_THROWS_AS(lemma_basic_iterate(r, 10), DomainError);
    r.B = 1.0;
    r.A = -1.0;
    CHECK_THROWS_AS(r.validate(), DomainError);
}

TEST_CASE("trend verdicts") {
    CHECK(trend_verdict({0.3, 0.2, 0.1}) == Verdict::converging);
    CHECK(trend_verdict({-0.3, 0.2, -0.1}) == Verdict::converging);
    CHECK(trend_verdict({0.0, 0.0, 0.0}) == Verdict::converging);
    CHECK(trend_verdict({0.1, 0.2, 0.4}) == Verdict::diverging);
    CHECK(trend_verdict({0.1, 0.3, 0.2}) == Verdict::inconclusive);
    CHECK(trend_verdict({0.1}) == Verdict::inconclusive);
    CHECK(trend_verdict({0.1, NAN}) == Verdict::inconclusive);
    CHECK(std::string(to_string(Verdict::converging)) == "converging");
}

TEST_CASE("extrapolated limits") {
    const auto flat = limit_estimate({2.0, 2.0, 2.0, 2.0});
    CHECK(flat.limit == 2.0);
    CHECK(flat.verdict == Verdict::converging);

    for (double delta : {0.25, 0.5, 1.0}) {
        std::vector<double> v;
        for (double n = 10; n <= 1e6; n *= 10) {
            v.push_back(3.0 + 5.0 * std::pow(n, -delta));
        }
        const auto e = limit_estimate(v);
        INFO(delta);
        CHECK(e.limit == doctest::Approx(3.0).epsilon(1e-10));
        CHECK(e.verdict == Verdict::converging);
    }

    const auto osc = limit_estimate({1.0, 2.0, 1.0, 2.0});
    CHECK(osc.limit == 2.0);
    CHECK(osc.verdict == Verdict::inconclusive);

    const auto grow = limit_estimate({1.0, 2.0, 4.0, 8.0});
    CHECK(grow.verdict == Verdict::diverging);
    CHECK(grow.limit == 8.0);

    CHECK(limit_estimate({4.0, 5.0}).limit == 5.0);
}

TEST_CASE("observation times") {
    const auto c = constants(moments(unit_moment_model(2)));
    TableParams p;
    CHECK(observation_time(MRule::sharp, c, 1, p, 10000) == 100);
    CHECK(observation_time(MRule::geometric_mean, c, 1, p, 10000) == 1000);
    CHECK(observation_time(MRule::geometric_mean, c, 0, p, 10000) == 10);
    p.x = 0.5;
    CHECK(observation_time(MRule::final_stage, c, 2, p, 5000) == 2500);
    p.m_fixed = 7;
    CHECK(observation_time(MRule::fixed, c, 1, p, 5) == 4);
    p.m_fixed = 0;
    CHECK(observation_time(MRule::fixed, c, 1, p, 5) == 1);

    CHECK(default_m_rule(TableKind::T2) == MRule::geometric_mean);
    CHECK(default_m_rule(TableKind::T3) == MRule::sharp);
    CHECK(default_m_rule(TableKind::T4) == MRule::geometric_mean);
    CHECK(default_m_rule(TableKind::T5) == MRule::final_stage);
    CHECK(default_m_rule(TableKind::T1) == MRule::fixed);
}

TEST_CASE("survival tail table approaches its asymptote") {
    const auto spec = unit_moment_model(2);
    TableParams p;
    p.i = 1;
    const auto t = theorem_table(TableKind::T1, spec, p, {100, 1000, 10000, 100000});
    REQUIRE(t.rows.size() == 4);
    CHECK(t.verdict == Verdict::converging);
    CHECK(t.rows.back().ratio == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(t.extrapolated - 1.0) < t.last_deviation());
    for (const auto& row : t.rows) {
        CHECK(row.ratio == doctest::Approx(row.exact / row.predicted));
    }
}

TEST_CASE("final-stage and Yaglom tables") {
    const auto spec = unit_moment_model(2);
    TableParams p;
    p.lambda = {1.0};
    p.m_rule = MRule::final_stage;
    p.x = 0.5;
    const auto t5 = theorem_table(TableKind::T5, spec, p, {50, 200, 800, 3200});
    CHECK(t5.verdict == Verdict::converging);
    CHECK(t5.rows.back().m == 1600);
    CHECK(t5.rows.back().ratio == doctest::Approx(1.0).epsilon(0.01));

    const auto y = theorem_table(TableKind::Yaglom, spec, p, {100, 1000, 10000});
    CHECK(y.verdict == Verdict::converging);
    CHECK(y.rows.back().ratio == doctest::Approx(1.0).epsilon(0.01));
    CHECK(y.label.find("yaglom") != std::string::npos);
}

TEST_CASE("shared tables equal single tables") {
    const auto spec = unit_moment_model(2);
    TableParams p;
    p.m_rule = MRule::final_stage;
    const std::vector<std::vector<double>> sets = {{0.5}, {2.0}};
    const std::vector<double> grid = {40, 160, 640};
    const auto many = theorem_tables(TableKind::T5, spec, p, sets, grid);
    REQUIRE(many.size() == 2);
    for (std::size_t k = 0; k < sets.size(); ++k) {
        p.lambda = sets[k];
        const auto one = theorem_table(TableKind::T5, spec, p, grid);
        REQUIRE(one.rows.size() == many[k].rows.size());
        for (std::size_t r = 0; r < grid.size(); ++r) {
            CHECK(one.rows[r].exact == many[k].rows[r].exact);
            CHECK(one.rows[r].predicted == many[k].rows[r].predicted);
        }
        CHECK(one.label == many[k].label);
    }
}
