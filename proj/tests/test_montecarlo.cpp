#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/errors.hpp"
#include "gwlab/montecarlo.hpp"
#include "gwlab/pgf_engine.hpp"

#include <algorithm>
#include <cmath>

using namespace gwlab;

namespace {

McConfig config(std::int64_t replicas, int workers = 1, std::uint64_t seed = 3) {
    McConfig c;
    c.seed = seed;
    c.replicas = replicas;
    c.workers = workers;
    return c;
}

}  // namespace

TEST_CASE("results do not depend on the worker count") {
    const auto spec = unit_moment_model(2);
    const auto a = simulate_extinction_times(spec, config(5000, 1), 50);
    const auto b = simulate_extinction_times(spec, config(5000, 3), 50);
    const auto c = simulate_extinction_times(spec, config(5000, 0), 50);
    CHECK(a.counts == b.counts);
    CHECK(a.counts == c.counts);
    CHECK(a.beyond == b.beyond);

    const auto p1 = total_progeny(spec, config(3000, 1), 1, 1, 2);
    const auto p4 = total_progeny(spec, config(3000, 4), 1, 1, 2);
    CHECK(p1.w == p4.w);
    CHECK(p1.w_all == p4.w_all);

    const auto t1 = simulate(spec, config(200, 1));
    const auto t2 = simulate(spec, config(200, 2));
    REQUIRE(t1.size() == t2.size());
    for (std::size_t k = 0; k < t1.size(); ++k) {
        CHECK(t1[k].replica == k);
        CHECK(t1[k].layers == t2[k].layers);
    }
}

TEST_CASE("seeds change the sample") {
    const auto spec = unit_moment_model(2);
    const auto a = simulate_extinction_times(spec, config(2000, 1, 1), 30);
    const auto b = simulate_extinction_times(spec, config(2000, 1, 2), 30);
    CHECK(a.counts != b.counts);
}

TEST_CASE("single-type extinction times follow 1/(n(n+1))") {
    const auto spec = unit_moment_model(1);
    const std::int64_t reps = 100000;
    const auto h = simulate_extinction_times(spec, config(reps, 0), 20);
    CHECK(h.replicas == reps);
    std::int64_t total = h.beyond + h.censored;
    for (std::int64_t n = 1; n <= 20; ++n) {
        const double p = 1.0 / (static_cast<double>(n) * (n + 1.0));
        const double sd = std::sqrt(p * (1 - p) / reps);
        CHECK(std::abs(h.empirical_pmf(n) - p) <= 5 * sd);
        total += h.counts[static_cast<std::size_t>(n)];
    }
    CHECK(total == reps);
    CHECK(h.counts[0] == 0);
    // P(T > 20) = 1/21
    CHECK(std::abs(static_cast<double>(h.beyond) / reps - 1.0 / 21) <= 5 * std::sqrt(1.0 / 21 / reps));
}

TEST_CASE("trajectory layout") {
    const auto spec = unit_moment_model(3);
    for (const auto& s : simulate(spec, config(300))) {
        REQUIRE(!s.layers.empty());
        CHECK(s.layers[0] == std::vector<std::int64_t>{1, 0, 0});
        if (!s.censored) {
            CHECK(s.extinction_time == static_cast<std::int64_t>(s.layers.size()) - 1);
            CHECK(s.extinction_time >= 1);
            CHECK(s.layers.back() == std::vector<std::int64_t>{0, 0, 0});
            for (std::size_t k = 0; k + 1 < s.layers.size(); ++k) {
                const auto& l = s.layers[k];
                CHECK(std::any_of(l.begin(), l.end(), [](std::int64_t z) { return z > 0; }));
            }
        }
    }
}

TEST_CASE("tree profiles keep colors nondecreasing from the root") {
    const auto spec = unit_moment_model(3);
    for (const auto& s : simulate(spec, config(300, 1, 9))) {
        const auto t = tree_export(s);
        if (t.censored) {
            continue;
        }
        CHECK(t.height == s.extinction_time);
        CHECK(static_cast<std::int64_t>(t.layers.size()) == t.height);
        int lowest = 1;
        for (const auto& layer : t.layers) {
            int first = 4;
            for (int c = 0; c < 3; ++c) {
                if (layer[static_cast<std::size_t>(c)] > 0) {
                    first = c + 1;
                    break;
                }
            }
            CHECK(first >= lowest);
            lowest = first;
        }
    }
}

TEST_CASE("population cap censors trajectories") {
    // The cap counts every individual born; with cap 1 any child censors the
    // trajectory, which happens with probability 1 - P(no children) = 1/2.
    const auto spec = unit_moment_model(1);
    auto cfg = config(20000, 0);
    cfg.population_cap = 1;
    const auto h = simulate_extinction_times(spec, cfg, 100);
    CHECK(std::abs(static_cast<double>(h.censored) / 20000 - 0.5) < 5 * std::sqrt(0.25 / 20000));
    CHECK(h.counts[1] == 20000 - h.censored);

    auto gen = config(100);
    gen.max_generations = 3;
    for (const auto& s : simulate(spec, gen)) {
        CHECK(static_cast<std::int64_t>(s.layers.size()) <= 4);
    }
}

TEST_CASE("rejection ensemble for the extinction moment") {
    const auto spec = unit_moment_model(2);
    const std::int64_t n = 30, m = 10;
    const auto ens = conditional_ensemble(spec, n, m, config(200000, 0), 100.0);
    const auto pmf = extinction_pmf(spec, 1, n);
    CHECK(ens.exact_probability == doctest::Approx(pmf.pmf[n]).epsilon(1e-12));
    const double p = ens.exact_probability;
    CHECK(std::abs(ens.acceptance_rate() - p) <= 5 * std::sqrt(p * (1 - p) / 200000));
    CHECK(static_cast<std::int64_t>(ens.samples.size()) == ens.accepted);
    for (const auto& z : ens.samples) {
        CHECK((z[0] > 0 || z[1] > 0));
    }
    const std::vector<double> u = {0.8, 0.9};
    const auto est = ens.laplace(u);
    ConditionalLawQuery q;
    q.n = n;
    q.m = m;
    q.s = u;
    const double exact = conditional_laplace(spec, q).value;
    CHECK(std::abs(est.mean - exact) <= 4 * est.std_error);
}

TEST_CASE("infeasible ensembles are refused") {
    const auto spec = unit_moment_model(2);
    CHECK_THROWS_AS(conditional_ensemble(spec, 200, 100, config(1000)), InfeasibleError);
    CHECK_THROWS_AS(conditional_ensemble(spec, 20, 20, config(1000)), DomainError);
}

TEST_CASE("total progeny of the first type") {
    const auto spec = unit_moment_model(2);
    const auto st = total_progeny(spec, config(20000, 0), 1, 1, 2);
    CHECK(st.w.size() == 20000);
    CHECK(st.one_minus_laplace(0.0).mean == 0.0);
    for (std::size_t k = 0; k < st.w.size(); ++k) {
        CHECK(st.w[k] >= 0);
        CHECK(st.w_all[k] >= st.w[k]);
    }
    // Type-1 total progeny Y: P(Y = 1) = P(no type-1 child) = 1/2, and then
    // W is Poisson(1), so P(W = 0) >= 1/2 * e^{-1}.
    const auto zeros = std::count(st.w.begin(), st.w.end(), 0);
    CHECK(static_cast<double>(zeros) / 20000 > 0.5 * std::exp(-1.0));
    const auto a = st.one_minus_laplace(0.01);
    const auto b = st.one_minus_laplace(0.1);
    CHECK(a.mean < b.mean);
    CHECK(a.std_error > 0.0);
}

TEST_CASE("configuration checks") {
    const auto spec = unit_moment_model(2);
    auto c = config(0);
    CHECK_THROWS_AS(c.validate(spec), DomainError);
    c = config(10);
    c.start_type = 3;
    CHECK_THROWS_AS(c.validate(spec), DomainError);
    c.start_type = 2;
    CHECK_NOTHROW(c.validate(spec));
    CHECK_THROWS_AS(total_progeny(spec, config(10), 2, 1, 2), DomainError);
}
