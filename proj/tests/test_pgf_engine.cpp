#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/errors.hpp"
#include "gwlab/pgf_engine.hpp"

#include <cmath>
#include <numeric>

using namespace gwlab;

namespace {

ModelSpec mixed_pair() {
    OffspringLaw a;
    a.type_index = 1;
    a.components.emplace(1, ComponentLaw::poisson(1.0));
    a.components.emplace(2, ComponentLaw::bernoulli(0.4));
    OffspringLaw b;
    b.type_index = 2;
    b.components.emplace(2, ComponentLaw::geometric(1.0));
    return ModelSpec({a, b});
}

double poisson_pmf(double mu, int k) { return std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0)); }

}  // namespace

TEST_CASE("single-type geometric survival is 1/(n+1)") {
    const auto spec = unit_moment_model(1);
    const auto seq = survival_sequence(spec, 1000);
    for (std::int64_t n : {0, 1, 2, 10, 999, 1000}) {
        CHECK(seq(1, n) == doctest::Approx(1.0 / (static_cast<double>(n) + 1.0)).epsilon(1e-13));
    }
    const auto pmf = extinction_pmf(spec, 1, 10);
    CHECK(pmf.pmf[0] == 0.0);
    CHECK(pmf.pmf[1] == doctest::Approx(0.5));
    CHECK(pmf.pmf[3] == doctest::Approx(1.0 / 12.0));
    CHECK(pmf.tail[3] == doctest::Approx(0.25));
    CHECK(pmf.n_max() == 10);
}

TEST_CASE("extinction law conserves mass") {
    for (int types : {2, 3}) {
        const auto t = extinction_pmf(unit_moment_model(types), 1, 500);
        const double mass = std::accumulate(t.pmf.begin(), t.pmf.end(), 0.0) + t.tail.back();
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));
        for (std::size_t n = 1; n < t.pmf.size(); ++n) {
            CHECK(t.pmf[n] >= 0.0);
            CHECK(t.tail[n] <= t.tail[n - 1]);
        }
    }
}

TEST_CASE("survival sequence of the lowest type decays like the product law predicts") {
    // Q^{(2)} of a two-type model is the single-type sequence of type 2 alone.
    const auto two = survival_sequence(unit_moment_model(2), 200);
    const auto one = survival_sequence(unit_moment_model(1), 200);
    for (std::int64_t n = 0; n <= 200; n += 20) {
        CHECK(two(2, n) == doctest::Approx(one(1, n)).epsilon(1e-14));
        CHECK(two(1, n) >= two(2, n));
    }
}

TEST_CASE("forward iterates form a semigroup") {
    const auto spec = unit_moment_model(3);
    const std::vector<double> s = {0.3, 0.6, 0.8};
    const auto h5 = pgf_forward(spec, 5, s);
    const auto h2 = pgf_forward(spec, 2, s);
    const auto h3_of_h2 = pgf_forward(spec, 3, h2);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(h5[k] == doctest::Approx(h3_of_h2[k]).epsilon(1e-14));
    }
    const auto zero = pgf_forward(spec, 0, s);
    CHECK(zero == s);

    const std::vector<double> q = {0.7, 0.4, 0.2};
    const auto surv = survival_forward(spec, 7, q);
    const std::vector<double> one_minus = {0.3, 0.6, 0.8};
    const auto fwd = pgf_forward(spec, 7, one_minus);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(surv[k] == doctest::Approx(1.0 - fwd[k]).epsilon(1e-13));
    }
}

TEST_CASE("single-type conditional law by hand") {
    // T = 2 means Z(1) > 0 and Z(2) = 0: E[u^{Z(1)}; T = 2] = h(u h(0)) - h(0) with h(s) = 1/(2-s),
    // and P(T = 2) = 1/2 - 1/3.
    const auto spec = unit_moment_model(1);
    for (double u : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        ConditionalLawQuery q;
        q.n = 2;
        q.m = 1;
        q.s = {u};
        const auto r = conditional_laplace(spec, q);
        CHECK(r.value == doctest::Approx(6.0 * (1.0 / (2.0 - u / 2.0) - 0.5)).epsilon(1e-13));
        CHECK(r.denominator == doctest::Approx(1.0 / 6.0));
    }
}

TEST_CASE("two-type conditional law against direct summation over the first generation") {
    // m = 1: E[u^{Z(1)} (x^{Z(1)} - y^{Z(1)})] summed over the offspring pmf.
    const auto spec = mixed_pair();
    const std::int64_t n = 6;
    const auto seq = survival_sequence(spec, n);
    std::vector<double> x(2), y(2);
    for (int l = 1; l <= 2; ++l) {
        x[static_cast<std::size_t>(l - 1)] = 1.0 - seq(l, n - 1);
        y[static_cast<std::size_t>(l - 1)] = 1.0 - seq(l, n - 2);
    }
    const std::vector<double> u = {0.8, 0.6};
    double num = 0;
    for (int a = 0; a < 60; ++a) {
        for (int b = 0; b <= 1; ++b) {
            const double p = poisson_pmf(1.0, a) * (b ? 0.4 : 0.6);
            num += p * (std::pow(u[0] * x[0], a) * std::pow(u[1] * x[1], b) -
                        std::pow(u[0] * y[0], a) * std::pow(u[1] * y[1], b));
        }
    }
    const double den = seq(1, n - 1) - seq(1, n);
    ConditionalLawQuery q;
    q.n = n;
    q.m = 1;
    q.s = u;
    for (Precision prec : {Precision::standard, Precision::compensated}) {
        const auto r = conditional_laplace(spec, q, {prec});
        CHECK(r.value == doctest::Approx(num / den).epsilon(1e-11));
    }
    CHECK(conditional_laplace(spec, seq, q).value == doctest::Approx(num / den).epsilon(1e-11));
}

TEST_CASE("conditional law is normalized and monotone") {
    const auto spec = unit_moment_model(2);
    ConditionalLawQuery q;
    q.n = 400;
    q.m = 150;
    for (Precision prec : {Precision::standard, Precision::compensated}) {
        CHECK(conditional_laplace(spec, q, {prec}).value == doctest::Approx(1.0).epsilon(1e-9));
    }
    double prev = 2.0;
    for (double lam : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        q.lambda = {0.0, lam};
        q.scale = {1.0, 400.0};
        const double v = conditional_laplace(spec, q).value;
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
}

TEST_CASE("standard and compensated precision agree where both are accurate") {
    const auto spec = unit_moment_model(2);
    ConditionalLawQuery q;
    q.n = 3000;
    q.m = 1500;
    q.lambda = {0.0, 1.0};
    q.scale = {1.0, 3000.0};
    const auto a = conditional_laplace(spec, q, {Precision::standard});
    const auto b = conditional_laplace(spec, q, {Precision::compensated});
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-7));
    CHECK(a.rel_error > 0.0);
    CHECK(a.rel_error < 1e-6);
    CHECK(a.denominator == doctest::Approx(b.denominator).epsilon(1e-6));
}

TEST_CASE("stored and streamed snapshots agree") {
    const auto spec = unit_moment_model(3);
    const auto seq = survival_sequence(spec, 300);
    const auto a = conditioning_snapshot(seq, 300, 40);
    const auto b = conditioning_snapshot(spec, 300, 40);
    const auto c = conditioning_snapshot(spec, 300, 40, Precision::compensated);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.q_after[k] == doctest::Approx(b.q_after[k]).epsilon(1e-14));
        CHECK(a.q_before[k] == doctest::Approx(b.q_before[k]).epsilon(1e-14));
        CHECK(c.gap[k] == doctest::Approx(b.gap[k]).epsilon(1e-8));
        CHECK(a.q_after[k] == doctest::Approx(seq(static_cast<int>(k) + 1, 260)).epsilon(1e-14));
    }
    CHECK(c.denominator == doctest::Approx(b.denominator).epsilon(1e-8));
    const std::vector<double> u = {0.9, 0.8, 0.7};
    CHECK(conditional_laplace(spec, a, u).value == doctest::Approx(conditional_laplace(spec, c, u).value).epsilon(1e-8));
}

TEST_CASE("query validation") {
    const auto spec = unit_moment_model(2);
    ConditionalLawQuery q;
    q.n = 10;
    q.m = 0;
    CHECK_THROWS_AS(conditional_laplace(spec, q), DomainError);
    q.m = 10;
    CHECK_THROWS_AS(conditional_laplace(spec, q), DomainError);
    q.m = 5;
    q.s = {1.0};
    CHECK_THROWS_AS(conditional_laplace(spec, q), DomainError);
    q.s = {};
    ConditionalOptions strict;
    strict.floor = 0.5;
    CHECK_THROWS_AS(conditional_laplace(spec, q, strict), ConditioningError);
    CHECK(q.argument(2) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("single-type Yaglom transform is linear fractional") {
    // Z(n) | Z(n) > 0 is geometric on {1, 2, ...} with E[u^Z] = u / (n + 1 - n u).
    const auto spec = unit_moment_model(1);
    CHECK(yaglom_transform(spec, 1, std::log(2.0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    for (std::int64_t n : {1, 5, 50}) {
        const double lam = 0.7;
        const double u = std::exp(-lam / static_cast<double>(n));
        const double nn = static_cast<double>(n);
        CHECK(yaglom_transform(spec, n, lam) == doctest::Approx(u / (nn + 1.0 - nn * u)).epsilon(1e-12));
    }
    CHECK(yaglom_transform(unit_moment_model(2), 100, 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(yaglom_transform(spec, 0, 1.0), DomainError);
}

TEST_CASE("mean matrix powers") {
    const auto spec = unit_moment_model(3);
    const auto m7 = mean_matrix_power(spec, 7);
    // upper-triangular Jordan-type block of ones: (M^n)_{ij} = C(n, j-i)
    CHECK(m7(1, 1) == doctest::Approx(1.0));
    CHECK(m7(1, 2) == doctest::Approx(7.0));
    CHECK(m7(1, 3) == doctest::Approx(21.0));
    CHECK(m7(2, 1) == 0.0);
    const auto m3 = mean_matrix_power(spec, 3);
    const auto m4 = mean_matrix_power(spec, 4);
    const auto prod = m3 * m4;
    for (int i = 1; i <= 3; ++i) {
        for (int j = 1; j <= 3; ++j) {
            CHECK(prod(i, j) == doctest::Approx(m7(i, j)));
        }
    }
    const auto id = mean_matrix_power(spec, 0);
    CHECK(id(2, 2) == 1.0);
    CHECK(id(1, 2) == 0.0);
}

TEST_CASE("second factorial moments grow linearly in the single-type case") {
    const auto spec = unit_moment_model(1);
    for (std::int64_t n : {1, 2, 10, 100}) {
        // E[Z(Z-1)] = n h''(1) for a critical process, and h''(1) = 2 here
        CHECK(second_moments(spec, n)(1, 1, 1) == doctest::Approx(2.0 * static_cast<double>(n)));
    }
    // Two types: compare with a finite difference of the forward pgf
    const auto two = unit_moment_model(2);
    const std::int64_t n = 6;
    const auto b = second_moments(two, n);
    auto h1 = [&](double s1, double s2) {
        const std::vector<double> s = {s1, s2};
        return pgf_forward(two, n, s)[0];
    };
    // one-sided differences have O(h) bias, removed by Richardson extrapolation
    auto diff = [&](double h) { return (h1(1, 1) - h1(1 - h, 1) - h1(1, 1 - h) + h1(1 - h, 1 - h)) / (h * h); };
    const double d12 = 2 * diff(5e-5) - diff(1e-4);
    CHECK(b(1, 1, 2) == doctest::Approx(d12).epsilon(1e-3));
}
