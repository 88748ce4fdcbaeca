#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwlab/asymptotics.hpp"
#include "gwlab/errors.hpp"
#include "gwlab/model_io.hpp"

#include <cmath>

using namespace gwlab;

namespace {

// b = (1/2, 1/3, 1), m_{12} = 0.4, m_{23} = 2, plus skip-level children.
const char* mixed3 = R"(
[types.1]
own  = { kind = "poisson", mean = 1.0 }
next = { kind = "bernoulli", p = 0.4 }
to_3 = { kind = "poisson", mean = 0.25 }
[types.2]
own  = { kind = "binomial", trials = 3, p = 0.3333333333333333 }
next = { kind = "geometric", mean = 2.0 }
[types.3]
own = { kind = "geometric", mean = 1.0 }
)";

AsymptoticConstants unit(int types) { return constants(moments(unit_moment_model(types))); }

}  // namespace

TEST_CASE("exponents and survival constants") {
    const auto c = unit(3);
    CHECK(c.gamma(0) == 0.0);
    CHECK(c.gamma(1) == doctest::Approx(0.25));
    CHECK(c.gamma(2) == doctest::Approx(0.5));
    CHECK(c.gamma(3) == doctest::Approx(1.0));
    for (int i = 1; i <= 3; ++i) {
        CHECK(c.c(i) == doctest::Approx(1.0));
        CHECK(c.b(i) == doctest::Approx(1.0));
    }
    CHECK(c.g(1) == doctest::Approx(0.25));
    CHECK(c.D(0) == doctest::Approx(1.0));

    // Balancing b_i Q_i^2 against m_{i,i+1} Q_{i+1} gives c_i = sqrt(m_{i,i+1} c_{i+1} / b_i).
    const auto m = constants(moments(parse_model_toml(mixed3)));
    CHECK(m.c(3) == doctest::Approx(1.0));
    CHECK(m.c(2) == doctest::Approx(std::sqrt(2.0 * 1.0 / (1.0 / 3.0))));
    CHECK(m.c(1) == doctest::Approx(std::sqrt(0.4 * std::sqrt(6.0) / 0.5)));
    CHECK(m.m_next(1) == doctest::Approx(0.4));
    // a_{13} = m_{12} m_{23} / 2!
    CHECK(m.a(1, 3) == doctest::Approx(0.4 * 2.0 / 2.0));
    CHECK(m.a(2, 1) == 0.0);
}

TEST_CASE("total-progeny constant of a two-type model") {
    // Type-1 total progeny Y has 1 - E e^{-sY} ~ sqrt(s / b_1); each member has m_{12} type-2
    // children on average, so D_1 = sqrt(m_{12} / b_1).
    OffspringLaw a;
    a.type_index = 1;
    a.components.emplace(1, ComponentLaw::poisson(1.0));
    a.components.emplace(2, ComponentLaw::bernoulli(0.4));
    OffspringLaw b;
    b.type_index = 2;
    b.components.emplace(2, ComponentLaw::geometric(1.0));
    const auto c = constants(moments(ModelSpec({a, b})));
    CHECK(c.D(1) == doctest::Approx(std::sqrt(0.4 / 0.5)));
    CHECK(unit(2).D(1) == doctest::Approx(1.0));
}

TEST_CASE("constants need positive b and next-type means") {
    OffspringLaw a;
    a.type_index = 1;
    a.components.emplace(1, ComponentLaw::geometric(1.0));
    OffspringLaw b;
    b.type_index = 2;
    b.components.emplace(2, ComponentLaw::geometric(1.0));
    CHECK_THROWS_AS(constants(moments(ModelSpec({a, b}))), ConstantsUndefinedError);
    OffspringLaw d;
    d.type_index = 1;
    d.components.emplace(1, ComponentLaw::deterministic(1));
    d.components.emplace(2, ComponentLaw::poisson(1.0));
    CHECK_THROWS_AS(constants(moments(ModelSpec({d, b}))), ConstantsUndefinedError);
}

TEST_CASE("identities hold") {
    for (const auto& c : {unit(2), unit(3), unit(5), constants(moments(parse_model_toml(mixed3)))}) {
        const auto ids = constants_identities(c);
        CHECK(ids.size() == 5);
        for (const auto& r : ids) {
            INFO(r.name);
            CHECK(r.residual <= 1e-12);
        }
    }
}

TEST_CASE("two-type closed form") {
    CHECK(phi_closed_form_pair(1, 1, 0, 1) == doctest::Approx(std::tanh(1.0)).epsilon(1e-14));
    for (double l1 : {0.5, 1.0, 3.0}) {
        CHECK(phi_closed_form_pair(1, 1, l1, 0) == doctest::Approx(l1 / (1 + l1)).epsilon(1e-14));
        // the small-lambda_2 branch joins the general formula continuously
        CHECK(phi_closed_form_pair(1, 1, l1, 1e-13) == doctest::Approx(phi_closed_form_pair(1, 1, l1, 1e-11)).epsilon(1e-9));
    }
    CHECK(phi_closed_form_pair(1, 1, 0, 0) == 0.0);
}

TEST_CASE("characteristics solver matches the closed form") {
    const auto c = unit(2);
    for (double a : {0.0, 0.3, 1.0, 4.0}) {
        for (double b : {0.0, 0.2, 1.0, 7.0}) {
            const double lam[2] = {a, b};
            const double w = phi_closed_form_pair(1, 1, a, b);
            const auto v = phi_solve(c, 1, lam);
            if (w == 0.0) {
                CHECK(std::abs(v.value) < 1e-14);
            } else {
                CHECK(v.value == doctest::Approx(w).epsilon(1e-8));
            }
        }
    }
    // with lambda_2 = 0 only the one-type Laplace limit lambda / (1 + b lambda) remains
    const double lam1[2] = {2.0, 0.0};
    CHECK(phi_solve(c, 1, lam1).value == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("gradients agree with differences of the closed form") {
    const auto c = unit(2);
    const double a = 0.7, b = 1.3, h = 1e-6;
    const double lam[2] = {a, b};
    const double da = (phi_closed_form_pair(1, 1, a + h, b) - phi_closed_form_pair(1, 1, a - h, b)) / (2 * h);
    const double db = (phi_closed_form_pair(1, 1, a, b + h) - phi_closed_form_pair(1, 1, a, b - h)) / (2 * h);
    for (DerivativeMode mode : {DerivativeMode::sensitivity, DerivativeMode::finite_difference}) {
        PhiOptions o;
        o.derivatives = mode;
        const auto v = phi_solve(c, 1, lam, true, o);
        REQUIRE(v.gradient.size() == 2);
        CHECK(v.gradient[0] == doctest::Approx(da).epsilon(1e-6));
        CHECK(v.gradient[1] == doctest::Approx(db).epsilon(1e-6));
    }
    // gradient at the origin
    const double zero[2] = {0.0, 0.0};
    const auto g0 = phi_solve(c, 1, zero, true);
    CHECK(g0.gradient[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g0.gradient[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("limit of rescaled generating functions") {
    const auto spec = unit_moment_model(2);
    const double lam[2] = {0.0, 1.0};
    CHECK(phi_via_pgf_limit(spec, 1, lam, 10000) == doctest::Approx(std::tanh(1.0)).epsilon(0.02));
    const auto s3 = unit_moment_model(3);
    const double l3[3] = {1.0, 2.0, 3.0};
    CHECK(phi_solve(unit(3), 1, l3).value == doctest::Approx(phi_via_pgf_limit(s3, 1, l3, 10000)).epsilon(0.02));
}

TEST_CASE("solver input validation") {
    const auto c = unit(2);
    const double bad[2] = {-1.0, 0.0};
    CHECK_THROWS_AS(phi_solve(c, 1, bad), DomainError);
    const double three[3] = {1, 1, 1};
    CHECK_THROWS_AS(phi_solve(c, 1, three), DomainError);
    const double one[1] = {1.0};
    CHECK_THROWS_AS(phi_solve(c, 3, one), DomainError);
}

TEST_CASE("limit functions are normalized at zero") {
    for (int types : {2, 3, 4}) {
        const auto c = unit(types);
        CHECK(rhs_t2(c, {std::vector<double>(static_cast<std::size_t>(types), 0.0)}) == doctest::Approx(1.0).epsilon(1e-10));
        for (int i = 1; i < types; ++i) {
            const std::vector<double> zi(static_cast<std::size_t>(types - i + 1), 0.0);
            const std::vector<double> zn(static_cast<std::size_t>(types - i), 0.0);
            CHECK(rhs_t3(c, {i, 0.7, zi, T3Exponent::lemma}) == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(rhs_t3(c, {i, 0.7, zi, T3Exponent::theorem}) != doctest::Approx(1.0).epsilon(1e-3));
            CHECK(rhs_t4(c, {i, zn}) == doctest::Approx(1.0).epsilon(1e-10));
        }
        CHECK(rhs_t5(c, {0.5, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rhs_yaglom(c, {0.0}) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("reference values") {
    const auto c = unit(2);
    CHECK(rhs_t5(c, {0.5, 1.0}) == doctest::Approx(0.58423).epsilon(1e-4));
    CHECK(rhs_yaglom(c, {1.0}) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(rhs_t1(c, {1, 1e4}) == doctest::Approx(0.5 * 1e-6));
    CHECK(rhs_tot1(c, {1, 1e-4}) == doctest::Approx(1e-2));
    // Laplace transforms decrease in lambda
    CHECK(rhs_t5(c, {0.5, 2.0}) < rhs_t5(c, {0.5, 1.0}));
    CHECK(rhs_t4(c, {1, {2.0}}) < rhs_t4(c, {1, {1.0}}));
    CHECK(rhs_t2(c, {{1.0, 1.0}}) < rhs_t2(c, {{0.5, 0.5}}));
}

TEST_CASE("dispatch through the variant") {
    const auto c = unit(2);
    const TheoremArgs args[] = {T1Args{1, 100.0}, T2Args{{0.5, 0.5}}, T3Args{1, 1.0, {0.5, 0.5}}, T4Args{1, {1.0}},
                                T5Args{0.5, 1.0}, YaglomArgs{1.0},     Tot1Args{1, 0.01}};
    CHECK(kind_of(args[0]) == TheoremKind::T1);
    CHECK(kind_of(args[6]) == TheoremKind::Tot1);
    CHECK(theorem_rhs(c, args[0]) == rhs_t1(c, std::get<T1Args>(args[0])));
    CHECK(theorem_rhs(c, args[1]) == rhs_t2(c, std::get<T2Args>(args[1])));
    CHECK(theorem_rhs(c, args[2]) == rhs_t3(c, std::get<T3Args>(args[2])));
    CHECK(theorem_rhs(c, args[3]) == rhs_t4(c, std::get<T4Args>(args[3])));
    CHECK(theorem_rhs(c, args[4]) == rhs_t5(c, std::get<T5Args>(args[4])));
    CHECK(theorem_rhs(c, args[5]) == rhs_yaglom(c, std::get<YaglomArgs>(args[5])));
    CHECK(theorem_rhs(c, args[6]) == rhs_tot1(c, std::get<Tot1Args>(args[6])));
    CHECK_THROWS_AS(rhs_t5(c, {1.5, 1.0}), DomainError);
    CHECK_THROWS_AS(rhs_tot1(c, {2, 0.1}), DomainError);
    CHECK_THROWS_AS(rhs_t3(c, {1, 0.0, {0.0, 0.0}}), DomainError);
}
