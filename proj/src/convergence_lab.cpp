#include "gwlab/convergence_lab.hpp"

#include "gwlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace gwlab {

double Perturbation::at(std::int64_t n) const {
    switch (kind) {
        case Kind::zero:
            return 0.0;
        case Kind::power:
            return c / std::pow(static_cast<double>(n), p);
        case Kind::table:
            return n >= 1 && n <= static_cast<std::int64_t>(table.size()) ? table[static_cast<std::size_t>(n - 1)]
                                                                          : 0.0;
    }
    return 0.0;
}

void RecursionSpec::validate() const {
    if (!(A >= 0.0) || !std::isfinite(A)) {
        throw DomainError("recursion needs A >= 0");
    }
    if (!(B > 0.0) || !std::isfinite(B)) {
        throw DomainError("recursion needs B > 0");
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw DomainError("recursion needs beta in (0,1)");
    }
    if (!(alpha > beta) || !std::isfinite(alpha)) {
        throw DomainError("recursion needs alpha > beta");
    }
}

std::vector<double> lemma_basic_iterate(const RecursionSpec& r, std::int64_t n_max) {
    r.validate();
    if (n_max < 1) {
        throw DomainError("n_max must be >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(n_max + 1), 0.0);
    double delta = 0.0;
    for (std::int64_t n = 1; n <= n_max; ++n) {
        const double nd = static_cast<double>(n);
        delta = r.A * std::pow(nd, -r.alpha) * (1.0 + r.eps1.at(n)) +
                delta * (1.0 - r.B * std::pow(nd, -r.beta) * (1.0 + r.eps2.at(n)));
        out[static_cast<std::size_t>(n)] = std::pow(nd, r.alpha - r.beta) * delta;
    }
    return out;
}

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::converging:
            return "converging";
        case Verdict::inconclusive:
            return "inconclusive";
        case Verdict::diverging:
            return "diverging";
    }
    return "?";
}

Verdict trend_verdict(const std::vector<double>& deviations) {
    if (deviations.size() < 2) {
        return Verdict::inconclusive;
    }
    bool all_zero = true;
    bool shrink = true;
    bool grow = true;
    for (std::size_t k = 0; k < deviations.size(); ++k) {
        const double d = std::abs(deviations[k]);
        if (!std::isfinite(d)) {
            return Verdict::inconclusive;
        }
        all_zero = all_zero && d == 0.0;
        if (k > 0) {
            const double prev = std::abs(deviations[k - 1]);
            shrink = shrink && d < prev;
            grow = grow && d > prev;
        }
    }
    if (all_zero || shrink) {
        return Verdict::converging;
    }
    return grow ? Verdict::diverging : Verdict::inconclusive;
}

LimitEstimate limit_estimate(const std::vector<double>& values) {
    LimitEstimate e;
    if (values.empty()) {
        return e;
    }
    e.limit = values.back();
    if (values.size() < 3) {
        return e;
    }
    std::vector<double> diffs;
    for (std::size_t k = 1; k < values.size(); ++k) {
        diffs.push_back(values[k] - values[k - 1]);
    }
    e.verdict = trend_verdict(diffs);
    const double d1 = diffs[diffs.size() - 2];
    const double d2 = diffs.back();
    if (d1 != 0.0) {
        const double rho = d2 / d1;
        if (rho > 0.0 && rho < 1.0) {
            e.limit = values.back() + d2 * rho / (1.0 - rho);
        }
    }
    return e;
}

const char* to_string(TableKind k) noexcept {
    switch (k) {
        case TableKind::T1:
            return "T1";
        case TableKind::Survival:
            return "survival";
        case TableKind::T2:
            return "T2";
        case TableKind::T3:
            return "T3";
        case TableKind::T4:
            return "T4";
        case TableKind::T5:
            return "T5";
        case TableKind::Yaglom:
            return "yaglom";
        case TableKind::Tot1:
            return "Tot1";
    }
    return "?";
}

const char* to_string(MRule r) noexcept {
    switch (r) {
        case MRule::fixed:
            return "fixed";
        case MRule::sharp:
            return "sharp";
        case MRule::geometric_mean:
            return "geometric_mean";
        case MRule::final_stage:
            return "final_stage";
    }
    return "?";
}

MRule default_m_rule(TableKind k) noexcept {
    switch (k) {
        case TableKind::T2:
        case TableKind::T4:
            return MRule::geometric_mean;
        case TableKind::T3:
            return MRule::sharp;
        case TableKind::T5:
            return MRule::final_stage;
        default:
            return MRule::fixed;
    }
}

std::int64_t observation_time(MRule rule, const AsymptoticConstants& c, int i, const TableParams& p, std::int64_t n) {
    const double nd = static_cast<double>(n);
    double m = 0.0;
    switch (rule) {
        case MRule::fixed:
            m = static_cast<double>(p.m_fixed);
            break;
        case MRule::sharp:
            m = p.y * std::pow(nd, c.gamma(i));
            break;
        case MRule::geometric_mean:
            m = std::pow(nd, 0.5 * (c.gamma(i) + c.gamma(i + 1)));
            break;
        case MRule::final_stage:
            m = p.x * nd;
            break;
    }
    const auto r = static_cast<std::int64_t>(std::llround(m));
    return std::clamp<std::int64_t>(r, 1, n - 1);
}

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t k = 0; k < v.size(); ++k) {
        s += (k ? "," : "") + fmt(v[k]);
    }
    return s + ")";
}

void finish(ConvergenceTable& t) {
    std::vector<double> ratios;
    std::vector<double> dev;
    for (const auto& r : t.rows) {
        ratios.push_back(r.ratio);
        dev.push_back(r.ratio - 1.0);
    }
    t.extrapolated = limit_estimate(ratios).limit;
    t.verdict = dev.size() >= 3 ? trend_verdict(dev) : Verdict::inconclusive;
}

// Argument and predicted value of one conditional-regime query.
struct RegimeQuery {
    std::vector<double> u;
    double predicted = 0.0;
};

RegimeQuery regime_query(TableKind kind, const AsymptoticConstants& c, const TableParams& params,
                         const std::vector<double>& lambda, std::int64_t n, std::int64_t m) {
    const int types = c.types();
    const auto nt = static_cast<std::size_t>(types);
    const int i = params.i;
    const double nd = static_cast<double>(n);
    const double md = static_cast<double>(m);
    ConditionalLawQuery q;
    q.n = n;
    q.m = m;
    q.lambda.assign(nt, 0.0);
    q.scale.assign(nt, 1.0);
    RegimeQuery out;
    // scalings: Z_l/m^l, Z_l/n^{(l-i+1)gamma_i}, Z_l/(n^{gamma_{i+1}} m^{l-i-1}), Z_N/(b_N n)
    if (kind == TableKind::T2) {
        for (int l = 1; l <= types; ++l) {
            q.lambda[static_cast<std::size_t>(l - 1)] = lambda.at(static_cast<std::size_t>(l - 1));
            q.scale[static_cast<std::size_t>(l - 1)] = std::pow(md, l);
        }
        out.predicted = rhs_t2(c, {lambda}, params.phi);
    } else if (kind == TableKind::T3) {
        for (int l = i; l <= types; ++l) {
            q.lambda[static_cast<std::size_t>(l - 1)] = lambda.at(static_cast<std::size_t>(l - i));
            q.scale[static_cast<std::size_t>(l - 1)] = std::pow(nd, (l - i + 1) * c.gamma(i));
        }
        out.predicted = rhs_t3(c, {i, params.y, lambda, params.exponent}, params.phi);
    } else if (kind == TableKind::T4) {
        for (int l = i + 1; l <= types; ++l) {
            q.lambda[static_cast<std::size_t>(l - 1)] = lambda.at(static_cast<std::size_t>(l - i - 1));
            q.scale[static_cast<std::size_t>(l - 1)] = std::pow(nd, c.gamma(i + 1)) * std::pow(md, l - i - 1);
        }
        out.predicted = rhs_t4(c, {i, lambda});
    } else {
        q.lambda[nt - 1] = lambda.at(0);
        q.scale[nt - 1] = c.b(types) * nd;
        out.predicted = rhs_t5(c, {params.x, lambda.at(0)});
    }
    out.u = q.argument(types);
    return out;
}

std::vector<ConvergenceTable> conditional_tables(TableKind kind, const ModelSpec& spec, const AsymptoticConstants& c,
                                                 const TableParams& params,
                                                 const std::vector<std::vector<double>>& lambda_sets,
                                                 const std::vector<double>& grid) {
    if (spec.types() < 2 && kind != TableKind::T5) {
        throw DomainError("conditional regimes T2-T4 need N >= 2");
    }
    const int level = kind == TableKind::T2 ? 0 : params.i;
    ConditionalOptions opts;
    opts.precision = params.precision;
    std::vector<ConvergenceTable> tables(lambda_sets.size());
    for (double g : grid) {
        const auto n = static_cast<std::int64_t>(g);
        const std::int64_t m = observation_time(params.m_rule, c, level, params, n);
        const ConditioningSnapshot snap = conditioning_snapshot(spec, n, m, params.precision);
        for (std::size_t k = 0; k < lambda_sets.size(); ++k) {
            const RegimeQuery rq = regime_query(kind, c, params, lambda_sets[k], n, m);
            const ConditionalResult r = conditional_laplace(spec, snap, rq.u, opts);
            tables[k].rows.push_back({g, m, r.value, rq.predicted, r.value / rq.predicted, r.rel_error * std::abs(r.value)});
        }
    }
    for (std::size_t k = 0; k < lambda_sets.size(); ++k) {
        ConvergenceTable& t = tables[k];
        t.kind = kind;
        t.label = std::string(to_string(kind)) + " i=" + std::to_string(params.i) + " lambda=" + join(lambda_sets[k]) +
                  " m_rule=" + to_string(params.m_rule) + " precision=" + to_string(params.precision);
        if (kind == TableKind::T3) {
            t.label += " y=" + fmt(params.y) + " exponent=" + to_string(params.exponent);
        }
        if (kind == TableKind::T5) {
            t.label += " x=" + fmt(params.x);
        }
        finish(t);
    }
    return tables;
}

}  // namespace

ConvergenceTable theorem_table(TableKind kind, const ModelSpec& spec, const TableParams& params,
                               const std::vector<double>& grid) {
    const AsymptoticConstants c = constants(moments(spec));
    const int types = spec.types();
    const int i = params.i;
    ConvergenceTable t;
    t.kind = kind;
    if (grid.empty()) {
        throw DomainError("theorem_table needs a nonempty grid");
    }

    auto add_row = [&](double n, std::int64_t m, double exact, double predicted, double err) {
        t.rows.push_back({n, m, exact, predicted, exact / predicted, err});
    };

    switch (kind) {
        case TableKind::T1:
        case TableKind::Survival: {
            if (i < 1 || i > types) {
                throw DomainError("type index out of range");
            }
            std::int64_t n_max = 1;
            for (double g : grid) {
                n_max = std::max(n_max, static_cast<std::int64_t>(g));
            }
            const SurvivalSequence seq = survival_sequence(spec, n_max);
            for (double g : grid) {
                const auto n = static_cast<std::int64_t>(g);
                if (n < 1) {
                    throw DomainError("grid values must be >= 1");
                }
                if (kind == TableKind::T1) {
                    add_row(g, 0, seq(i, n - 1) - seq(i, n), rhs_t1(c, {i, g}), 0.0);
                } else {
                    add_row(g, 0, seq(i, n), c.c(i) * std::pow(g, -c.gamma(i)), 0.0);
                }
            }
            t.label = std::string(to_string(kind)) + " i=" + std::to_string(i);
            break;
        }
        case TableKind::T2:
        case TableKind::T3:
        case TableKind::T4:
        case TableKind::T5:
            return conditional_tables(kind, spec, c, params, {params.lambda}, grid).front();
        case TableKind::Yaglom: {
            const double lam = params.lambda.at(0);
            for (double g : grid) {
                add_row(g, 0, yaglom_transform(spec, static_cast<std::int64_t>(g), lam), rhs_yaglom(c, {lam}), 0.0);
            }
            t.label = "yaglom lambda=" + fmt(lam);
            break;
        }
        case TableKind::Tot1: {
            const ProgenyStats st = total_progeny(spec, params.mc, 1, i, i + 1);
            for (double lam : grid) {
                const Estimate e = st.one_minus_laplace(lam);
                add_row(lam, 0, e.mean, rhs_tot1(c, {i, lam}), e.std_error);
            }
            t.label = "Tot1 i=" + std::to_string(i) + " replicas=" + std::to_string(params.mc.replicas) +
                      " censored=" + std::to_string(st.censored_count);
            break;
        }
    }
    finish(t);
    return t;
}


std::vector<ConvergenceTable> theorem_tables(TableKind kind, const ModelSpec& spec, const TableParams& params,
                                             const std::vector<std::vector<double>>& lambda_sets,
                                             const std::vector<double>& grid) {
    switch (kind) {
        case TableKind::T2:
        case TableKind::T3:
        case TableKind::T4:
        case TableKind::T5:
            if (grid.empty()) {
                throw DomainError("theorem_table needs a nonempty grid");
            }
            return conditional_tables(kind, spec, constants(moments(spec)), params, lambda_sets, grid);
        default:
            break;
    }
    std::vector<ConvergenceTable> out;
    for (const auto& l : lambda_sets) {
        TableParams p = params;
        p.lambda = l;
        out.push_back(theorem_table(kind, spec, p, grid));
    }
    return out;
}

}  // namespace gwlab
