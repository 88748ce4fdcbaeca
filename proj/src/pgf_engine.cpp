#include "gwlab/pgf_engine.hpp"

#include "gwlab/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gwlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_unit_vector(std::span<const double> v, int types, const char* what) {
    if (v.size() != static_cast<std::size_t>(types)) {
        throw DomainError(std::string(what) + " needs " + std::to_string(types) + " coordinates, got " +
                          std::to_string(v.size()));
    }
    for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw DomainError(std::string(what) + " coordinate " + std::to_string(x) + " outside [0,1]");
        }
    }
}

void check_window(std::int64_t n, std::int64_t m) {
    if (n < 2 || m < 1 || m > n - 1) {
        throw DomainError("observation time m=" + std::to_string(m) + " must satisfy 1 <= m <= n-1 (n=" +
                          std::to_string(n) + ")");
    }
}

}  // namespace

SurvivalSequence::SurvivalSequence(int types, std::int64_t n_max)
    : types_(types), n_max_(n_max), q_(static_cast<std::size_t>(n_max + 1) * types, 0.0) {}

SurvivalSequence survival_sequence(const ModelSpec& spec, std::int64_t n_max) {
    if (n_max < 1) {
        throw DomainError("n_max must be >= 1");
    }
    SurvivalSequence seq(spec.types(), n_max);
    for (double& v : seq.at(0)) {
        v = 1.0;
    }
    for (std::int64_t n = 1; n <= n_max; ++n) {
        survival_step(spec, seq.at(n - 1), seq.at(n));
    }
    return seq;
}

ExtinctionPmfTable extinction_pmf(const SurvivalSequence& seq, int i) {
    if (i < 1 || i > seq.types()) {
        throw DomainError("type index " + std::to_string(i) + " out of range");
    }
    ExtinctionPmfTable t;
    t.type_index = i;
    const auto n_max = seq.n_max();
    t.pmf.assign(static_cast<std::size_t>(n_max + 1), 0.0);
    t.tail.assign(static_cast<std::size_t>(n_max + 1), 0.0);
    t.tail[0] = seq(i, 0);
    for (std::int64_t n = 1; n <= n_max; ++n) {
        t.pmf[static_cast<std::size_t>(n)] = seq(i, n - 1) - seq(i, n);
        t.tail[static_cast<std::size_t>(n)] = seq(i, n);
    }
    return t;
}

ExtinctionPmfTable extinction_pmf(const ModelSpec& spec, int i, std::int64_t n_max) {
    return extinction_pmf(survival_sequence(spec, n_max), i);
}

std::vector<double> pgf_forward(const ModelSpec& spec, std::int64_t m, std::span<const double> s) {
    const int n = spec.types();
    check_unit_vector(s, n, "pgf_forward argument");
    if (m < 0) {
        throw DomainError("pgf_forward needs m >= 0");
    }
    std::vector<double> cur(s.begin(), s.end());
    std::vector<double> next(cur.size());
    for (std::int64_t k = 0; k < m; ++k) {
        pgf_step(spec, cur, next);
        cur.swap(next);
    }
    return cur;
}

std::vector<double> survival_forward(const ModelSpec& spec, std::int64_t m, std::span<const double> q) {
    const int n = spec.types();
    check_unit_vector(q, n, "survival_forward argument");
    if (m < 0) {
        throw DomainError("survival_forward needs m >= 0");
    }
    std::vector<double> cur(q.begin(), q.end());
    std::vector<double> next(cur.size());
    for (std::int64_t k = 0; k < m; ++k) {
        survival_step(spec, cur, next);
        cur.swap(next);
    }
    return cur;
}

const char* to_string(Precision p) noexcept {
    return p == Precision::compensated ? "compensated" : "standard";
}

std::vector<double> ConditionalLawQuery::argument(int types) const {
    const auto n = static_cast<std::size_t>(types);
    auto check_len = [&](const std::vector<double>& v, const char* name) {
        if (!v.empty() && v.size() != n) {
            throw DomainError(std::string("query ") + name + " needs " + std::to_string(types) +
                              " coordinates, got " + std::to_string(v.size()));
        }
    };
    check_len(s, "s");
    check_len(lambda, "lambda");
    check_len(scale, "scale");
    std::vector<double> u(n, 1.0);
    for (std::size_t l = 0; l < n; ++l) {
        const double sl = s.empty() ? 1.0 : s[l];
        const double lam = lambda.empty() ? 0.0 : lambda[l];
        const double sc = scale.empty() ? 1.0 : scale[l];
        if (!(sl >= 0.0 && sl <= 1.0)) {
            throw DomainError("query s coordinate outside [0,1]");
        }
        if (!(lam >= 0.0) || !(sc > 0.0)) {
            throw DomainError("query needs lambda >= 0 and scale > 0");
        }
        u[l] = sl * std::exp(-lam / sc);
    }
    return u;
}

ConditioningSnapshot conditioning_snapshot(const ModelSpec& spec, std::int64_t n, std::int64_t m,
                                           Precision precision) {
    check_window(n, m);
    const int types = spec.types();
    const auto nt = static_cast<std::size_t>(types);
    ConditioningSnapshot snap;
    snap.n = n;
    snap.m = m;
    snap.precision = precision;
    const std::int64_t k_obs = n - m;

    std::vector<double> q_prev(nt, 1.0);  // Q_{k-1}
    std::vector<double> q_cur(nt, 1.0);   // Q_k
    std::vector<double> q_next(nt);
    survival_step(spec, q_prev, q_cur);   // k = 1

    if (precision == Precision::standard) {
        for (std::int64_t k = 1; k <= n; ++k) {
            if (k == k_obs) {
                snap.q_before = q_prev;
                snap.q_after = q_cur;
            }
            if (k == n) {
                break;
            }
            survival_step(spec, q_cur, q_next);
            q_prev.swap(q_cur);
            q_cur.swap(q_next);
        }
        snap.gap.resize(nt);
        for (std::size_t l = 0; l < nt; ++l) {
            snap.gap[l] = snap.q_before[l] - snap.q_after[l];
        }
        snap.denominator = q_prev[0] - q_cur[0];
        return snap;
    }

    // P_k = Q_{k-1} - Q_k; P_1 = h(0) and
    // P_{k+1} = h(1 - Q_k) - h(1 - Q_{k-1}) = increment at base 1 - Q_{k-1} by P_k.
    std::vector<double> p_cur(nt);
    {
        const std::vector<double> zeros(nt, 0.0);
        pgf_step(spec, zeros, p_cur);
    }
    std::vector<double> base(nt);
    std::vector<double> value(nt);
    std::vector<double> p_next(nt);
    for (std::int64_t k = 1; k <= n; ++k) {
        if (k == k_obs) {
            snap.q_before = q_prev;
            snap.q_after = q_cur;
            snap.gap = p_cur;
        }
        if (k == n) {
            break;
        }
        for (std::size_t l = 0; l < nt; ++l) {
            base[l] = 1.0 - q_prev[l];
        }
        pgf_increment_step(spec, base, p_cur, value, p_next);
        survival_step(spec, q_cur, q_next);
        q_prev.swap(q_cur);
        q_cur.swap(q_next);
        p_cur.swap(p_next);
    }
    snap.denominator = p_cur[0];
    return snap;
}

ConditioningSnapshot conditioning_snapshot(const SurvivalSequence& seq, std::int64_t n, std::int64_t m) {
    check_window(n, m);
    if (n > seq.n_max()) {
        throw DomainError("survival sequence ends at " + std::to_string(seq.n_max()) + " < n=" + std::to_string(n));
    }
    ConditioningSnapshot snap;
    snap.n = n;
    snap.m = m;
    const auto before = seq.at(n - m - 1);
    const auto after = seq.at(n - m);
    snap.q_before.assign(before.begin(), before.end());
    snap.q_after.assign(after.begin(), after.end());
    snap.gap.resize(snap.q_before.size());
    for (std::size_t l = 0; l < snap.gap.size(); ++l) {
        snap.gap[l] = snap.q_before[l] - snap.q_after[l];
    }
    snap.denominator = seq(1, n - 1) - seq(1, n);
    return snap;
}

ConditionalResult conditional_laplace(const ModelSpec& spec, const ConditioningSnapshot& snap,
                                      std::span<const double> u, const ConditionalOptions& opts) {
    const int types = spec.types();
    const auto nt = static_cast<std::size_t>(types);
    check_unit_vector(u, types, "conditional argument");
    if (snap.q_before.size() != nt) {
        throw DomainError("snapshot does not match the model");
    }
    ConditionalResult res;
    res.denominator = snap.denominator;
    if (!(snap.denominator > opts.floor)) {
        throw ConditioningError("conditioning event too rare at this precision: P(T=" + std::to_string(snap.n) +
                                ") = " + std::to_string(snap.denominator) + " is below the floor " +
                                std::to_string(opts.floor));
    }
    const double steps = static_cast<double>(snap.m + 1);

    if (opts.precision == Precision::standard) {
        std::vector<double> a(nt);
        std::vector<double> b(nt);
        for (std::size_t l = 0; l < nt; ++l) {
            a[l] = u[l] * (1.0 - snap.q_after[l]);
            b[l] = u[l] * (1.0 - snap.q_before[l]);
        }
        std::vector<double> tmp(nt);
        for (std::int64_t k = 0; k < snap.m; ++k) {
            pgf_step(spec, a, tmp);
            a.swap(tmp);
            pgf_step(spec, b, tmp);
            b.swap(tmp);
        }
        const double diff = a[0] - b[0];
        res.value = diff / snap.denominator;
        res.rel_error = diff > 0.0 ? steps * kEps * a[0] / diff : std::numeric_limits<double>::infinity();
        if (a[0] == 0.0) {
            res.rel_error = 0.0;
        }
        return res;
    }

    std::vector<double> base(nt);
    std::vector<double> inc(nt);
    for (std::size_t l = 0; l < nt; ++l) {
        base[l] = u[l] * (1.0 - snap.q_before[l]);
        inc[l] = u[l] * snap.gap[l];
    }
    std::vector<double> value(nt);
    std::vector<double> inc_next(nt);
    for (std::int64_t k = 0; k < snap.m; ++k) {
        pgf_increment_step(spec, base, inc, value, inc_next);
        base.swap(value);
        inc.swap(inc_next);
    }
    res.value = inc[0] / snap.denominator;
    res.rel_error = 4.0 * steps * static_cast<double>(types) * kEps;
    return res;
}

ConditionalResult conditional_laplace(const ModelSpec& spec, const SurvivalSequence& seq,
                                      const ConditionalLawQuery& query, const ConditionalOptions& opts) {
    const auto u = query.argument(spec.types());
    return conditional_laplace(spec, conditioning_snapshot(seq, query.n, query.m), u, opts);
}

ConditionalResult conditional_laplace(const ModelSpec& spec, const ConditionalLawQuery& query,
                                      const ConditionalOptions& opts) {
    const auto u = query.argument(spec.types());
    return conditional_laplace(spec, conditioning_snapshot(spec, query.n, query.m, opts.precision), u, opts);
}

double yaglom_transform(const ModelSpec& spec, std::int64_t n, double lambda) {
    if (n < 1) {
        throw DomainError("yaglom_transform needs n >= 1");
    }
    if (!(lambda >= 0.0)) {
        throw DomainError("yaglom_transform needs lambda >= 0");
    }
    const int types = spec.types();
    const auto nt = static_cast<std::size_t>(types);
    const double b_last = 0.5 * spec.components(types).front().law.variance();
    if (!(b_last > 0.0)) {
        throw DomainError("yaglom_transform needs b_N > 0");
    }
    // (H_n(1,..,1,u) - (1 - Q_n)) / Q_n = 1 - S_n(q) / Q_n, q = (0,..,0,1-u)
    std::vector<double> q(nt, 0.0);
    q[nt - 1] = -std::expm1(-lambda / (b_last * static_cast<double>(n)));
    std::vector<double> alive(nt, 1.0);
    const auto s = survival_forward(spec, n, q);
    const auto all = survival_forward(spec, n, alive);
    return 1.0 - s[0] / all[0];
}

Matrix mean_matrix_power(const ModelSpec& spec, std::int64_t n) {
    if (n < 0) {
        throw DomainError("mean_matrix_power needs n >= 0");
    }
    Matrix base = moments(spec).mean_matrix;
    Matrix out = Matrix::identity(spec.types());
    while (n > 0) {
        if (n & 1) {
            out = out * base;
        }
        n >>= 1;
        if (n > 0) {
            base = base * base;
        }
    }
    return out;
}

Tensor3 second_moments(const ModelSpec& spec, std::int64_t n) {
    if (n < 0) {
        throw DomainError("second_moments needs n >= 0");
    }
    const int types = spec.types();
    const MomentSummary mom = moments(spec);
    Tensor3 f(types);
    Matrix mn = Matrix::identity(types);  // M^k
    // F_i(k+1)(p,q) = sum_j m_ij F_j(k)(p,q) + sum_{j,l} b_ijl m_jp(k) m_lq(k)
    for (std::int64_t k = 0; k < n; ++k) {
        Tensor3 next(types);
        for (int i = 1; i <= types; ++i) {
            for (int p = 1; p <= types; ++p) {
                for (int q = 1; q <= types; ++q) {
                    double v = 0.0;
                    for (int j = i; j <= types; ++j) {
                        v += mom.mean_matrix(i, j) * f(j, p, q);
                    }
                    for (int j = i; j <= types; ++j) {
                        const double mjp = mn(j, p);
                        if (mjp == 0.0) {
                            continue;
                        }
                        for (int l = i; l <= types; ++l) {
                            v += mom.second_moments(i, j, l) * mjp * mn(l, q);
                        }
                    }
                    next(i, p, q) = v;
                }
            }
        }
        f = std::move(next);
        mn = mn * mom.mean_matrix;
    }
    return f;
}

}  // namespace gwlab
