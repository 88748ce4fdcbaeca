#include "gwlab/asymptotics.hpp"

#include "gwlab/errors.hpp"
#include "gwlab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gwlab {

namespace {

double rel_gap(double x, double y) {
    const double s = std::max(std::abs(x), std::abs(y));
    return s == 0.0 ? 0.0 : std::abs(x - y) / s;
}

void check_type(const AsymptoticConstants& c, int i, int lo, int hi, const char* what) {
    if (i < lo || i > hi) {
        throw DomainError(std::string(what) + ": index " + std::to_string(i) + " outside " + std::to_string(lo) +
                          ".." + std::to_string(hi) + " for N=" + std::to_string(c.types()));
    }
}

void check_lambda(std::span<const double> lambda, std::size_t dim, const char* what) {
    if (lambda.size() != dim) {
        throw DomainError(std::string(what) + " needs " + std::to_string(dim) + " lambda coordinates, got " +
                          std::to_string(lambda.size()));
    }
    for (double l : lambda) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw DomainError(std::string(what) + ": lambda coordinates must be finite and >= 0");
        }
    }
}

}  // namespace

AsymptoticConstants constants(const MomentSummary& mom) {
    AsymptoticConstants out;
    const int n = mom.types();
    out.n_ = n;
    const auto sz = static_cast<std::size_t>(n + 1);
    out.gamma_.assign(sz, 0.0);
    out.b_.assign(sz, 0.0);
    out.m_next_.assign(sz, 0.0);
    out.c_.assign(sz, 0.0);
    out.c1_.assign(sz, 0.0);
    out.d_.assign(static_cast<std::size_t>(n), 0.0);
    out.a_ = Matrix(n);

    for (int i = 1; i <= n; ++i) {
        const double b = mom.half_variance(i);
        if (!(b > 0.0) || !std::isfinite(b)) {
            throw ConstantsUndefinedError("b_" + std::to_string(i) + " = " + std::to_string(b) + " is not in (0, inf)");
        }
        out.b_[static_cast<std::size_t>(i)] = b;
        out.gamma_[static_cast<std::size_t>(i)] = std::ldexp(1.0, -(n - i));
        if (i < n) {
            const double m = mom.mean_matrix(i, i + 1);
            if (!(m > 0.0) || !std::isfinite(m)) {
                throw ConstantsUndefinedError("m_{" + std::to_string(i) + "," + std::to_string(i + 1) +
                                              "} = " + std::to_string(m) + " is not in (0, inf)");
            }
            out.m_next_[static_cast<std::size_t>(i)] = m;
        }
    }

    for (int i = 1; i <= n; ++i) {
        out.a_(i, i) = 1.0;
        double prod = 1.0;
        double fact = 1.0;
        for (int j = i + 1; j <= n; ++j) {
            prod *= out.m_next(j - 1);
            fact *= j - i;
            out.a_(i, j) = prod / fact;
        }
    }

    // c_{i,N} = (1/b_N)^{gamma_i} prod_{j=i}^{N-1} (m_{j,j+1}/b_j)^{1/2^{j-i+1}}
    for (int i = 1; i <= n; ++i) {
        double v = std::pow(1.0 / out.b(n), out.gamma(i));
        for (int j = i; j < n; ++j) {
            v *= std::pow(out.m_next(j) / out.b(j), std::ldexp(1.0, -(j - i + 1)));
        }
        out.c_[static_cast<std::size_t>(i)] = v;
    }
    // same formula for the process truncated to types 1..i
    for (int i = 1; i <= n; ++i) {
        double v = std::pow(1.0 / out.b(i), std::ldexp(1.0, -(i - 1)));
        for (int j = 1; j < i; ++j) {
            v *= std::pow(out.m_next(j) / out.b(j), std::ldexp(1.0, -j));
        }
        out.c1_[static_cast<std::size_t>(i)] = v;
    }
    out.d_[0] = 1.0;
    for (int i = 1; i < n; ++i) {
        out.d_[static_cast<std::size_t>(i)] = std::pow(out.b(i) * out.m_next(i), std::ldexp(1.0, -i)) * out.c1(i);
    }
    return out;
}

std::vector<IdentityResidual> constants_identities(const AsymptoticConstants& c) {
    const int n = c.types();
    std::vector<IdentityResidual> out;

    double r = std::abs(c.gamma(n) - 1.0);
    for (int i = 1; i < n; ++i) {
        r = std::max(r, rel_gap(c.gamma(i + 1), 2.0 * c.gamma(i)));
    }
    out.push_back({"gamma_doubling", r});

    r = 0.0;
    for (int i = 1; i <= n; ++i) {
        r = std::max(r, std::abs(c.a(i, i) - 1.0));
        double prod = 1.0;
        for (int k = i + 1; k <= n; ++k) {
            prod *= c.m_next(k - 1);
            r = std::max(r, rel_gap(c.f(k, i) / (k - i), prod / std::tgamma(k - i + 1.0)));
        }
    }
    out.push_back({"a_f_relation", r});

    r = rel_gap(c.c(n), 1.0 / c.b(n));
    for (int i = 1; i < n; ++i) {
        r = std::max(r, rel_gap(c.c(i), std::sqrt(c.m_next(i) * c.c(i + 1) / c.b(i))));
    }
    out.push_back({"c_recursion", r});

    r = 0.0;
    for (int i = 2; i <= n; ++i) {
        r = std::max(r, rel_gap(c.c(1), c.D(i - 1) * std::pow(c.c(i), std::ldexp(1.0, -(i - 1)))));
    }
    out.push_back({"c_D_connection", r});

    r = 0.0;
    for (int j = 1; j < n; ++j) {
        const double lhs = c.m_next(j) * c.g(j + 1) / (2.0 * c.b(j));
        const double mid = c.gamma(j) * c.c(j) * c.c(j);
        const double rhs = c.c(j) * c.g(j);
        r = std::max({r, rel_gap(lhs, mid), rel_gap(mid, rhs)});
    }
    out.push_back({"local_extinction_identity", r});
    return out;
}

PhiSolver::PhiSolver(const AsymptoticConstants& c, int i, PhiOptions opts)
    : i_(i), dim_(c.types() - i + 1), opts_(opts) {
    check_type(c, i, 1, c.types() - 1, "Phi_i is defined for 1 <= i < N");
    b_ = c.b(i);
    const auto d = static_cast<std::size_t>(dim_);
    f_.resize(d);
    alpha_.resize(d);
    beta_.resize(d * d);
    for (int k = 0; k < dim_; ++k) {
        f_[static_cast<std::size_t>(k)] = c.f(i + k, i);
        alpha_[static_cast<std::size_t>(k)] = c.a(i, i + k);
    }
    // (w_k + w_l - 1) beta_kl = -b alpha_k alpha_l with w_k = k + 1
    for (int k = 0; k < dim_; ++k) {
        for (int l = 0; l < dim_; ++l) {
            beta_[static_cast<std::size_t>(k * dim_ + l)] =
                -b_ * alpha_[static_cast<std::size_t>(k)] * alpha_[static_cast<std::size_t>(l)] / (k + l + 1);
        }
    }
}

PhiValue PhiSolver::operator()(std::span<const double> lambda, bool with_gradient) const {
    check_lambda(lambda, static_cast<std::size_t>(dim_), "phi_solve");
    if (!with_gradient) {
        return solve(lambda, false);
    }
    if (opts_.derivatives == DerivativeMode::sensitivity) {
        return solve(lambda, true);
    }
    PhiValue out = solve(lambda, false);
    std::vector<double> p(lambda.begin(), lambda.end());
    out.gradient.resize(static_cast<std::size_t>(dim_));
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double h = opts_.fd_step * (1.0 + lambda[j]);
        const double base = p[j];
        double deriv;
        if (base >= h) {
            p[j] = base + h;
            const double up = solve(p, false).value;
            p[j] = base - h;
            const double down = solve(p, false).value;
            deriv = (up - down) / (2.0 * h);
        } else {
            // one-sided, second order
            p[j] = base + h;
            const double f1 = solve(p, false).value;
            p[j] = base + 2.0 * h;
            const double f2 = solve(p, false).value;
            deriv = (-3.0 * out.value + 4.0 * f1 - f2) / (2.0 * h);
        }
        p[j] = base;
        out.gradient[j] = deriv;
    }
    return out;
}

PhiValue PhiSolver::solve(std::span<const double> lambda, bool sensitivities) const {
    const auto d = static_cast<std::size_t>(dim_);
    PhiValue out;
    double t0 = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < d; ++k) {
        if (lambda[k] > 0.0) {
            any = true;
            t0 = std::min(t0, std::log(opts_.start_level / lambda[k]) / static_cast<double>(k + 1));
        }
    }
    if (!any) {
        if (sensitivities) {
            out.gradient = alpha_;
        }
        return out;
    }

    std::vector<double> x0(d);
    for (std::size_t k = 0; k < d; ++k) {
        x0[k] = lambda[k] * std::exp(static_cast<double>(k + 1) * t0);
    }
    // second-order Taylor start
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        lin += alpha_[k] * x0[k];
        for (std::size_t l = 0; l < d; ++l) {
            quad += beta_[k * d + l] * x0[k] * x0[l];
        }
    }
    std::vector<double> y(sensitivities ? d + 1 : 1);
    y[0] = lin + quad;
    if (sensitivities) {
        for (std::size_t j = 0; j < d; ++j) {
            double s = alpha_[j];
            for (std::size_t l = 0; l < d; ++l) {
                s += 2.0 * beta_[j * d + l] * x0[l];
            }
            y[j + 1] = s * std::exp(static_cast<double>(j + 1) * t0);
        }
    }
    const double start = y[0];
    if (t0 == 0.0) {
        out.value = y[0];
        out.error = b_ * b_ * lin * lin * std::abs(lin);
        if (sensitivities) {
            out.gradient.assign(y.begin() + 1, y.end());
        }
        return out;
    }

    const double b = b_;
    const std::vector<double> lam(lambda.begin(), lambda.end());
    const auto& f = f_;
    OdeRhs rhs = [&, sensitivities](double t, std::span<const double> yy, std::span<double> dy) {
        const double phi = yy[0];
        double forcing = 0.0;
        for (std::size_t k = 1; k < d; ++k) {
            forcing += f[k] * lam[k] * std::exp(static_cast<double>(k + 1) * t);
        }
        dy[0] = -b * phi * phi + phi + forcing;
        if (sensitivities) {
            const double a = 1.0 - 2.0 * b * phi;
            for (std::size_t j = 0; j < d; ++j) {
                dy[j + 1] = a * yy[j + 1] + f[j] * std::exp(static_cast<double>(j + 1) * t);
            }
        }
    };
    OdeOptions o;
    o.rtol = opts_.rtol;
    o.atol = 1e-30;
    const OdeStats st = integrate_dopri5(rhs, t0, 0.0, y, o);
    out.value = y[0];
    // local errors plus the third-order start remainder carried to t = 0
    const double start_rem = b * b * lin * lin * std::abs(lin);
    out.error = st.error_sum + (start > 0.0 ? start_rem * std::abs(out.value) / start : 0.0) +
                opts_.rtol * std::abs(out.value);
    if (sensitivities) {
        out.gradient.assign(y.begin() + 1, y.end());
    }
    return out;
}

PhiValue phi_solve(const AsymptoticConstants& c, int i, std::span<const double> lambda, bool with_gradient,
                   const PhiOptions& opts) {
    return PhiSolver(c, i, opts)(lambda, with_gradient);
}

double phi_closed_form_pair(double b, double m_next, double lambda1, double lambda2) {
    const double l = b * lambda1;
    if (lambda2 < 1e-12) {
        return lambda1 / (1.0 + l) + m_next * lambda2 / (1.0 + l) +
               l * l * m_next * lambda2 / (3.0 * (1.0 + l) * (1.0 + l));
    }
    const double r = std::sqrt(b * m_next * lambda2);
    const double t = std::tanh(r);
    return std::sqrt(m_next * lambda2 / b) * (l + r * t) / (l * t + r);
}

double phi_via_pgf_limit(const ModelSpec& spec, int i, std::span<const double> lambda, std::int64_t m) {
    const int n = spec.types();
    if (i < 1 || i > n) {
        throw DomainError("phi_via_pgf_limit: type index out of range");
    }
    if (m < 1) {
        throw DomainError("phi_via_pgf_limit needs m >= 1");
    }
    check_lambda(lambda, static_cast<std::size_t>(n - i + 1), "phi_via_pgf_limit");
    std::vector<double> q(static_cast<std::size_t>(n), 0.0);
    const double md = static_cast<double>(m);
    for (int k = i; k <= n; ++k) {
        q[static_cast<std::size_t>(k - 1)] = -std::expm1(-lambda[static_cast<std::size_t>(k - i)] / std::pow(md, k - i + 1));
    }
    return md * survival_forward(spec, m, q)[static_cast<std::size_t>(i - 1)];
}

const char* to_string(TheoremKind k) noexcept {
    switch (k) {
        case TheoremKind::T1:
            return "T1";
        case TheoremKind::T2:
            return "T2";
        case TheoremKind::T3:
            return "T3";
        case TheoremKind::T4:
            return "T4";
        case TheoremKind::T5:
            return "T5";
        case TheoremKind::Yaglom:
            return "Yaglom";
        case TheoremKind::Tot1:
            return "Tot1";
    }
    return "?";
}

const char* to_string(T3Exponent e) noexcept {
    return e == T3Exponent::lemma ? "lemma" : "theorem";
}

double rhs_t1(const AsymptoticConstants& c, const T1Args& a) {
    check_type(c, a.i, 1, c.types(), "T1");
    return c.g(a.i) / std::pow(a.n, 1.0 + c.gamma(a.i));
}

double rhs_t2(const AsymptoticConstants& c, const T2Args& a, const PhiOptions& opts) {
    return PhiSolver(c, 1, opts)(a.lambda, true).gradient.at(0);
}

double rhs_t3(const AsymptoticConstants& c, const T3Args& a, const PhiOptions& opts) {
    check_type(c, a.i, 1, c.types() - 1, "T3");
    if (!(a.y > 0.0)) {
        throw DomainError("T3 needs y > 0");
    }
    const int i = a.i;
    const auto dim = static_cast<std::size_t>(c.types() - i + 1);
    check_lambda(a.lambda, dim, "T3");
    std::vector<double> z(dim);
    double yp = a.y;
    for (std::size_t k = 0; k < dim; ++k) {
        double l = a.lambda[k];
        if (k == 0) l += c.c(i);
        if (k == 1) l += c.c(i + 1);
        z[k] = l * yp;
        yp *= a.y;
    }
    const PhiValue phi = PhiSolver(c, i, opts)(z, true);
    const double e = std::ldexp(1.0, a.exponent == T3Exponent::lemma ? -(i - 1) : -i);
    const double g = phi.value / a.y;
    const double outer = e * std::pow(g, e - 1.0);
    return c.D(i - 1) * outer *
           (c.g(i) / c.g(1) * phi.gradient[0] + c.g(i + 1) / c.g(1) * a.y * phi.gradient[1]);
}

double rhs_t4(const AsymptoticConstants& c, const T4Args& a) {
    check_type(c, a.i, 1, c.types() - 1, "T4");
    const int i = a.i;
    check_lambda(a.lambda, static_cast<std::size_t>(c.types() - i), "T4");
    double s = c.c(i + 1);
    for (int l = i + 1; l <= c.types(); ++l) {
        s += a.lambda[static_cast<std::size_t>(l - i - 1)] * c.a(i + 1, l);
    }
    const double e = std::ldexp(1.0, -i);
    return c.D(i) * e * c.g(i + 1) / c.g(1) * std::pow(s, -1.0 + e);
}

double rhs_t5(const AsymptoticConstants& c, const T5Args& a) {
    if (!(a.x > 0.0 && a.x < 1.0)) {
        throw DomainError("T5 needs x in (0,1), got " + std::to_string(a.x));
    }
    if (!(a.lambda >= 0.0)) {
        throw DomainError("T5 needs lambda >= 0");
    }
    const double g1 = c.gamma(1);
    return std::pow(1.0 + (1.0 - a.x) * a.lambda, -(1.0 - g1)) *
           std::pow(1.0 + a.lambda * a.x * (1.0 - a.x), -(1.0 + g1));
}

double rhs_yaglom(const AsymptoticConstants& c, const YaglomArgs& a) {
    if (!(a.lambda >= 0.0)) {
        throw DomainError("Yaglom needs lambda >= 0");
    }
    return 1.0 - std::pow(a.lambda / (1.0 + a.lambda), std::ldexp(1.0, -(c.types() - 1)));
}

double rhs_tot1(const AsymptoticConstants& c, const Tot1Args& a) {
    check_type(c, a.i, 1, c.types() - 1, "Tot1");
    if (!(a.lambda >= 0.0)) {
        throw DomainError("Tot1 needs lambda >= 0");
    }
    return c.D(a.i) * std::pow(a.lambda, std::ldexp(1.0, -a.i));
}

TheoremKind kind_of(const TheoremArgs& args) noexcept {
    return static_cast<TheoremKind>(args.index());
}

double theorem_rhs(const AsymptoticConstants& c, const TheoremArgs& args, const PhiOptions& opts) {
    struct Visitor {
        const AsymptoticConstants& c;
        const PhiOptions& opts;
        double operator()(const T1Args& a) const { return rhs_t1(c, a); }
        double operator()(const T2Args& a) const { return rhs_t2(c, a, opts); }
        double operator()(const T3Args& a) const { return rhs_t3(c, a, opts); }
        double operator()(const T4Args& a) const { return rhs_t4(c, a); }
        double operator()(const T5Args& a) const { return rhs_t5(c, a); }
        double operator()(const YaglomArgs& a) const { return rhs_yaglom(c, a); }
        double operator()(const Tot1Args& a) const { return rhs_tot1(c, a); }
    };
    return std::visit(Visitor{c, opts}, args);
}

}  // namespace gwlab
