#include "gwlab/model.hpp"

#include "gwlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>

namespace gwlab {

namespace {

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw StructuralError(what);
    }
}

}  // namespace

ComponentLaw ComponentLaw::poisson(double mean) {
    require(std::isfinite(mean) && mean > 0.0, "poisson mean must be finite and > 0, got " + fmt_real(mean));
    return {LawKind::poisson, mean, 0};
}

ComponentLaw ComponentLaw::geometric(double mean) {
    require(std::isfinite(mean) && mean > 0.0, "geometric mean must be finite and > 0, got " + fmt_real(mean));
    return {LawKind::geometric, mean, 0};
}

ComponentLaw ComponentLaw::bernoulli(double p) {
    require(p >= 0.0 && p <= 1.0, "bernoulli p must lie in [0,1], got " + fmt_real(p));
    return {LawKind::bernoulli, p, 1};
}

ComponentLaw ComponentLaw::binomial(std::int64_t trials, double p) {
    require(trials >= 1, "binomial trials must be >= 1, got " + std::to_string(trials));
    require(p >= 0.0 && p <= 1.0, "binomial p must lie in [0,1], got " + fmt_real(p));
    return {LawKind::binomial, p, trials};
}

ComponentLaw ComponentLaw::deterministic(std::int64_t k) {
    require(k >= 0, "deterministic count must be >= 0, got " + std::to_string(k));
    return {LawKind::deterministic, static_cast<double>(k), k};
}

double ComponentLaw::mean() const noexcept {
    switch (kind_) {
        case LawKind::poisson:
        case LawKind::geometric:
        case LawKind::bernoulli:
        case LawKind::deterministic:
            return param_;
        case LawKind::binomial:
            return static_cast<double>(trials_) * param_;
    }
    return 0.0;
}

double ComponentLaw::variance() const noexcept {
    switch (kind_) {
        case LawKind::poisson:
            return param_;
        case LawKind::geometric:
            return param_ * (1.0 + param_);
        case LawKind::bernoulli:
            return param_ * (1.0 - param_);
        case LawKind::binomial:
            return static_cast<double>(trials_) * param_ * (1.0 - param_);
        case LawKind::deterministic:
            return 0.0;
    }
    return 0.0;
}

double ComponentLaw::factorial_moment2() const noexcept {
    const double mu = mean();
    return variance() + mu * mu - mu;
}

double ComponentLaw::pgf(double s) const noexcept {
    switch (kind_) {
        case LawKind::poisson:
            return std::exp(param_ * (s - 1.0));
        case LawKind::geometric:
            return 1.0 / (1.0 + param_ * (1.0 - s));
        case LawKind::bernoulli:
            return 1.0 - param_ + param_ * s;
        case LawKind::binomial:
            return std::pow(1.0 - param_ + param_ * s, static_cast<double>(trials_));
        case LawKind::deterministic:
            return std::pow(s, static_cast<double>(trials_));
    }
    return 1.0;
}

double ComponentLaw::survival(double q) const noexcept {
    switch (kind_) {
        case LawKind::poisson:
            return -std::expm1(-param_ * q);
        case LawKind::geometric:
            return param_ * q / (1.0 + param_ * q);
        case LawKind::bernoulli:
            return param_ * q;
        case LawKind::binomial:
            return -std::expm1(static_cast<double>(trials_) * std::log1p(-param_ * q));
        case LawKind::deterministic:
            if (trials_ == 0) {
                return 0.0;
            }
            return -std::expm1(static_cast<double>(trials_) * std::log1p(-q));
    }
    return 0.0;
}

double ComponentLaw::pgf_increment(double s, double ds) const noexcept {
    switch (kind_) {
        case LawKind::poisson:
            return std::exp(param_ * (s - 1.0)) * std::expm1(param_ * ds);
        case LawKind::geometric:
            return param_ * ds / ((1.0 + param_ * (1.0 - s)) * (1.0 + param_ * (1.0 - s - ds)));
        case LawKind::bernoulli:
            return param_ * ds;
        case LawKind::binomial: {
            const double base = 1.0 - param_ + param_ * s;
            const double n = static_cast<double>(trials_);
            if (base == 0.0) {
                return std::pow(param_ * ds, n);
            }
            return std::pow(base, n) * std::expm1(n * std::log1p(param_ * ds / base));
        }
        case LawKind::deterministic: {
            if (trials_ == 0) {
                return 0.0;
            }
            const double k = static_cast<double>(trials_);
            if (s == 0.0) {
                return std::pow(ds, k);
            }
            return std::pow(s, k) * std::expm1(k * std::log1p(ds / s));
        }
    }
    return 0.0;
}

std::int64_t ComponentLaw::sample_sum(std::int64_t count, CounterRng& rng) const {
    if (count <= 0) {
        return 0;
    }
    switch (kind_) {
        case LawKind::poisson: {
            std::poisson_distribution<std::int64_t> dist(static_cast<double>(count) * param_);
            return dist(rng);
        }
        case LawKind::geometric: {
            // failures before `count` successes
            std::negative_binomial_distribution<std::int64_t> dist(count, 1.0 / (1.0 + param_));
            return dist(rng);
        }
        case LawKind::bernoulli:
        case LawKind::binomial: {
            if (param_ == 0.0) {
                return 0;
            }
            std::binomial_distribution<std::int64_t> dist(count * trials_, param_);
            return dist(rng);
        }
        case LawKind::deterministic:
            return count * trials_;
    }
    return 0;
}

std::string ComponentLaw::describe() const {
    switch (kind_) {
        case LawKind::poisson:
        case LawKind::geometric:
            return std::string(to_string(kind_)) + "(mean=" + fmt_real(param_) + ")";
        case LawKind::bernoulli:
            return "bernoulli(p=" + fmt_real(param_) + ")";
        case LawKind::binomial:
            return "binomial(trials=" + std::to_string(trials_) + ", p=" + fmt_real(param_) + ")";
        case LawKind::deterministic:
            return "deterministic(k=" + std::to_string(trials_) + ")";
    }
    return {};
}

const char* to_string(LawKind kind) noexcept {
    switch (kind) {
        case LawKind::poisson:
            return "poisson";
        case LawKind::geometric:
            return "geometric";
        case LawKind::bernoulli:
            return "bernoulli";
        case LawKind::binomial:
            return "binomial";
        case LawKind::deterministic:
            return "deterministic";
    }
    return "?";
}

ModelSpec::ModelSpec(std::vector<OffspringLaw> laws) {
    const int n = static_cast<int>(laws.size());
    require(n >= 1, "model needs at least one type");
    std::sort(laws.begin(), laws.end(),
              [](const OffspringLaw& a, const OffspringLaw& b) { return a.type_index < b.type_index; });
    for (int i = 1; i <= n; ++i) {
        const OffspringLaw& law = laws[static_cast<std::size_t>(i - 1)];
        require(law.type_index == i, "expected exactly one offspring law per type 1.." + std::to_string(n) +
                                         "; missing or duplicate law for type " + std::to_string(i));
        require(law.components.count(i) == 1,
                "offspring law of type " + std::to_string(i) + " has no own-type component");
        for (const auto& [j, c] : law.components) {
            require(j >= i, "type " + std::to_string(i) + " cannot produce type " + std::to_string(j) +
                                " (laws must be upper triangular)");
            require(j <= n, "type " + std::to_string(i) + " produces unknown type " + std::to_string(j));
        }
    }
    laws_ = std::move(laws);
    flat_.resize(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        auto& row = flat_[static_cast<std::size_t>(i - 1)];
        for (const auto& [j, c] : laws_[static_cast<std::size_t>(i - 1)].components) {
            row.push_back({j, c});
        }
    }
}

const OffspringLaw& ModelSpec::law(int i) const {
    if (i < 1 || i > types()) {
        throw DomainError("type index " + std::to_string(i) + " out of range 1.." + std::to_string(types()));
    }
    return laws_[static_cast<std::size_t>(i - 1)];
}

std::span<const Component> ModelSpec::components(int i) const {
    if (i < 1 || i > types()) {
        throw DomainError("type index " + std::to_string(i) + " out of range 1.." + std::to_string(types()));
    }
    return flat_[static_cast<std::size_t>(i - 1)];
}

Matrix Matrix::identity(int n) {
    Matrix m(n);
    for (int i = 1; i <= n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    const int n = a.size();
    Matrix c(n);
    for (int i = 1; i <= n; ++i) {
        for (int k = 1; k <= n; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            for (int j = 1; j <= n; ++j) {
                c(i, j) += aik * b(k, j);
            }
        }
    }
    return c;
}

MomentSummary moments(const ModelSpec& spec) {
    const int n = spec.types();
    MomentSummary out{Matrix(n), std::vector<double>(static_cast<std::size_t>(n), 0.0), Tensor3(n)};
    for (int i = 1; i <= n; ++i) {
        const auto comps = spec.components(i);
        for (const auto& c : comps) {
            out.mean_matrix(i, c.target) = c.law.mean();
        }
        for (const auto& ck : comps) {
            for (const auto& cl : comps) {
                out.second_moments(i, ck.target, cl.target) =
                    ck.target == cl.target ? ck.law.factorial_moment2() : ck.law.mean() * cl.law.mean();
            }
        }
        out.b[static_cast<std::size_t>(i - 1)] = 0.5 * spec.components(i).front().law.variance();
    }
    return out;
}

bool ValidationReport::all_passed() const noexcept {
    return std::all_of(findings.begin(), findings.end(), [](const Finding& f) { return f.passed; });
}

ValidationReport validate_hypothesis_a(const ModelSpec& spec) {
    const MomentSummary mom = moments(spec);
    const int n = spec.types();
    ValidationReport report;
    for (int i = 1; i <= n; ++i) {
        const double own = mom.mean_matrix(i, i);
        report.findings.push_back({"own_mean", i, own, std::abs(own - 1.0) <= 1e-12,
                                   "m_{i,i} = 1 within 1e-12"});
        if (i < n) {
            const double next = mom.mean_matrix(i, i + 1);
            report.findings.push_back({"next_mean", i, next, std::isfinite(next) && next > 0.0,
                                       "m_{i,i+1} in (0, inf)"});
        }
        double worst = 0.0;
        bool finite = true;
        for (int k = i; k <= n; ++k) {
            for (int l = i; l <= n; ++l) {
                const double v = mom.second_moments(i, k, l);
                finite = finite && std::isfinite(v);
                worst = std::max(worst, std::abs(v));
            }
        }
        report.findings.push_back({"second_moments", i, worst, finite, "all E[eta_k eta_l] finite"});
        const double b = mom.half_variance(i);
        report.findings.push_back({"half_variance", i, b, std::isfinite(b) && b > 0.0,
                                   "b_i = Var[eta_{i,i}]/2 in (0, inf)"});
    }
    return report;
}

namespace {

void check_coordinates(const ModelSpec& spec, int i, std::span<const double> v, const char* what) {
    const int n = spec.types();
    if (i < 1 || i > n) {
        throw DomainError("type index " + std::to_string(i) + " out of range 1.." + std::to_string(n));
    }
    if (v.size() != static_cast<std::size_t>(n - i + 1)) {
        throw DomainError(std::string(what) + " for type " + std::to_string(i) + " needs " +
                          std::to_string(n - i + 1) + " coordinates, got " + std::to_string(v.size()));
    }
    for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw DomainError(std::string(what) + " coordinate " + fmt_real(x) + " outside [0,1]");
        }
    }
}

// 1 - prod(1 - r_j) accumulated as acc += r (1 - acc); every term is
// nonnegative so nothing cancels.
inline double type_survival(std::span<const Component> comps, const double* q) {
    double acc = 0.0;
    for (const auto& c : comps) {
        const double r = c.law.survival(q[c.target - 1]);
        acc += r * (1.0 - acc);
    }
    return std::min(acc, 1.0);
}

inline double type_pgf(std::span<const Component> comps, const double* s) {
    double v = 1.0;
    for (const auto& c : comps) {
        v *= c.law.pgf(s[c.target - 1]);
    }
    return v;
}

}  // namespace

double pgf(const ModelSpec& spec, int i, std::span<const double> s) {
    check_coordinates(spec, i, s, "pgf argument");
    return type_pgf(spec.components(i), s.data() - (i - 1));
}

double survival_map(const ModelSpec& spec, int i, std::span<const double> q) {
    check_coordinates(spec, i, q, "survival argument");
    return type_survival(spec.components(i), q.data() - (i - 1));
}

void pgf_step(const ModelSpec& spec, std::span<const double> s, std::span<double> out) {
    const int n = spec.types();
    for (int i = 1; i <= n; ++i) {
        out[static_cast<std::size_t>(i - 1)] = type_pgf(spec.components(i), s.data());
    }
}

void survival_step(const ModelSpec& spec, std::span<const double> q, std::span<double> out) {
    const int n = spec.types();
    for (int i = 1; i <= n; ++i) {
        out[static_cast<std::size_t>(i - 1)] = type_survival(spec.components(i), q.data());
    }
}

void pgf_increment_step(const ModelSpec& spec, std::span<const double> s, std::span<const double> ds,
                        std::span<double> value, std::span<double> increment) {
    const int n = spec.types();
    // prod X - prod Y = sum_j (X_j - Y_j) prod_{l<j} Y_l prod_{l>j} X_l
    thread_local std::vector<double> ys, xs, dy;
    ys.resize(static_cast<std::size_t>(n));
    xs.resize(static_cast<std::size_t>(n));
    dy.resize(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const auto comps = spec.components(i);
        const std::size_t k = comps.size();
        for (std::size_t c = 0; c < k; ++c) {
            const auto t = static_cast<std::size_t>(comps[c].target - 1);
            ys[c] = comps[c].law.pgf(s[t]);
            dy[c] = comps[c].law.pgf_increment(s[t], ds[t]);
            xs[c] = ys[c] + dy[c];
        }
        double suffix = 1.0;
        for (std::size_t c = k; c-- > 0;) {
            const double x = xs[c];
            xs[c] = suffix;  // prod_{l>c} X_l
            suffix *= x;
        }
        double prefix = 1.0;
        double inc = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            inc += dy[c] * prefix * xs[c];
            prefix *= ys[c];
        }
        value[static_cast<std::size_t>(i - 1)] = prefix;
        increment[static_cast<std::size_t>(i - 1)] = inc;
    }
}

std::vector<std::int64_t> sample_offspring(const ModelSpec& spec, int i, CounterRng& rng) {
    const int n = spec.types();
    if (i < 1 || i > n) {
        throw DomainError("type index " + std::to_string(i) + " out of range 1.." + std::to_string(n));
    }
    std::vector<std::int64_t> out(static_cast<std::size_t>(n - i + 1), 0);
    for (const auto& c : spec.components(i)) {
        out[static_cast<std::size_t>(c.target - i)] = c.law.sample_sum(1, rng);
    }
    return out;
}

void add_offspring_of(const ModelSpec& spec, int i, std::int64_t count, CounterRng& rng,
                      std::span<std::int64_t> next) {
    if (count <= 0) {
        return;
    }
    for (const auto& c : spec.components(i)) {
        next[static_cast<std::size_t>(c.target - 1)] += c.law.sample_sum(count, rng);
    }
}

ModelSpec unit_moment_model(int types) {
    if (types < 1) {
        throw StructuralError("unit_moment_model: need at least one type");
    }
    std::vector<OffspringLaw> laws;
    for (int i = 1; i <= types; ++i) {
        OffspringLaw law;
        law.type_index = i;
        law.components.emplace(i, ComponentLaw::geometric(1.0));
        if (i < types) {
            law.components.emplace(i + 1, ComponentLaw::poisson(1.0));
        }
        laws.push_back(std::move(law));
    }
    return ModelSpec(std::move(laws));
}

}  // namespace gwlab
