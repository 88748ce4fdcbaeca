#pragma once

// Decomposable multitype offspring laws.
//
// Type indices are 1-based throughout the public API (type 1 is the
// ancestor type, type N the terminal one). A type-i particle produces
// children of types j >= i only; the count of type-j children is a
// ComponentLaw and components are mutually independent.
//
// Coordinate vectors handed to per-type functions (pgf, survival_map,
// sample_offspring) cover types i..N, so they have length N - i + 1.
// Whole-state maps (pgf_step, survival_step) take length-N vectors.

#include "gwlab/rng.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gwlab {

enum class LawKind { poisson, geometric, bernoulli, binomial, deterministic };

/// Marginal law of a single offspring count.
class ComponentLaw {
public:
    static ComponentLaw poisson(double mean);
    /// Support {0,1,2,...}: P(k) = p (1-p)^k with p = 1/(1+mean).
    static ComponentLaw geometric(double mean);
    static ComponentLaw bernoulli(double p);
    static ComponentLaw binomial(std::int64_t trials, double p);
    static ComponentLaw deterministic(std::int64_t k);

    LawKind kind() const noexcept { return kind_; }
    /// mean for poisson/geometric, p for bernoulli/binomial, k for deterministic
    double parameter() const noexcept { return param_; }
    std::int64_t trials() const noexcept { return trials_; }

    double mean() const noexcept;
    double variance() const noexcept;
    /// E[eta (eta - 1)]
    double factorial_moment2() const noexcept;

    double pgf(double s) const noexcept;
    /// 1 - pgf(1 - q), evaluated without forming 1 - (something near 1).
    double survival(double q) const noexcept;
    /// pgf(s + ds) - pgf(s), evaluated without forming the difference.
    double pgf_increment(double s, double ds) const noexcept;

    /// Sum of `count` independent draws.
    std::int64_t sample_sum(std::int64_t count, CounterRng& rng) const;

    std::string describe() const;

    friend bool operator==(const ComponentLaw&, const ComponentLaw&) = default;

private:
    ComponentLaw(LawKind kind, double param, std::int64_t trials)
        : kind_(kind), param_(param), trials_(trials) {}

    LawKind kind_;
    double param_;
    std::int64_t trials_;
};

const char* to_string(LawKind kind) noexcept;

struct OffspringLaw {
    int type_index = 0;
    std::map<int, ComponentLaw> components;
};

struct Component {
    int target;
    ComponentLaw law;

    friend bool operator==(const Component&, const Component&) = default;
};

/// N types, one offspring law per type. Construction checks structure only;
/// criticality is reported by validate_hypothesis_a.
class ModelSpec {
public:
    explicit ModelSpec(std::vector<OffspringLaw> laws);

    int types() const noexcept { return static_cast<int>(laws_.size()); }
    const OffspringLaw& law(int i) const;
    /// Components of type i sorted by target type.
    std::span<const Component> components(int i) const;

    friend bool operator==(const ModelSpec& a, const ModelSpec& b) { return a.flat_ == b.flat_; }

private:
    std::vector<OffspringLaw> laws_;
    std::vector<std::vector<Component>> flat_;
};

/// Dense N x N (or N x N x N) storage addressed with 1-based indices.
class Matrix {
public:
    explicit Matrix(int n = 0, double fill = 0.0) : n_(n), v_(static_cast<std::size_t>(n) * n, fill) {}
    static Matrix identity(int n);

    int size() const noexcept { return n_; }
    double& operator()(int i, int j) { return v_[idx(i, j)]; }
    double operator()(int i, int j) const { return v_[idx(i, j)]; }

    friend Matrix operator*(const Matrix& a, const Matrix& b);

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i - 1) * n_ + (j - 1); }
    int n_;
    std::vector<double> v_;
};

class Tensor3 {
public:
    explicit Tensor3(int n = 0) : n_(n), v_(static_cast<std::size_t>(n) * n * n, 0.0) {}
    int size() const noexcept { return n_; }
    double& operator()(int i, int k, int l) { return v_[idx(i, k, l)]; }
    double operator()(int i, int k, int l) const { return v_[idx(i, k, l)]; }

private:
    std::size_t idx(int i, int k, int l) const {
        return (static_cast<std::size_t>(i - 1) * n_ + (k - 1)) * n_ + (l - 1);
    }
    int n_;
    std::vector<double> v_;
};

/// The reference critical model: each type has Geometric(mean 1) own-type
/// offspring and, below the last type, Poisson(1) next-type offspring.
/// Every b_i and m_{i,i+1} equals 1.
ModelSpec unit_moment_model(int types);

struct MomentSummary {
    Matrix mean_matrix;      // m(i,j) = E[eta_{i,j}]
    std::vector<double> b;   // b[i-1] = Var[eta_{i,i}] / 2
    Tensor3 second_moments;  // (i,k,l) -> E_i[eta_k eta_l - delta_kl eta_l]

    int types() const noexcept { return mean_matrix.size(); }
    double half_variance(int i) const { return b.at(static_cast<std::size_t>(i - 1)); }
};

MomentSummary moments(const ModelSpec& spec);

struct Finding {
    std::string check;   // "own_mean", "next_mean", "second_moments", "half_variance"
    int type_index;
    double value;
    bool passed;
    std::string detail;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool all_passed() const noexcept;
};

ValidationReport validate_hypothesis_a(const ModelSpec& spec);

/// h^{(i)}(s_i, ..., s_N).
double pgf(const ModelSpec& spec, int i, std::span<const double> s);
/// 1 - h^{(i)}(1 - q).
double survival_map(const ModelSpec& spec, int i, std::span<const double> q);

/// out[i-1] = h^{(i)}(s_i..s_N) for every type. `s` and `out` have length N
/// and may not alias.
void pgf_step(const ModelSpec& spec, std::span<const double> s, std::span<double> out);
/// Survival form of pgf_step: out = 1 - h(1 - q).
void survival_step(const ModelSpec& spec, std::span<const double> q, std::span<double> out);
/// Given base point s and increment ds (both length N), writes h(s) into
/// `value` and h(s + ds) - h(s) into `increment` without cancellation.
void pgf_increment_step(const ModelSpec& spec, std::span<const double> s, std::span<const double> ds,
                        std::span<double> value, std::span<double> increment);

/// Offspring vector over types i..N of one type-i particle.
std::vector<std::int64_t> sample_offspring(const ModelSpec& spec, int i, CounterRng& rng);
/// Adds the summed offspring of `count` type-i particles into `next`
/// (length N, indexed by type - 1).
void add_offspring_of(const ModelSpec& spec, int i, std::int64_t count, CounterRng& rng,
                      std::span<std::int64_t> next);

}  // namespace gwlab
