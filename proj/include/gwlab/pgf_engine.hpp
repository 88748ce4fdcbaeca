#pragma once

// Exact generating-function computations: survival probabilities,
// extinction-time laws, forward iterates and laws conditioned on the
// extinction moment.

#include "gwlab/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gwlab {

/// Q_n^{(i)} = P_i(Z(n) != 0) for n = 0..n_max, all types.
class SurvivalSequence {
public:
    SurvivalSequence() = default;
    SurvivalSequence(int types, std::int64_t n_max);

    int types() const noexcept { return types_; }
    std::int64_t n_max() const noexcept { return n_max_; }
    double operator()(int i, std::int64_t n) const { return q_[index(i, n)]; }
    /// All types at generation n (length N).
    std::span<const double> at(std::int64_t n) const {
        return {q_.data() + static_cast<std::size_t>(n) * types_, static_cast<std::size_t>(types_)};
    }
    std::span<double> at(std::int64_t n) {
        return {q_.data() + static_cast<std::size_t>(n) * types_, static_cast<std::size_t>(types_)};
    }

private:
    std::size_t index(int i, std::int64_t n) const {
        return static_cast<std::size_t>(n) * types_ + static_cast<std::size_t>(i - 1);
    }
    int types_ = 0;
    std::int64_t n_max_ = 0;
    std::vector<double> q_;
};

SurvivalSequence survival_sequence(const ModelSpec& spec, std::int64_t n_max);

struct ExtinctionPmfTable {
    int type_index = 0;
    /// pmf[n] = P(T_{iN} = n); pmf[0] = 0.
    std::vector<double> pmf;
    /// tail[n] = P(T_{iN} > n) = Q_n^{(i)}.
    std::vector<double> tail;

    std::int64_t n_max() const noexcept { return static_cast<std::int64_t>(pmf.size()) - 1; }
};

ExtinctionPmfTable extinction_pmf(const SurvivalSequence& seq, int i);
ExtinctionPmfTable extinction_pmf(const ModelSpec& spec, int i, std::int64_t n_max);

/// H_m(s) for every starting type; s has length N.
std::vector<double> pgf_forward(const ModelSpec& spec, std::int64_t m, std::span<const double> s);
/// 1 - H_m(1 - q), iterated in survival form.
std::vector<double> survival_forward(const ModelSpec& spec, std::int64_t m, std::span<const double> q);

enum class Precision {
    /// H_m(u x) and H_m(u y) iterated separately, difference taken at the end.
    standard,
    /// the difference H_m(u x) - H_m(u y) is itself propagated through every
    /// generation, so it never has to be recovered from two nearly equal values
    compensated,
};

const char* to_string(Precision p) noexcept;

/// E[s^{Z(m)} exp(-sum lambda_l Z_l(m) / scale_l) | T_N = n].
/// Empty s means all ones, empty lambda means all zeros, empty scale means
/// all ones.
struct ConditionalLawQuery {
    std::int64_t n = 0;
    std::int64_t m = 0;
    std::vector<double> s;
    std::vector<double> lambda;
    std::vector<double> scale;

    /// Effective argument u_l = s_l exp(-lambda_l / scale_l).
    std::vector<double> argument(int types) const;
};

struct ConditionalOptions {
    Precision precision = Precision::standard;
    /// Queries whose conditioning probability P(T_N = n) is below this are refused.
    double floor = 1e-300;
};

struct ConditionalResult {
    double value = 0.0;
    /// Estimated relative error of `value` from floating-point cancellation.
    double rel_error = 0.0;
    /// P(T_N = n).
    double denominator = 0.0;
};

/// Extinction data at generations n-m-1, n-m and n needed to condition on
/// {T_N = n} at observation time m.
struct ConditioningSnapshot {
    std::int64_t n = 0;
    std::int64_t m = 0;
    std::vector<double> q_before;  // Q_{n-m-1}
    std::vector<double> q_after;   // Q_{n-m}
    std::vector<double> gap;       // Q_{n-m-1} - Q_{n-m}
    double denominator = 0.0;      // Q_{n-1}^{(1)} - Q_n^{(1)}
    Precision precision = Precision::standard;
};

/// Streams the survival recursion up to n without storing it. In
/// compensated mode the one-step gaps Q_{k-1} - Q_k are carried by their own
/// recursion instead of being recovered by subtraction.
ConditioningSnapshot conditioning_snapshot(const ModelSpec& spec, std::int64_t n, std::int64_t m,
                                           Precision precision = Precision::standard);
ConditioningSnapshot conditioning_snapshot(const SurvivalSequence& seq, std::int64_t n, std::int64_t m);

ConditionalResult conditional_laplace(const ModelSpec& spec, const ConditioningSnapshot& snap,
                                      std::span<const double> u, const ConditionalOptions& opts = {});
ConditionalResult conditional_laplace(const ModelSpec& spec, const SurvivalSequence& seq,
                                      const ConditionalLawQuery& query, const ConditionalOptions& opts = {});
ConditionalResult conditional_laplace(const ModelSpec& spec, const ConditionalLawQuery& query,
                                      const ConditionalOptions& opts = {});

/// E_1[exp(-lambda Z_N(n) / (b_N n)) | Z(n) != 0].
double yaglom_transform(const ModelSpec& spec, std::int64_t n, double lambda);

/// M^n, with M the mean matrix.
Matrix mean_matrix_power(const ModelSpec& spec, std::int64_t n);

/// b_{ipq}(n) = E_i[Z_p(n) Z_q(n) - delta_pq Z_q(n)].
Tensor3 second_moments(const ModelSpec& spec, std::int64_t n);

}  // namespace gwlab
