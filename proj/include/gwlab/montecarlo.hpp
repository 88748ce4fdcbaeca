#pragma once

// Forward simulation. Every replica draws from its own counter-based stream
// (seed, replica index), and replicas are grouped into fixed blocks merged in
// block order, so results do not depend on the number of workers.

#include "gwlab/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gwlab {

struct McConfig {
    std::uint64_t seed = 1;
    std::int64_t replicas = 1000;
    std::int64_t max_generations = 1'000'000;
    /// Maximum number of individuals born in one trajectory (the ancestor included).
    std::int64_t population_cap = 10'000'000;
    /// 0 uses every hardware thread.
    int workers = 1;
    int start_type = 1;

    void validate(const ModelSpec& spec) const;
};

struct TrajectorySample {
    std::uint64_t replica = 0;
    /// layers[n][type-1] = Z_type(n), n = 0..T (the last layer is all zeros
    /// unless censored).
    std::vector<std::vector<std::int64_t>> layers;
    /// First n >= 1 with Z(n) = 0; meaningless when censored.
    std::int64_t extinction_time = 0;
    bool censored = false;
};

/// Runs cfg.replicas trajectories and hands them to `sink` in replica order.
void simulate(const ModelSpec& spec, const McConfig& cfg, const std::function<void(const TrajectorySample&)>& sink);
std::vector<TrajectorySample> simulate(const ModelSpec& spec, const McConfig& cfg);

struct ExtinctionHistogram {
    /// counts[n] = #{T = n}, n = 0..n_max (counts[0] stays 0)
    std::vector<std::int64_t> counts;
    std::int64_t beyond = 0;  // T > n_max
    std::int64_t censored = 0;
    std::int64_t replicas = 0;

    double empirical_pmf(std::int64_t n) const;
};

/// Extinction times only; trajectories are cut at generation n_max + 1.
ExtinctionHistogram simulate_extinction_times(const ModelSpec& spec, const McConfig& cfg, std::int64_t n_max);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct ConditionalEnsemble {
    std::int64_t n = 0;
    std::int64_t m = 0;
    std::int64_t replicas = 0;
    std::int64_t accepted = 0;
    std::int64_t censored = 0;
    /// Exact P(T_N = n) used for the feasibility gate.
    double exact_probability = 0.0;
    /// Z(m) of every accepted trajectory, types 1..N.
    std::vector<std::vector<std::int64_t>> samples;

    double acceptance_rate() const noexcept {
        return replicas > 0 ? static_cast<double>(accepted) / static_cast<double>(replicas) : 0.0;
    }
    /// Sample mean of prod_l u_l^{Z_l(m)}.
    Estimate laplace(std::span<const double> u) const;
};

/// Rejection sampling of Z(m) given T_N = n. Refuses (InfeasibleError) when
/// the expected number of accepted samples is below `min_expected`.
ConditionalEnsemble conditional_ensemble(const ModelSpec& spec, std::int64_t n, std::int64_t m, const McConfig& cfg,
                                         double min_expected = 100.0);

struct ProgenyStats {
    int p = 1, i = 1, j = 2;
    /// W_{p,i,j} per replica
    std::vector<std::int64_t> w;
    /// W_{p,i} per replica
    std::vector<std::int64_t> w_all;
    std::vector<std::uint8_t> censored;
    std::int64_t censored_count = 0;

    /// 1 - E[exp(-lambda W)], over W_{p,i,j} (or W_{p,i} when `all`).
    Estimate one_minus_laplace(double lambda, bool all = false) const;
};

/// Simulates the types p..i sub-population started from one type-p particle
/// until it dies out, counting the children of types > i it produces.
ProgenyStats total_progeny(const ModelSpec& spec, const McConfig& cfg, int p, int i, int j);

/// Layered colored profile: layer k holds the generation-k counts per color
/// (color = type). Colors never decrease from the root towards the leaves.
struct TreeProfile {
    std::int64_t height = 0;
    std::vector<std::vector<std::int64_t>> layers;
    bool censored = false;
};

TreeProfile tree_export(const TrajectorySample& sample);

}  // namespace gwlab
