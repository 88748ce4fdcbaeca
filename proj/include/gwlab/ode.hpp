#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace gwlab {

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-300;
    /// 0 picks a starting step automatically.
    double initial_step = 0.0;
    std::int64_t max_steps = 1'000'000;
};

struct OdeStats {
    std::int64_t accepted = 0;
    std::int64_t rejected = 0;
    std::int64_t evaluations = 0;
    /// Sum of the absolute local error estimates of component 0.
    double error_sum = 0.0;
};

/// Dormand-Prince 5(4) with FSAL and standard step-size control. Integrates
/// y in place from t0 to t1 (either direction). Throws SolverError when the
/// step size collapses or the step budget runs out.
OdeStats integrate_dopri5(const OdeRhs& f, double t0, double t1, std::span<double> y, const OdeOptions& opts = {});

}  // namespace gwlab
