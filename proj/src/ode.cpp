#include "gwlab/ode.hpp"

#include "gwlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace gwlab {

namespace {

// Dormand-Prince tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
// b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double scaled_norm(std::span<const double> v, std::span<const double> y, std::span<const double> y2,
                   const OdeOptions& o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double sc = o.atol + o.rtol * std::max(std::abs(y[i]), std::abs(y2[i]));
        const double r = v[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

OdeStats integrate_dopri5(const OdeRhs& f, double t0, double t1, std::span<double> y, const OdeOptions& opts) {
    OdeStats st;
    const std::size_t n = y.size();
    if (t0 == t1 || n == 0) {
        return st;
    }
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span_len = std::abs(t1 - t0);

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n), err(n);
    f(t0, y, k1);
    ++st.evaluations;

    double h = opts.initial_step;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic, first-order part only
        const std::span<const double> y0(y.data(), n);
        const double d0 = scaled_norm(y0, y0, y0, opts);
        const double d1 = scaled_norm(k1, y0, y0, opts);
        h = (d0 < 1e-5 || d1 < 1e-5 || !std::isfinite(d0 / d1)) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, span_len);
    }
    double t = t0;
    bool last_rejected = false;

    while (dir * (t1 - t) > 0.0) {
        if (st.accepted + st.rejected >= opts.max_steps) {
            throw SolverError("ODE step budget exhausted at t=" + std::to_string(t) + " after " +
                              std::to_string(opts.max_steps) + " steps");
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "ODE step size collapsed: h=%.3g at t=%.17g (%lld accepted, %lld rejected)",
                          h, t, static_cast<long long>(st.accepted), static_cast<long long>(st.rejected));
            throw SolverError(buf);
        }
        const double remaining = std::abs(t1 - t);
        if (h > remaining) {
            h = remaining;
        }
        const double hs = dir * h;

        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
        f(t + c2 * hs, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * hs, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * hs, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * hs, tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double t_next = (h == remaining) ? t1 : t + hs;
        f(t_next, tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(t_next, ynew, k7);
        st.evaluations += 6;

        for (std::size_t i = 0; i < n; ++i)
            err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double en = scaled_norm(err, std::span<const double>(y.data(), n), ynew, opts);

        if (!std::isfinite(en)) {
            h *= 0.1;
            ++st.rejected;
            last_rejected = true;
            continue;
        }
        if (en <= 1.0) {
            st.error_sum += std::abs(err[0]);
            std::copy(ynew.begin(), ynew.end(), y.begin());
            k1.swap(k7);
            t = t_next;
            ++st.accepted;
            double fac = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.2);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            h *= fac;
            last_rejected = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            ++st.rejected;
            last_rejected = true;
        }
    }
    return st;
}

}  // namespace gwlab
