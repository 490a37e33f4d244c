#pragma once

// Explicit Runge-Kutta integrators for linear complex ODEs y' = f(t, y) where
// y is any dense Eigen object (state vector or density matrix).
//
// integrate_dopri5: Dormand-Prince 5(4) with Hairer's step-size controller and
// 4th-order continuous extension; results are sampled at caller-given times
// without forcing steps to land on them.
// integrate_rk4: classical fixed-step RK4, steps subdivided to hit each output time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "noonsim/core.hpp"

namespace noonsim {

struct Tolerance {
    double rtol = 1e-10;
    double atol = 1e-12;
    std::size_t max_steps = 2'000'000;
    double initial_step = 0.0;  // 0 selects automatically
    double max_step = 0.0;      // 0 means unbounded
};

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

namespace detail {

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, const Tolerance& tol) {
    const auto scale = (tol.atol + tol.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).eval();
    const double sum = (err.cwiseAbs().array() / scale).square().sum();
    return std::sqrt(sum / static_cast<double>(err.size()));
}

inline void check_times(double t0, std::span<const double> times) {
    double prev = t0;
    for (double t : times) {
        if (!(t >= prev)) throw NumericalError("output times must be non-decreasing and not precede the start time");
        prev = t;
    }
}

}  // namespace detail

/// Integrates from (t0, y0) and calls `observe(k, times[k], y)` for each output time.
/// `rhs(t, y, dy)` writes dy = f(t, y). Throws NumericalError when the step size
/// collapses or max_steps is exceeded.
template <class State, class Rhs, class Observer>
IntegrationStats integrate_dopri5(Rhs&& rhs, State y, double t0, std::span<const double> times, const Tolerance& tol,
                                  Observer&& observe) {
    detail::check_times(t0, times);
    IntegrationStats stats;
    if (times.empty()) return stats;

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                     a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                     d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                     d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

    const double t_end = times.back();
    std::size_t next = 0;
    double t = t0;
    while (next < times.size() && times[next] == t0) {
        observe(next, times[next], y);
        ++next;
    }
    if (next == times.size()) return stats;

    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y, err = y;
    rhs(t, y, k1);
    ++stats.rhs_evals;

    const double span_len = t_end - t0;
    double h = tol.initial_step;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic.
        const auto sc = (tol.atol + tol.rtol * y.cwiseAbs().array()).eval();
        const double n0 = std::sqrt((y.cwiseAbs().array() / sc).square().mean());
        const double n1 = std::sqrt((k1.cwiseAbs().array() / sc).square().mean());
        double h0 = (n0 < 1e-5 || n1 < 1e-5) ? 1e-6 : 0.01 * n0 / n1;
        h0 = std::min(h0, span_len);
        ytmp = y + h0 * k1;
        rhs(t + h0, ytmp, k2);
        ++stats.rhs_evals;
        const double n2 = std::sqrt(((k2 - k1).cwiseAbs().array() / sc).square().mean()) / h0;
        const double mx = std::max(n1, n2);
        const double h1 = mx <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / mx, 1.0 / 5.0);
        h = std::min(100.0 * h0, h1);
    }
    if (tol.max_step > 0.0) h = std::min(h, tol.max_step);
    h = std::min(h, span_len);

    constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0;
    bool last_rejected = false;
    while (next < times.size()) {
        if (stats.accepted + stats.rejected >= tol.max_steps)
            throw NumericalError("tolerance not met: step limit of " + std::to_string(tol.max_steps) + " exceeded");
        const double h_floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < h_floor) throw NumericalError("tolerance not met: step size underflow at t=" + std::to_string(t));
        if (t + h > t_end) h = t_end - t;

        ytmp = y + h * (a21 * k1);
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h, ynew, k7);
        stats.rhs_evals += 6;
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = detail::error_norm(err, y, ynew, tol);
        if (!std::isfinite(en)) throw NumericalError("non-finite error estimate at t=" + std::to_string(t));

        if (en <= 1.0) {
            const double t_new = (t + h >= t_end) ? t_end : t + h;
            if (next < times.size() && times[next] <= t_new) {
                const State ydiff = ynew - y;
                const State bspl = h * k1 - ydiff;
                const State r4 = ydiff - h * k7 - bspl;
                const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                while (next < times.size() && times[next] <= t_new) {
                    if (times[next] == t_new) {
                        observe(next, times[next], ynew);
                    } else {
                        const double th = (times[next] - t) / h, th1 = 1.0 - th;
                        const State yi = y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)));
                        observe(next, times[next], yi);
                    }
                    ++next;
                }
            }
            ++stats.accepted;
            t = t_new;
            y = ynew;
            k1 = k7;
            double fac = en == 0.0 ? fac_max : std::clamp(safety * std::pow(en, -0.2), fac_min, fac_max);
            if (last_rejected) fac = std::min(fac, 1.0);
            h *= fac;
            if (tol.max_step > 0.0) h = std::min(h, tol.max_step);
            last_rejected = false;
        } else {
            ++stats.rejected;
            h *= std::max(fac_min, safety * std::pow(en, -0.2));
            last_rejected = true;
        }
    }
    return stats;
}

/// Fixed-step classical RK4; each output interval is split into equal steps no larger than `max_step`.
template <class State, class Rhs, class Observer>
IntegrationStats integrate_rk4(Rhs&& rhs, State y, double t0, std::span<const double> times, double max_step,
                               Observer&& observe) {
    if (!(max_step > 0.0)) throw NumericalError("rk4 step must be positive");
    detail::check_times(t0, times);
    IntegrationStats stats;
    State k1 = y, k2 = y, k3 = y, k4 = y;
    double t = t0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double span_len = times[i] - t;
        const auto n = static_cast<std::size_t>(std::ceil(span_len / max_step - 1e-12));
        if (n > 0) {
            const double h = span_len / static_cast<double>(n);
            for (std::size_t s = 0; s < n; ++s) {
                rhs(t, y, k1);
                rhs(t + 0.5 * h, (y + 0.5 * h * k1).eval(), k2);
                rhs(t + 0.5 * h, (y + 0.5 * h * k2).eval(), k3);
                rhs(t + h, (y + h * k3).eval(), k4);
                y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += h;
                stats.rhs_evals += 4;
                ++stats.accepted;
            }
        }
        t = times[i];
        observe(i, times[i], y);
    }
    return stats;
}

}  // namespace noonsim
