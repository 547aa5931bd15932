#pragma once

// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) integration of the
// scalar comparison flows, with blow-up continuation: once the state exceeds
// a switch level the integration continues in the transformed variable
// y = x^{1-p}, whose zero crossing is the blow-up time.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace quenchlab {

struct ScalarFlow {
    std::function<double(double)> rhs;  // autonomous x' = rhs(x)
    double lead_exponent = 2.0;         // rhs(x) ~ c x^lead for large x, lead > 1
};

/// Majorant flow x' = 2A x^p + B x.
inline ScalarFlow majorant_flow(double A, double B, double p) {
    return {[=](double x) { return 2.0 * A * std::pow(std::max(x, 0.0), p) + B * x; }, p};
}

/// Equal-exponent majorant flow x' = Atilde x^p + B x.
inline ScalarFlow majorant_flow_equal_exponents(double Atilde, double B, double p) {
    return {[=](double x) { return Atilde * std::pow(std::max(x, 0.0), p) + B * x; }, p};
}

/// Minorant flow x' = -deltaLambda x + cbar x^p.
inline ScalarFlow minorant_flow(double delta_lambda, double cbar, double p) {
    return {[=](double x) { return -delta_lambda * x + cbar * std::pow(std::max(x, 0.0), p); }, p};
}

struct ScalarOdeResult {
    std::optional<double> blowup_time;
    double final_t = 0.0;
    double final_x = 0.0;
    bool reached_time_limit = false;
    std::vector<std::pair<double, double>> trace;  // (t, x) in the direct phase
};

struct ScalarOdeOptions {
    double rtol = 1e-10;
    double atol = 1e-14;
    double switch_factor = 1e8;  // leave the direct phase at x >= switch_factor * max(1, x0)
    std::optional<double> stop_at_value;
    bool record_trace = false;
};

namespace detail {

// Dormand-Prince 5(4) for an autonomous scalar equation. Returns the 5th
// order solution and the embedded error estimate.
template <class F>
inline void dopri45(F&& f, double x, double h, double& x5, double& err) {
    const double k1 = f(x);
    const double k2 = f(x + h * (1.0 / 5) * k1);
    const double k3 = f(x + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
    const double k4 = f(x + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3));
    const double k5 = f(x + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 +
                                 64448.0 / 6561 * k3 - 212.0 / 729 * k4));
    const double k6 = f(x + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 + 46732.0 / 5247 * k3 +
                                 49.0 / 176 * k4 - 5103.0 / 18656 * k5));
    x5 = x + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 -
                  2187.0 / 6784 * k5 + 11.0 / 84 * k6);
    const double k7 = f(x5);
    const double x4 = x + h * (5179.0 / 57600 * k1 + 7571.0 / 16695 * k3 + 393.0 / 640 * k4 -
                               92097.0 / 339200 * k5 + 187.0 / 2100 * k6 + 1.0 / 40 * k7);
    err = x5 - x4;
}

template <class F>
inline bool adaptive_step(F&& f, double& t, double& x, double& h, double rtol, double atol) {
    for (int tries = 0; tries < 60; ++tries) {
        double x5, err;
        dopri45(f, x, h, x5, err);
        const double scale = atol + rtol * std::max(std::abs(x), std::abs(x5));
        const double e = std::abs(err) / scale;
        if (std::isfinite(x5) && e <= 1.0) {
            t += h;
            x = x5;
            h *= std::clamp(0.9 * std::pow(std::max(e, 1e-10), -0.2), 1.0, 5.0);
            return true;
        }
        h *= std::isfinite(x5) ? std::clamp(0.9 * std::pow(e, -0.2), 0.1, 0.5) : 0.1;
        if (h < 1e-300) return false;
    }
    return false;
}

}  // namespace detail

/// Integrate x' = flow.rhs(x) from x0 until the time limit, a requested value
/// threshold, or blow-up. Divergence is a valid outcome reported through
/// blowup_time; decay simply runs out the clock.
inline ScalarOdeResult integrate_scalar_ode(const ScalarFlow& flow, double x0, double t_limit,
                                            const ScalarOdeOptions& opt = {}) {
    if (!(x0 > 0.0)) throw std::invalid_argument("integrate_scalar_ode: x0 must be positive");
    const double p = flow.lead_exponent;
    if (!(p > 1.0)) throw std::invalid_argument("integrate_scalar_ode: lead exponent must be > 1");

    ScalarOdeResult out;
    const double x_switch = opt.switch_factor * std::max(1.0, x0);
    double t = 0.0, x = x0;
    double h = 1e-6 * std::max(t_limit, 1e-12);
    if (opt.record_trace) out.trace.emplace_back(t, x);

    // direct phase
    const double t_eps = 4.0 * std::numeric_limits<double>::epsilon() * std::max(t_limit, 1.0);
    while (t < t_limit - t_eps && x < x_switch) {
        if (opt.stop_at_value && x >= *opt.stop_at_value) break;
        h = std::min(h, t_limit - t);
        if (h <= 0.0) break;
        if (!detail::adaptive_step(flow.rhs, t, x, h, opt.rtol, opt.atol)) {
            // step failure at finite state: treat as immediate divergence
            out.blowup_time = t;
            out.final_t = t;
            out.final_x = x;
            return out;
        }
        if (opt.record_trace) out.trace.emplace_back(t, x);
    }
    out.final_t = t;
    out.final_x = x;
    if (opt.stop_at_value && x >= *opt.stop_at_value) return out;
    if (x < x_switch) {
        out.final_t = t_limit;
        out.reached_time_limit = true;
        return out;
    }

    // transformed phase: y = x^{1-p} decreases to zero at blow-up. The state
    // is capped where x^p would overflow; past the cap the ratio rhs/x^p is
    // already at its asymptote, so the cap does not bias the crossing.
    const double x_cap = std::pow(10.0, 300.0 / p - 10.0);
    auto g = [&](double y) {
        double xx = y > 0.0 ? std::pow(y, -1.0 / (p - 1.0)) : x_cap;
        if (!(xx < x_cap)) xx = x_cap;
        return (1.0 - p) * flow.rhs(xx) / std::pow(xx, p);
    };
    double y = std::pow(x, 1.0 - p);
    h = 0.1 * y / std::abs(g(y));
    while (t < t_limit - t_eps) {
        const double t_prev = t, y_prev = y;
        if (!detail::adaptive_step(g, t, y, h, opt.rtol, opt.atol)) break;
        if (y <= 0.0) {
            // bisect the step length to the crossing
            double lo = 0.0, hi = t - t_prev;
            for (int it = 0; it < 80 && hi - lo > 1e-16 * std::max(t_prev, 1e-30); ++it) {
                const double mid = 0.5 * (lo + hi);
                double y5, err;
                detail::dopri45(g, y_prev, mid, y5, err);
                (y5 > 0.0 ? lo : hi) = mid;
            }
            out.blowup_time = t_prev + 0.5 * (lo + hi);
            out.final_t = *out.blowup_time;
            out.final_x = std::numeric_limits<double>::infinity();
            return out;
        }
    }
    out.reached_time_limit = t >= t_limit;
    out.final_t = t;
    out.final_x = y > 0.0 ? std::pow(y, -1.0 / (p - 1.0)) : std::numeric_limits<double>::infinity();
    return out;
}

/// Values of the flow solution at the given increasing sample times.
inline std::vector<double> sample_scalar_ode(const ScalarFlow& flow, double x0,
                                             std::span<const double> times,
                                             double rtol = 1e-10, double atol = 1e-14) {
    std::vector<double> values;
    values.reserve(times.size());
    double t = 0.0, x = x0;
    double h = 1e-8;
    for (double target : times) {
        if (target < t)
            throw std::invalid_argument("sample_scalar_ode: times must be nondecreasing");
        const double t_eps =
            4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(target), 1.0);
        // a finite-time singularity before the target reports as infinity
        while (t < target - t_eps && x < 1e280) {
            h = std::min(h, target - t);
            if (!detail::adaptive_step(flow.rhs, t, x, h, rtol, atol) || h < t_eps) {
                x = std::numeric_limits<double>::infinity();
                break;
            }
        }
        if (x >= 1e280) x = std::numeric_limits<double>::infinity();
        t = target;
        values.push_back(x);
    }
    return values;
}

}  // namespace quenchlab
