#pragma once

// Envelope constants and blow-up time bounds. From coefficients, exponents,
// spectral data and the initial functionals this computes the epsilon split,
// the envelope constants (A, Atilde, B, K, c, cbar, delta, Q), the closed-form
// lower bounds T and Ttilde, the quadrature upper bound T0 and the
// equal-exponent upper bound Tbar, together with admissibility flags.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quenchlab/coefficients.hpp"
#include "quenchlab/scalar_ode.hpp"

namespace quenchlab {

struct EpsilonMode {
    enum class Kind { EqualSplit, Optimized };
    Kind kind = Kind::EqualSplit;
    std::optional<double> theta;  // fixed split for Optimized; searched when absent

    static EpsilonMode equal_split() { return {Kind::EqualSplit, std::nullopt}; }
    static EpsilonMode optimized(std::optional<double> theta = std::nullopt) {
        return {Kind::Optimized, theta};
    }
};

/// Epsilon profiles of the Young splits. The gradient epsilons (e2, e4) are
/// meaningful only where the corresponding h is positive; the identity
/// h/e2 + k/e1 = 2 theta delta + 2 (1-theta) delta = 2 delta holds pointwise.
struct EpsilonProfiles {
    std::function<double(double)> e1, e2, e3, e4;
    double theta = 0.5;
    bool h1_active = false;
    bool h2_active = false;
};

inline EpsilonProfiles select_epsilons(const SystemCoefficients& coeffs, double horizon,
                                       const EpsilonMode& mode) {
    double theta = 0.5;
    if (mode.kind == EpsilonMode::Kind::Optimized && mode.theta) {
        theta = *mode.theta;
        if (!(theta > 0.0 && theta < 1.0))
            throw std::invalid_argument("select_epsilons: theta must lie in (0, 1)");
    }
    EpsilonProfiles eps;
    eps.theta = theta;
    eps.h1_active = coeffs.h1.sup(0.0, horizon) > 0.0;
    eps.h2_active = coeffs.h2.sup(0.0, horizon) > 0.0;

    const SystemCoefficients c = coeffs;  // capture by value for profile closures
    if (eps.h1_active) {
        eps.e1 = [c, theta](double t) { return c.k1(t) / (2.0 * (1.0 - theta) * c.delta1(t)); };
        eps.e2 = [c, theta](double t) { return c.h1(t) / (2.0 * theta * c.delta1(t)); };
    } else {
        // the full budget 2 delta goes to the source term
        eps.e1 = [c](double t) { return c.k1(t) / (2.0 * c.delta1(t)); };
        eps.e2 = [](double) { return 0.0; };
    }
    if (eps.h2_active) {
        eps.e3 = [c, theta](double t) { return c.k2(t) / (2.0 * (1.0 - theta) * c.delta2(t)); };
        eps.e4 = [c, theta](double t) { return c.h2(t) / (2.0 * theta * c.delta2(t)); };
    } else {
        eps.e3 = [c](double t) { return c.k2(t) / (2.0 * c.delta2(t)); };
        eps.e4 = [](double) { return 0.0; };
    }
    return eps;
}

struct EnvelopeInputs {
    SystemCoefficients coefficients;
    double p = 2.0, q = 2.0;
    double S2p = 0.0;     // embedding constant at exponent 2p
    double S2q = 0.0;     // embedding constant at exponent 2q
    double lambda1 = 0.0;
    double omega_measure = 0.0;
    double phi0 = 0.0;
    double psi0 = 0.0;
    double horizon = 1.0;  // envelope horizon for the suprema/infima
};

struct EnvelopeConstants {
    EpsilonProfiles epsilons;
    double A = 0.0;       // max{ sup k2 e3 S2q^{2q} Phi0^{q-p}, sup k1 e1 S2p^{2p} }
    double Atilde = 0.0;  // S2p^{2p} max{ sup k2 e3, sup k1 e1 } (equal exponents)
    double B = 0.0;       // max{ sup h1 e2, sup h2 e4 }
    double K = 0.0;       // a + B Phi0^{1-p} with a = 2A (p > q) or Atilde (p = q)
    double c1 = 0.0;      // inf k1 |Omega|^{-(p-1)/2}
    double c2 = 0.0;      // inf k2 |Omega|^{-(q-1)/2}
    double c = 0.0;       // min{c1, c2}
    double cbar = 0.0;    // 2^{1-p} c
    double delta = 0.0;   // max{ sup delta1, sup delta2 }
    double Q = 0.0;       // ((p-q)/p) (q/p)^{q/(p-q)} for p > q; 0 when p = q
    double S2p = 0.0, S2q = 0.0;
    double lambda1 = 0.0;
    double omega_measure = 0.0;
    double phi0 = 0.0, psi0 = 0.0;
    double p = 2.0, q = 2.0;
    double horizon = 1.0;
    double theta = 0.5;
};

namespace detail {

inline std::vector<double> merged_breakpoints(const SystemCoefficients& c, double t0, double t1) {
    std::vector<double> ts;
    for (const CoefficientProfile* prof :
         {&c.delta1, &c.delta2, &c.h1, &c.h2, &c.k1, &c.k2}) {
        auto s = prof->sample_times(t0, t1);
        ts.insert(ts.end(), s.begin(), s.end());
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

}  // namespace detail

inline EnvelopeConstants compute_envelope(const EnvelopeInputs& in, const EpsilonMode& mode) {
    if (!(in.p >= in.q && in.q > 1.0))
        throw std::invalid_argument("compute_envelope: exponents must satisfy p >= q > 1");
    if (!(in.phi0 > 0.0))
        throw std::invalid_argument("compute_envelope: Phi0 must be positive");
    in.coefficients.validate(in.horizon);

    EnvelopeConstants e;
    e.epsilons = select_epsilons(in.coefficients, in.horizon, mode);
    e.theta = e.epsilons.theta;
    e.p = in.p;
    e.q = in.q;
    e.S2p = in.S2p;
    e.S2q = in.S2q;
    e.lambda1 = in.lambda1;
    e.omega_measure = in.omega_measure;
    e.phi0 = in.phi0;
    e.psi0 = in.psi0;
    e.horizon = in.horizon;

    const SystemCoefficients& c = in.coefficients;
    const auto bps = detail::merged_breakpoints(c, 0.0, in.horizon);
    auto sup_of = [&](auto&& f) { return detail::sampled_sup(f, 0.0, in.horizon, bps); };

    const double sup_k1e1 =
        sup_of([&](double t) { return c.k1(t) * e.epsilons.e1(t); });
    const double sup_k2e3 =
        sup_of([&](double t) { return c.k2(t) * e.epsilons.e3(t); });
    const double B1 = e.epsilons.h1_active
                          ? sup_of([&](double t) { return c.h1(t) * e.epsilons.e2(t); })
                          : 0.0;
    const double B2 = e.epsilons.h2_active
                          ? sup_of([&](double t) { return c.h2(t) * e.epsilons.e4(t); })
                          : 0.0;
    e.B = std::max(B1, B2);

    const double A1 = sup_k2e3 * std::pow(in.S2q, 2.0 * in.q) * std::pow(in.phi0, in.q - in.p);
    const double A2 = sup_k1e1 * std::pow(in.S2p, 2.0 * in.p);
    e.A = std::max(A1, A2);
    e.Atilde = std::pow(in.S2p, 2.0 * in.p) * std::max(sup_k2e3, sup_k1e1);

    const double a = in.p > in.q ? 2.0 * e.A : e.Atilde;
    e.K = a + e.B * std::pow(in.phi0, 1.0 - in.p);

    e.c1 = c.k1.inf(0.0, in.horizon) * std::pow(in.omega_measure, -(in.p - 1.0) / 2.0);
    e.c2 = c.k2.inf(0.0, in.horizon) * std::pow(in.omega_measure, -(in.q - 1.0) / 2.0);
    e.c = std::min(e.c1, e.c2);
    e.cbar = std::pow(2.0, 1.0 - in.p) * e.c;
    e.delta = std::max(c.delta1.sup(0.0, in.horizon), c.delta2.sup(0.0, in.horizon));
    e.Q = in.p > in.q
              ? (in.p - in.q) / in.p * std::pow(in.q / in.p, in.q / (in.p - in.q))
              : 0.0;
    return e;
}

/// Lower bound T: blow-up time of the majorant flow. p > q uses 2A, p = q
/// uses Atilde; B = 0 takes the analytic limit of the log form.
inline double lower_bound_T(const EnvelopeConstants& e, double p, double q) {
    if (!(p >= q && q > 1.0))
        throw std::invalid_argument("lower_bound_T: exponents must satisfy p >= q > 1");
    if (!(e.phi0 > 0.0)) throw std::invalid_argument("lower_bound_T: Phi0 must be positive");
    const double a = p > q ? 2.0 * e.A : e.Atilde;
    const double x = std::pow(e.phi0, 1.0 - p);
    if (e.B == 0.0) return x / (a * (p - 1.0));
    return std::log1p(e.B / a * x) / (e.B * (p - 1.0));
}

/// Ttilde, the coarser closed form; equal to the B -> 0 limit of T when B = 0.
inline double lower_bound_T_tilde(const EnvelopeConstants& e, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("lower_bound_T_tilde: p must exceed 1");
    if (!(e.K > 0.0)) throw std::invalid_argument("lower_bound_T_tilde: K must be positive");
    if (!(e.phi0 > 0.0))
        throw std::invalid_argument("lower_bound_T_tilde: Phi0 must be positive");
    return std::pow(e.phi0, 1.0 - p) / ((p - 1.0) * e.K);
}

/// H(psi) = -Lambda1 delta psi + 2^{1-q} c psi^q - c Q.
inline double H_of(double psi, const EnvelopeConstants& e, double /*p*/, double q) {
    return -e.lambda1 * e.delta * psi +
           std::pow(2.0, 1.0 - q) * e.c * std::pow(std::max(psi, 0.0), q) - e.c * e.Q;
}

/// Stationary point eta_m of H, the location of its minimum on psi > 0.
inline double H_stationary_point(const EnvelopeConstants& e, double q) {
    return std::pow(e.lambda1 * e.delta / (std::pow(2.0, 1.0 - q) * e.c * q), 1.0 / (q - 1.0));
}

inline double H_min_on_ray(const EnvelopeConstants& e, double p, double q, double psi0) {
    return H_of(std::max(psi0, H_stationary_point(e, q)), e, p, q);
}

inline ScalarFlow h_flow(const EnvelopeConstants& e, double p, double q) {
    return {[e, p, q](double x) { return H_of(x, e, p, q); }, q};
}

namespace detail {

template <class F>
double adaptive_simpson_rec(F&& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth = 48) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace detail

struct UpperBoundT0 {
    std::optional<double> value;
    bool h_positive_at_psi0 = false;
    bool h_positive_on_ray = false;
    std::string diagnostic;
};

/// T0 = integral of 1/H from Psi0 to infinity, computed after the substitution
/// s = eta^{1-q}, which maps the tail to s -> 0 with the bounded integrand
/// 1/((q-1) (2^{1-q} c - Lambda1 delta s - c Q s^{q/(q-1)})).
/// Requires H > 0 on the whole ray [Psi0, infinity).
inline UpperBoundT0 upper_bound_T0(const EnvelopeConstants& e, double p, double q, double psi0,
                                   double tol = 1e-8) {
    UpperBoundT0 out;
    if (!(q > 1.0)) throw std::invalid_argument("upper_bound_T0: q must exceed 1");
    if (!(psi0 > 0.0)) throw std::invalid_argument("upper_bound_T0: Psi0 must be positive");
    out.h_positive_at_psi0 = H_of(psi0, e, p, q) > 0.0;
    out.h_positive_on_ray = H_min_on_ray(e, p, q, psi0) > 0.0;
    if (!out.h_positive_on_ray) {
        out.diagnostic = out.h_positive_at_psi0
                             ? "H(Psi0) > 0 but H dips nonpositive beyond Psi0; the integral "
                               "is not a valid bound"
                             : "H(Psi0) <= 0; the blow-up hypothesis fails at the initial data";
        return out;
    }
    const double s0 = std::pow(psi0, 1.0 - q);
    const double lead = std::pow(2.0, 1.0 - q) * e.c;
    auto g = [&](double s) {
        const double denom = lead - e.lambda1 * e.delta * s - e.c * e.Q * std::pow(s, q / (q - 1.0));
        return 1.0 / ((q - 1.0) * denom);
    };
    out.value = detail::adaptive_simpson(g, 0.0, s0, 0.1 * tol);
    return out;
}

/// Equal-exponent blow-up threshold (delta Lambda1 / cbar)^{1/(p-1)} for equal exponents.
inline double tbar_threshold(const EnvelopeConstants& e, double p) {
    return std::pow(e.delta * e.lambda1 / e.cbar, 1.0 / (p - 1.0));
}

/// Tbar for p = q, defined when Psi0 exceeds the equal-exponent threshold.
inline std::optional<double> upper_bound_Tbar(const EnvelopeConstants& e, double p, double psi0) {
    if (!(p > 1.0)) throw std::invalid_argument("upper_bound_Tbar: p must exceed 1");
    const double dl = e.delta * e.lambda1;
    if (!(psi0 > tbar_threshold(e, p))) return std::nullopt;
    return -1.0 / ((p - 1.0) * dl) * std::log(1.0 - dl / (e.cbar * std::pow(psi0, p - 1.0)));
}

/// Vanishing time of the integrated comparison envelope
/// Hcal(t) = e^{(p-1) delta Lambda1 t} (Psi0^{1-p} - cbar/(delta Lambda1)) +
/// cbar/(delta Lambda1); algebraically identical to Tbar.
inline std::optional<double> tbar_via_hcal(const EnvelopeConstants& e, double p, double psi0) {
    const double dl = e.delta * e.lambda1;
    const double ratio = e.cbar / dl;
    const double y0 = std::pow(psi0, 1.0 - p);
    if (!(y0 < ratio)) return std::nullopt;
    return std::log(ratio / (ratio - y0)) / ((p - 1.0) * dl);
}

struct BoundReport {
    double T_lower = 0.0;
    double T_tilde = 0.0;
    std::optional<double> T0_upper;
    std::optional<double> Tbar_upper;
    bool h_positive_at_psi0 = false;
    bool h_positive_on_ray = false;
    bool tbar_condition = false;
    std::string t0_diagnostic;
    EnvelopeConstants constants;
};

/// Optimal theta for the Optimized epsilon mode: coarse scan (including the
/// equal split) refined by golden-section search of T_lower.
inline double optimize_theta(const EnvelopeInputs& in) {
    auto T_of = [&](double theta) {
        EnvelopeConstants e = compute_envelope(in, EpsilonMode::optimized(theta));
        return lower_bound_T(e, in.p, in.q);
    };
    double best_theta = 0.5, best_T = T_of(0.5);
    for (int i = 1; i <= 49; ++i) {
        const double theta = 0.02 * i;
        const double T = T_of(theta);
        if (T > best_T) {
            best_T = T;
            best_theta = theta;
        }
    }
    // golden refinement around the best scan point
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = std::max(0.005, best_theta - 0.02), hi = std::min(0.995, best_theta + 0.02);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = T_of(x1), f2 = T_of(x2);
    for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = T_of(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = T_of(x1);
        }
    }
    const double refined = 0.5 * (lo + hi);
    return T_of(refined) > best_T ? refined : best_theta;
}

inline BoundReport compute_bounds(const EnvelopeInputs& in, EpsilonMode mode) {
    if (mode.kind == EpsilonMode::Kind::Optimized && !mode.theta) {
        const bool any_h = in.coefficients.h1.sup(0.0, in.horizon) > 0.0 ||
                           in.coefficients.h2.sup(0.0, in.horizon) > 0.0;
        mode.theta = any_h ? optimize_theta(in) : 0.5;
    }
    BoundReport rep;
    rep.constants = compute_envelope(in, mode);
    rep.T_lower = lower_bound_T(rep.constants, in.p, in.q);
    rep.T_tilde = lower_bound_T_tilde(rep.constants, in.p);
    if (in.psi0 > 0.0) {
        UpperBoundT0 t0 = upper_bound_T0(rep.constants, in.p, in.q, in.psi0);
        rep.T0_upper = t0.value;
        rep.h_positive_at_psi0 = t0.h_positive_at_psi0;
        rep.h_positive_on_ray = t0.h_positive_on_ray;
        rep.t0_diagnostic = t0.diagnostic;
        if (in.p == in.q) {
            rep.Tbar_upper = upper_bound_Tbar(rep.constants, in.p, in.psi0);
            rep.tbar_condition = rep.Tbar_upper.has_value();
        }
    }
    return rep;
}

}  // namespace quenchlab
