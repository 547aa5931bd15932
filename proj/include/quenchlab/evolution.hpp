#pragma once

// Time integration of the coupled fourth-order system: linearly implicit
// Euler for the stiff linear part (bilaplacian and Laplacian), explicit
// positive-part power sources, adaptive step control tied to the source
// stiffness, blow-up detection against a sup-norm threshold, and power-law
// extrapolation of the blow-up time.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quenchlab/coefficients.hpp"
#include "quenchlab/grid.hpp"
#include "quenchlab/operators.hpp"
#include "quenchlab/spectrum.hpp"

namespace quenchlab {

struct SystemSpec {
    DomainDescriptor domain;
    SystemCoefficients coefficients;
    double p = 2.0;
    double q = 2.0;  // p >= q > 1
    Field u0, v0;    // nonnegative, clamped-compatible
    double horizon = 1.0;
    double blowup_threshold = 1e8;
    double dt_max = 0.0;  // 0 selects the stiffness-scaled default
    double safety = 0.1;

    void validate(const Grid& grid) const {
        if (!(p >= q && q > 1.0))
            throw std::invalid_argument("system: exponents must satisfy p >= q > 1");
        if (!(horizon > 0.0)) throw std::invalid_argument("system: horizon must be positive");
        if (!(blowup_threshold > 0.0))
            throw std::invalid_argument("system: blow-up threshold must be positive");
        if (!(safety > 0.0)) throw std::invalid_argument("system: safety factor must be positive");
        coefficients.validate_run(horizon);
        if (u0.size() != grid.node_count() || v0.size() != grid.node_count())
            throw std::invalid_argument("system: initial fields do not match the grid");
        for (std::size_t k = 0; k < grid.node_count(); ++k)
            if (u0[k] < 0.0 || v0[k] < 0.0)
                throw std::invalid_argument("system: initial data must be nonnegative");
    }
};

struct TrajectorySample {
    double t = 0.0;
    double phi = 0.0, phi1 = 0.0, phi2 = 0.0;
    double psi = 0.0, psi1 = 0.0, psi2 = 0.0;
    double sup_u = 0.0, sup_v = 0.0;
    double min_u = 0.0, min_v = 0.0;
    double dt = 0.0;
};

enum class RunVerdict { CompletedHorizon, BlowupDetected };

struct TstarFit {
    std::optional<double> value;
    double low = 0.0;   // last sample time
    double high = 0.0;  // fit crossing + fit standard error
    double stderr_crossing = 0.0;
    std::string diagnostic;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    RunVerdict verdict = RunVerdict::CompletedHorizon;
    std::optional<double> tstar_numeric;
    std::pair<double, double> tstar_ci{0.0, 0.0};
    bool dt_underflow = false;
    bool nonnegativity_flag = false;  // some min dropped below -1e-6 * sup norm
    long rejected_steps = 0;
};

struct Functionals {
    double phi = 0.0, phi1 = 0.0, phi2 = 0.0;
    double psi = 0.0, psi1 = 0.0, psi2 = 0.0;
};

/// Fit exponents for the power-law extrapolation: the source balance
/// u ~ (t*-t)^{-(p+1)/(pq-1)} makes Psi^{1-p_eff} affine in t for
/// p_eff = 1 + (pq-1)/(p+1); Phi scales as the square of the state.
inline double blowup_fit_exponent_psi(double p, double q) {
    return 1.0 + (p * q - 1.0) / (p + 1.0);
}
inline double blowup_fit_exponent_phi(double p, double q) {
    return 1.0 + (p * q - 1.0) / (2.0 * (p + 1.0));
}

/// One linearly implicit step of both equations:
/// (I + dt delta_i(t+dt) bilap - dt h_i(t+dt) lap) w' = w + dt k_i(t) source.
/// Factorizations are cached and refreshed when dt or the implicit
/// coefficients move by more than 1e-12 relative.
class ImexStepper {
public:
    ImexStepper(const DomainOperators& ops, SystemCoefficients coeffs)
        : ops_(&ops), coeffs_(std::move(coeffs)), w_(ops.bilaplacian.interior_weights()) {
        const Eigen::SparseMatrix<double>& sb = ops.bilaplacian.form();
        const Eigen::SparseMatrix<double>& sl = ops.laplacian.form();
        Eigen::SparseMatrix<double> ident(sb.rows(), sb.cols());
        ident.setIdentity();
        pattern_ = sb + sl + ident;
        pattern_.makeCompressed();
        bil_vals_.resize(pattern_.nonZeros());
        lap_vals_.resize(pattern_.nonZeros());
        diag_vals_.assign(pattern_.nonZeros(), 0.0);
        Eigen::Index slot = 0;
        for (Eigen::Index col = 0; col < pattern_.outerSize(); ++col) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(pattern_, col); it; ++it, ++slot) {
                bil_vals_[slot] = sb.coeff(it.row(), col);
                lap_vals_[slot] = sl.coeff(it.row(), col);
                if (it.row() == col) diag_vals_[slot] = w_[col];
            }
        }
        eq_[0].solver.analyzePattern(pattern_);
        eq_[1].solver.analyzePattern(pattern_);
    }

    /// Advance (u, v) from t by dt; throws on factorization/solve failure.
    void step(Eigen::VectorXd& u, Eigen::VectorXd& v, double t, double dt) {
        const double te = t + dt;
        refresh(0, dt * coeffs_.delta1(te), dt * coeffs_.h1(te));
        refresh(1, dt * coeffs_.delta2(te), dt * coeffs_.h2(te));

        Eigen::VectorXd su(u.size()), sv(v.size());
        const double k1 = coeffs_.k1(t), k2 = coeffs_.k2(t);
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            su[i] = k1 * std::pow(std::max(v[i], 0.0), p_);
            sv[i] = k2 * std::pow(std::max(u[i], 0.0), q_);
        }
        Eigen::VectorXd rhs_u = w_.asDiagonal() * (u + dt * su);
        Eigen::VectorXd rhs_v = w_.asDiagonal() * (v + dt * sv);
        u = eq_[0].solver.solve(rhs_u);
        v = eq_[1].solver.solve(rhs_v);
        if (eq_[0].solver.info() != Eigen::Success || eq_[1].solver.info() != Eigen::Success)
            throw std::runtime_error("step_imex: linear solve failed");
    }

    void set_exponents(double p, double q) {
        p_ = p;
        q_ = q;
    }

private:
    struct Equation {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
        double delta_dt = -1.0, h_dt = -1.0;
        bool ready = false;
    };

    static bool close(double a, double b) {
        return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
    }

    void refresh(int which, double delta_dt, double h_dt) {
        Equation& eq = eq_[which];
        if (eq.ready && close(eq.delta_dt, delta_dt) && close(eq.h_dt, h_dt)) return;
        Eigen::SparseMatrix<double> K = pattern_;
        double* vals = K.valuePtr();
        for (Eigen::Index s = 0; s < K.nonZeros(); ++s)
            vals[s] = diag_vals_[s] + delta_dt * bil_vals_[s] - h_dt * lap_vals_[s];
        eq.solver.factorize(K);
        if (eq.solver.info() != Eigen::Success)
            throw std::runtime_error("step_imex: factorization failed");
        eq.delta_dt = delta_dt;
        eq.h_dt = h_dt;
        eq.ready = true;
    }

    const DomainOperators* ops_;
    SystemCoefficients coeffs_;
    Eigen::VectorXd w_;
    Eigen::SparseMatrix<double> pattern_;
    std::vector<double> bil_vals_, lap_vals_, diag_vals_;
    Equation eq_[2];
    double p_ = 2.0, q_ = 2.0;
};

inline Functionals functionals(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                               const DomainOperators& ops, const Eigen::VectorXd& phi1_int) {
    const Eigen::VectorXd& w = ops.bilaplacian.interior_weights();
    Functionals f;
    f.phi1 = u.dot(ops.bilaplacian.form() * u);
    f.phi2 = v.dot(ops.bilaplacian.form() * v);
    f.phi = f.phi1 + f.phi2;
    f.psi1 = u.dot(w.asDiagonal() * phi1_int);
    f.psi2 = v.dot(w.asDiagonal() * phi1_int);
    f.psi = f.psi1 + f.psi2;
    return f;
}

inline Functionals functionals(const Field& u, const Field& v, const DomainOperators& ops,
                               const EigenPair& eig) {
    return functionals(ops.bilaplacian.restrict_interior(u),
                       ops.bilaplacian.restrict_interior(v), ops,
                       ops.bilaplacian.restrict_interior(eig.phi1));
}

/// Least-squares power-law extrapolation of the blow-up time: fit a line to
/// psi^{1 - p_eff} over the trailing strictly increasing samples and return
/// the zero crossing with its delta-method standard error.
inline TstarFit estimate_tstar_series(std::span<const double> ts, std::span<const double> psis,
                                      double p_eff, std::size_t max_window = 64) {
    TstarFit fit;
    if (ts.size() != psis.size() || ts.size() < 2) {
        fit.diagnostic = "too few samples";
        return fit;
    }
    std::size_t run = 1;
    for (std::size_t i = ts.size() - 1; i > 0 && psis[i] > psis[i - 1]; --i) ++run;
    if (run < 5) {
        fit.diagnostic = "fewer than 5 trailing samples with increasing psi";
        return fit;
    }
    const std::size_t n = std::min(run, max_window);
    const std::size_t first = ts.size() - n;

    double st = 0.0, sy = 0.0;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = std::pow(psis[first + i], 1.0 - p_eff);
        st += ts[first + i];
        sy += y[i];
    }
    const double tbar = st / n, ybar = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = ts[first + i] - tbar;
        sxx += dt * dt;
        sxy += dt * (y[i] - ybar);
    }
    if (sxx == 0.0) {
        fit.diagnostic = "degenerate time window";
        return fit;
    }
    const double slope = sxy / sxx;
    const double intercept = ybar - slope * tbar;
    if (!(slope < 0.0)) {
        fit.diagnostic = "no blow-up trend: transformed psi is not decreasing";
        return fit;
    }
    const double crossing = -intercept / slope;

    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (intercept + slope * ts[first + i]);
        ss_res += r * r;
    }
    const double sigma2 = n > 2 ? ss_res / (n - 2) : 0.0;
    const double var_m = sigma2 / sxx;
    const double var_b = sigma2 * (1.0 / n + tbar * tbar / sxx);
    const double cov_bm = -sigma2 * tbar / sxx;
    const double var_tau =
        (var_b + crossing * crossing * var_m + 2.0 * crossing * cov_bm) / (slope * slope);
    fit.stderr_crossing = std::sqrt(std::max(var_tau, 0.0));
    fit.value = crossing;
    fit.low = ts.back();
    fit.high = crossing + fit.stderr_crossing;
    return fit;
}

inline TstarFit estimate_tstar(const Trajectory& traj, double p_eff) {
    std::vector<double> ts, psis;
    ts.reserve(traj.samples.size());
    psis.reserve(traj.samples.size());
    for (const TrajectorySample& s : traj.samples) {
        ts.push_back(s.t);
        psis.push_back(s.psi);
    }
    return estimate_tstar_series(ts, psis, p_eff);
}

using RunObserver =
    std::function<void(const TrajectorySample&, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Default accuracy cap for the step size: a fraction of the slowest linear
/// relaxation time 1/(delta Lambda1).
inline double default_dt_max(const SystemSpec& spec, double lambda1) {
    const double dmax = std::max(spec.coefficients.delta1.sup(0.0, spec.horizon),
                                 spec.coefficients.delta2.sup(0.0, spec.horizon));
    return 1.0 / (16.0 * dmax * lambda1);
}

inline Trajectory run(const SystemSpec& spec, const DomainOperators& ops, const EigenPair& eig,
                      const RunObserver& observer = {}) {
    spec.validate(ops.grid);
    ImexStepper stepper(ops, spec.coefficients);
    stepper.set_exponents(spec.p, spec.q);

    Eigen::VectorXd u = ops.bilaplacian.restrict_interior(spec.u0);
    Eigen::VectorXd v = ops.bilaplacian.restrict_interior(spec.v0);
    Eigen::VectorXd phi1_int = ops.bilaplacian.restrict_interior(eig.phi1);

    const double dt_cap = spec.dt_max > 0.0 ? spec.dt_max : default_dt_max(spec, eig.lambda1);
    const double pmax = std::max(spec.p, spec.q);

    Trajectory traj;
    traj.samples.reserve(1024);

    auto record = [&](double t, double dt) {
        Functionals f = functionals(u, v, ops, phi1_int);
        TrajectorySample s;
        s.t = t;
        s.phi = f.phi;
        s.phi1 = f.phi1;
        s.phi2 = f.phi2;
        s.psi = f.psi;
        s.psi1 = f.psi1;
        s.psi2 = f.psi2;
        s.sup_u = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
        s.sup_v = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
        s.min_u = u.size() ? u.minCoeff() : 0.0;
        s.min_v = v.size() ? v.minCoeff() : 0.0;
        s.dt = dt;
        if (s.min_u < -1e-6 * s.sup_u || s.min_v < -1e-6 * s.sup_v)
            traj.nonnegativity_flag = true;
        traj.samples.push_back(s);
        if (observer) observer(s, u, v);
        return s;
    };

    TrajectorySample last = record(0.0, 0.0);
    double t = 0.0;
    const double t_eps =
        4.0 * std::numeric_limits<double>::epsilon() * std::max(spec.horizon, 1.0);
    while (t < spec.horizon - t_eps) {
        if (last.sup_u + last.sup_v >= spec.blowup_threshold) {
            traj.verdict = RunVerdict::BlowupDetected;
            break;
        }
        const double s_norm = std::max(last.sup_u, last.sup_v);
        double dt = std::min({dt_cap, spec.safety / (1.0 + std::pow(s_norm, pmax - 1.0)),
                              spec.horizon - t});
        bool accepted = false;
        while (!accepted) {
            if (dt < 1e-15 * std::max(t, dt_cap)) {
                traj.dt_underflow = true;
                break;
            }
            Eigen::VectorXd u_try = u, v_try = v;
            bool ok = true;
            try {
                stepper.step(u_try, v_try, t, dt);
            } catch (const std::runtime_error&) {
                ok = false;
            }
            if (ok && u_try.allFinite() && v_try.allFinite()) {
                const double phi_new = u_try.dot(ops.bilaplacian.form() * u_try) +
                                       v_try.dot(ops.bilaplacian.form() * v_try);
                if (!(last.phi > 0.0) || phi_new <= 4.0 * last.phi) {
                    u = std::move(u_try);
                    v = std::move(v_try);
                    accepted = true;
                    break;
                }
            }
            ++traj.rejected_steps;
            dt *= 0.5;
        }
        if (!accepted) {
            // step size underflow: report the current time as a blow-up bracket
            traj.verdict = RunVerdict::BlowupDetected;
            break;
        }
        t += dt;
        last = record(t, dt);
        if (last.sup_u + last.sup_v >= spec.blowup_threshold) {
            traj.verdict = RunVerdict::BlowupDetected;
            break;
        }
    }

    if (traj.verdict == RunVerdict::BlowupDetected) {
        TstarFit fit = estimate_tstar(traj, blowup_fit_exponent_psi(spec.p, spec.q));
        traj.tstar_numeric = fit.value;
        if (fit.value)
            traj.tstar_ci = {fit.low, fit.high};
        else
            traj.tstar_ci = {t, t};
    }
    return traj;
}

}  // namespace quenchlab
