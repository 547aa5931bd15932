#pragma once

// Scenario orchestration: builds the discrete machinery, computes spectral
// data and bounds, runs the evolution, extrapolates the blow-up time, checks
// the lower <= t* <= upper sandwich together with the eigenvalue inequality
// along the trajectory, and drives parameter sweeps.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "quenchlab/bounds.hpp"
#include "quenchlab/evolution.hpp"
#include "quenchlab/report.hpp"
#include "quenchlab/scenario.hpp"
#include "quenchlab/spectrum.hpp"

namespace quenchlab {

struct VerifyOutcome {
    VerificationReport report;
    Trajectory trajectory;
};

struct VerifyOptions {
    bool with_bounds = true;
    bool emit_outputs = true;
    double eig_tol = 1e-10;
};

inline SystemSpec make_system_spec(const ScenarioConfig& cfg, const DomainOperators& ops,
                                   const EigenPair& eig) {
    SystemSpec spec;
    spec.domain = cfg.domain;
    spec.coefficients = cfg.coefficients;
    spec.p = cfg.p;
    spec.q = cfg.q;
    const std::filesystem::path base =
        cfg.source_path.empty() ? std::filesystem::current_path() : cfg.source_path.parent_path();
    spec.u0 = materialize_initial(cfg.u0, ops.grid, &eig.phi1, cfg.amplitude_scale, base);
    spec.v0 = materialize_initial(cfg.v0, ops.grid, &eig.phi1, cfg.amplitude_scale, base);
    spec.horizon = cfg.horizon;
    spec.blowup_threshold = cfg.blowup_threshold;
    spec.dt_max = cfg.dt_max;
    spec.safety = cfg.safety;
    return spec;
}

inline VerifyOutcome verify_scenario(const ScenarioConfig& cfg, const VerifyOptions& opt = {}) {
    DomainOperators ops = DomainOperators::build(cfg.domain);
    EigenPair eig = first_eigenpair(ops.bilaplacian, ops.quadrature, ops.grid, opt.eig_tol);
    SystemSpec spec = make_system_spec(cfg, ops, eig);
    spec.validate(ops.grid);

    VerifyOutcome out;
    VerificationReport& rep = out.report;
    rep.scenario = cfg.name;
    rep.lambda1 = eig.lambda1;
    rep.eig_residual = eig.residual;
    rep.phi1_min = verify_positivity(eig, ops.grid).min_interior;

    const Functionals f0 = functionals(spec.u0, spec.v0, ops, eig);
    rep.phi0 = f0.phi;
    rep.psi0 = f0.psi;
    rep.upper_bounds_applicable = cfg.domain.kind == DomainKind::Ball &&
                              cfg.coefficients.h_identically_zero(cfg.horizon);
    rep.lower_applicable = sobolev_admissible(cfg.domain.dimension, 2.0 * cfg.p) &&
                           sobolev_admissible(cfg.domain.dimension, 2.0 * cfg.q);

    if (opt.with_bounds && rep.phi0 > 0.0) {
        cfg.coefficients.validate(cfg.horizon);  // bounds need strictly positive sources
        if (rep.lower_applicable) {
            rep.S2p =
                sobolev_constant(ops.bilaplacian, ops.quadrature, ops.grid, eig, 2.0 * cfg.p);
            rep.S2q =
                sobolev_constant(ops.bilaplacian, ops.quadrature, ops.grid, eig, 2.0 * cfg.q);
        }
        EnvelopeInputs in;
        in.coefficients = cfg.coefficients;
        in.p = cfg.p;
        in.q = cfg.q;
        // inadmissible embedding exponents disable the lower bounds only;
        // the eigenfunction-weighted path does not use them
        in.S2p = rep.lower_applicable ? rep.S2p.value : 0.0;
        in.S2q = rep.lower_applicable ? rep.S2q.value : 0.0;
        in.lambda1 = eig.lambda1;
        in.omega_measure = ops.quadrature.measure;
        in.phi0 = rep.phi0;
        in.psi0 = rep.psi0;
        in.horizon = cfg.envelope_horizon > 0.0 ? cfg.envelope_horizon : cfg.horizon;
        if (rep.lower_applicable) {
            rep.bounds = compute_bounds(in, cfg.epsilon_mode);
            rep.lower_bounds_present = true;
        } else if (rep.psi0 > 0.0) {
            rep.bounds.constants = compute_envelope(in, EpsilonMode::equal_split());
            UpperBoundT0 t0 = upper_bound_T0(rep.bounds.constants, in.p, in.q, in.psi0);
            rep.bounds.T0_upper = t0.value;
            rep.bounds.h_positive_at_psi0 = t0.h_positive_at_psi0;
            rep.bounds.h_positive_on_ray = t0.h_positive_on_ray;
            rep.bounds.t0_diagnostic = t0.diagnostic;
            if (in.p == in.q) {
                rep.bounds.Tbar_upper = upper_bound_Tbar(rep.bounds.constants, in.p, in.psi0);
                rep.bounds.tbar_condition = rep.bounds.Tbar_upper.has_value();
            }
        }
        if (!rep.upper_bounds_applicable) {
            // the upper bounds require a ball with h = 0
            rep.bounds.T0_upper.reset();
            rep.bounds.Tbar_upper.reset();
        }
    }

    // eigenvalue inequality along the trajectory:
    // ||u||_2^2 + ||v||_2^2 <= Lambda1^{-1} phi
    const Eigen::VectorXd& w = ops.bilaplacian.interior_weights();
    double worst = 0.0;
    RunObserver observer = [&](const TrajectorySample& s, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v) {
        if (!(s.phi > 0.0)) return;
        const double l2 = u.dot(w.asDiagonal() * u) + v.dot(w.asDiagonal() * v);
        worst = std::max(worst, l2 * eig.lambda1 / s.phi);
    };

    out.trajectory = run(spec, ops, eig, observer);
    rep.l2_bound_worst = worst;
    rep.l2_bound_ok = worst <= 1.0 + 1e-8;
    rep.nonnegativity_ok = !out.trajectory.nonnegativity_flag;
    rep.run_verdict = out.trajectory.verdict;
    rep.final_t = out.trajectory.samples.back().t;

    if (out.trajectory.verdict == RunVerdict::BlowupDetected) {
        rep.tstar_psi = estimate_tstar(out.trajectory, blowup_fit_exponent_psi(cfg.p, cfg.q));
        std::vector<double> ts, phis;
        for (const TrajectorySample& s : out.trajectory.samples) {
            ts.push_back(s.t);
            phis.push_back(s.phi);
        }
        rep.tstar_phi =
            estimate_tstar_series(ts, phis, blowup_fit_exponent_phi(cfg.p, cfg.q));
    } else {
        rep.tstar_psi.diagnostic = "no blow-up within the horizon";
        rep.tstar_phi.diagnostic = rep.tstar_psi.diagnostic;
    }

    const std::optional<double> upper = rep.effective_upper();
    if (!opt.with_bounds) {
        rep.sandwich = SandwichVerdict::NotApplicable;
        rep.sandwich_reason = "bounds not requested";
    } else if (!rep.lower_bounds_present) {
        rep.sandwich = SandwichVerdict::NotApplicable;
        rep.sandwich_reason = rep.phi0 > 0.0
                                  ? "lower bound unavailable: embedding exponents outside the "
                                    "admissible range"
                                  : "lower bound unavailable: zero initial energy";
    } else if (!upper) {
        rep.sandwich = SandwichVerdict::NotApplicable;
        rep.sandwich_reason = rep.upper_bounds_applicable
                                  ? "upper bound not admissible: " + rep.bounds.t0_diagnostic
                                  : "upper bounds require a ball domain with h = 0";
    } else if (out.trajectory.verdict == RunVerdict::BlowupDetected) {
        if (!rep.tstar_psi.value) {
            rep.sandwich = SandwichVerdict::Fail;
            rep.sandwich_reason = "blow-up detected but no extrapolation: " +
                                  rep.tstar_psi.diagnostic;
        } else if (rep.bounds.T_lower <= rep.tstar_psi.low && rep.tstar_psi.high <= *upper) {
            rep.sandwich = SandwichVerdict::Pass;
            rep.sandwich_reason = "T <= t* <= T0";
        } else {
            rep.sandwich = SandwichVerdict::Fail;
            std::ostringstream os;
            os << "sandwich violated: T=" << rep.bounds.T_lower << " t* in ["
               << rep.tstar_psi.low << ", " << rep.tstar_psi.high << "] upper=" << *upper;
            rep.sandwich_reason = os.str();
        }
    } else if (cfg.horizon >= *upper) {
        rep.sandwich = SandwichVerdict::Fail;
        rep.sandwich_reason = "predicted blow-up by the upper bound was not observed";
    } else {
        rep.sandwich = SandwichVerdict::NotApplicable;
        rep.sandwich_reason = "horizon ends before the upper bound";
    }

    if (opt.emit_outputs &&
        (cfg.outputs.csv || cfg.outputs.json || cfg.outputs.svg) &&
        !cfg.outputs.outdir.empty()) {
        std::filesystem::create_directories(cfg.outputs.outdir);
        if (cfg.outputs.csv)
            write_trajectory_csv(cfg.outputs.outdir / "trajectory.csv", out.trajectory);
        if (cfg.outputs.json) {
            std::ofstream js(cfg.outputs.outdir / "summary.json");
            js << summary_json(rep).dump(2) << '\n';
        }
        if (cfg.outputs.svg) write_trajectory_plots(cfg.outputs.outdir, out.trajectory, rep);
    }
    return out;
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    std::string name;
    std::vector<std::pair<std::string, double>> overrides;
    bool failed = false;
    std::string error;
    VerificationReport report;
};

inline unsigned sweep_thread_cap() {
    if (const char* env = std::getenv("QUENCHLAB_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

inline ScenarioConfig apply_override(ScenarioConfig cfg, const std::string& key, double value) {
    if (key == "amplitude")
        cfg.amplitude_scale = value;
    else if (key == "p")
        cfg.p = value;
    else if (key == "q")
        cfg.q = value;
    else if (key == "k1")
        cfg.coefficients.k1 = CoefficientProfile::constant(value);
    else if (key == "k2")
        cfg.coefficients.k2 = CoefficientProfile::constant(value);
    else if (key == "delta1")
        cfg.coefficients.delta1 = CoefficientProfile::constant(value);
    else if (key == "delta2")
        cfg.coefficients.delta2 = CoefficientProfile::constant(value);
    else if (key == "h1")
        cfg.coefficients.h1 = CoefficientProfile::constant(value);
    else if (key == "h2")
        cfg.coefficients.h2 = CoefficientProfile::constant(value);
    else
        throw std::invalid_argument("unknown sweep parameter '" + key + "'");
    return cfg;
}

/// Expand the sweep grid (cartesian product in key order) and run every row
/// independently; failures are isolated per row. Parallelism is capped by
/// QUENCHLAB_THREADS.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& base,
                                       std::optional<unsigned> max_threads = std::nullopt) {
    std::vector<std::pair<std::string, std::vector<double>>> axes(base.sweep.begin(),
                                                                  base.sweep.end());
    std::vector<SweepRow> rows;
    if (axes.empty()) return rows;

    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        SweepRow row;
        std::ostringstream name;
        name << base.name;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const double v = axes[a].second[idx[a]];
            row.overrides.emplace_back(axes[a].first, v);
            name << '-' << axes[a].first << v;
        }
        row.name = name.str();
        rows.push_back(std::move(row));
        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++idx[a] < axes[a].second.size()) break;
            idx[a] = 0;
        }
        if (a == axes.size()) break;
    }

    const unsigned cap = std::min<unsigned>(max_threads.value_or(sweep_thread_cap()),
                                            static_cast<unsigned>(rows.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rows.size()) return;
            SweepRow& row = rows[i];
            try {
                ScenarioConfig cfg = base;
                cfg.name = row.name;
                cfg.sweep.clear();
                for (const auto& [key, value] : row.overrides)
                    cfg = apply_override(std::move(cfg), key, value);
                if (!cfg.outputs.outdir.empty()) cfg.outputs.outdir /= row.name;
                VerifyOptions opt;
                row.report = verify_scenario(cfg, opt).report;
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
        }
    };
    if (cap <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < cap; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "name";
    if (!rows.empty())
        for (const auto& [key, value] : rows.front().overrides) out << ',' << key;
    out << ",T,Ttilde,T0,Tbar,tstar,tstar_low,tstar_high,verdict,ratio_tstar_T,ratio_T0_tstar,"
           "error\n";
    auto opt = [](const std::optional<double>& v) {
        return v ? detail::fmt(*v) : std::string();
    };
    for (const SweepRow& row : rows) {
        out << row.name;
        for (const auto& [key, value] : row.overrides) out << ',' << detail::fmt(value);
        const VerificationReport& r = row.report;
        if (row.failed) {
            out << ",,,,,,,,,,," << row.error << '\n';
            continue;
        }
        const std::optional<double> upper = r.effective_upper();
        std::optional<double> lower, lower_tilde;
        if (r.lower_bounds_present) {
            lower = r.bounds.T_lower;
            lower_tilde = r.bounds.T_tilde;
        }
        std::optional<double> ratio_lo, ratio_hi;
        if (r.tstar_psi.value && lower && *lower > 0.0)
            ratio_lo = *r.tstar_psi.value / *lower;
        if (r.tstar_psi.value && upper && *r.tstar_psi.value > 0.0)
            ratio_hi = *upper / *r.tstar_psi.value;
        out << ',' << opt(lower) << ',' << opt(lower_tilde) << ',' << opt(r.bounds.T0_upper)
            << ',' << opt(r.bounds.Tbar_upper) << ',' << opt(r.tstar_psi.value) << ','
            << detail::fmt(r.tstar_psi.low) << ',' << detail::fmt(r.tstar_psi.high) << ','
            << to_string(r.run_verdict) << ',' << opt(ratio_lo) << ',' << opt(ratio_hi)
            << ",\n";
    }
}

}  // namespace quenchlab
