#pragma once

// Emission of run artifacts: trajectory CSV, structured JSON summaries, an
// aligned-text bound report, and static SVG plots of the tracked functionals
// with vertical markers at the computed bounds.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quenchlab/bounds.hpp"
#include "quenchlab/evolution.hpp"
#include "quenchlab/spectrum.hpp"

namespace quenchlab {

enum class SandwichVerdict { Pass, Fail, NotApplicable };

inline const char* to_string(SandwichVerdict v) {
    switch (v) {
        case SandwichVerdict::Pass: return "pass";
        case SandwichVerdict::Fail: return "fail";
        case SandwichVerdict::NotApplicable: return "not-applicable";
    }
    return "?";
}

inline const char* to_string(RunVerdict v) {
    return v == RunVerdict::BlowupDetected ? "blowup-detected" : "completed-horizon";
}

struct VerificationReport {
    std::string scenario;
    double lambda1 = 0.0;
    double eig_residual = 0.0;
    double phi1_min = 0.0;
    SobolevEstimate S2p, S2q;
    BoundReport bounds;
    double phi0 = 0.0, psi0 = 0.0;
    RunVerdict run_verdict = RunVerdict::CompletedHorizon;
    double final_t = 0.0;
    TstarFit tstar_psi, tstar_phi;
    bool l2_bound_ok = true;
    double l2_bound_worst = 0.0;  // max over samples of (||u||^2+||v||^2) lambda1 / phi
    bool nonnegativity_ok = true;
    bool upper_bounds_applicable = false;  // ball domain with h == 0
    bool lower_applicable = true;      // embedding exponents admissible
    bool lower_bounds_present = false; // T, Ttilde were computed
    SandwichVerdict sandwich = SandwichVerdict::NotApplicable;
    std::string sandwich_reason;

    std::optional<double> effective_upper() const {
        if (bounds.T0_upper && bounds.Tbar_upper)
            return std::min(*bounds.T0_upper, *bounds.Tbar_upper);
        if (bounds.T0_upper) return bounds.T0_upper;
        return bounds.Tbar_upper;
    }
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t,phi,phi1,phi2,psi,psi1,psi2,sup_u,sup_v,min_u,min_v,dt\n";
    for (const TrajectorySample& s : traj.samples) {
        out << detail::fmt(s.t) << ',' << detail::fmt(s.phi) << ',' << detail::fmt(s.phi1) << ','
            << detail::fmt(s.phi2) << ',' << detail::fmt(s.psi) << ',' << detail::fmt(s.psi1)
            << ',' << detail::fmt(s.psi2) << ',' << detail::fmt(s.sup_u) << ','
            << detail::fmt(s.sup_v) << ',' << detail::fmt(s.min_u) << ',' << detail::fmt(s.min_v)
            << ',' << detail::fmt(s.dt) << '\n';
    }
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    write_trajectory_csv(out, traj);
}

inline nlohmann::ordered_json tstar_json(const TstarFit& fit) {
    nlohmann::ordered_json j;
    if (fit.value)
        j["value"] = *fit.value;
    else
        j["value"] = nullptr;
    j["low"] = fit.low;
    j["high"] = fit.high;
    if (!fit.diagnostic.empty()) j["diagnostic"] = fit.diagnostic;
    return j;
}

inline nlohmann::ordered_json summary_json(const VerificationReport& rep) {
    nlohmann::ordered_json j;
    j["scenario"] = rep.scenario;
    j["lambda1"] = rep.lambda1;
    j["S"] = {{"2p", rep.S2p.value}, {"2q", rep.S2q.value}};
    const EnvelopeConstants& c = rep.bounds.constants;
    j["constants"] = {{"A", c.A},       {"B", c.B},     {"Atilde", c.Atilde}, {"K", c.K},
                      {"c", c.c},       {"cbar", c.cbar}, {"delta", c.delta}, {"Q", c.Q},
                      {"theta", c.theta}, {"Phi0", c.phi0}, {"Psi0", c.psi0}};
    nlohmann::ordered_json bounds;
    bounds["T"] = rep.lower_bounds_present ? nlohmann::ordered_json(rep.bounds.T_lower)
                                           : nlohmann::ordered_json(nullptr);
    bounds["Ttilde"] = rep.lower_bounds_present ? nlohmann::ordered_json(rep.bounds.T_tilde)
                                                : nlohmann::ordered_json(nullptr);
    bounds["T0"] = rep.bounds.T0_upper ? nlohmann::ordered_json(*rep.bounds.T0_upper)
                                       : nlohmann::ordered_json(nullptr);
    bounds["Tbar"] = rep.bounds.Tbar_upper ? nlohmann::ordered_json(*rep.bounds.Tbar_upper)
                                           : nlohmann::ordered_json(nullptr);
    j["bounds"] = bounds;
    j["tstar"] = tstar_json(rep.tstar_psi);
    j["tstar_phi"] = tstar_json(rep.tstar_phi);
    j["verdicts"] = {{"run", to_string(rep.run_verdict)},
                     {"sandwich", to_string(rep.sandwich)},
                     {"sandwich_reason", rep.sandwich_reason},
                     {"l2_bound", rep.l2_bound_ok ? "pass" : "fail"},
                     {"nonnegativity", rep.nonnegativity_ok ? "pass" : "flagged"},
                     {"upper_bounds_applicable", rep.upper_bounds_applicable},
                     {"lower_applicable", rep.lower_applicable},
                     {"H_positive_at_Psi0", rep.bounds.h_positive_at_psi0},
                     {"H_positive_on_ray", rep.bounds.h_positive_on_ray},
                     {"tbar_condition", rep.bounds.tbar_condition}};
    return j;
}

inline std::string bounds_text(const VerificationReport& rep) {
    const EnvelopeConstants& c = rep.bounds.constants;
    char buf[4096];
    auto opt = [](const std::optional<double>& v) {
        return v ? detail::fmt(*v) : std::string("absent");
    };
    const std::string t_lower =
        rep.lower_bounds_present ? detail::fmt(rep.bounds.T_lower) : std::string("absent");
    const std::string t_tilde =
        rep.lower_bounds_present ? detail::fmt(rep.bounds.T_tilde) : std::string("absent");
    std::snprintf(buf, sizeof buf,
                  "scenario        %s\n"
                  "Lambda1         %-22.15g |Omega|   %-22.15g\n"
                  "S(2p)           %-22.15g S(2q)     %-22.15g\n"
                  "Phi0            %-22.15g Psi0      %-22.15g\n"
                  "A               %-22.15g Atilde    %-22.15g\n"
                  "B               %-22.15g K         %-22.15g\n"
                  "c               %-22.15g cbar      %-22.15g\n"
                  "delta           %-22.15g Q         %-22.15g\n"
                  "theta           %-22.15g\n"
                  "T  (lower)      %s\n"
                  "T~ (lower)      %s\n"
                  "T0 (upper)      %s\n"
                  "T- (upper p=q)  %s\n",
                  rep.scenario.c_str(), c.lambda1, c.omega_measure, c.S2p, c.S2q, c.phi0, c.psi0,
                  c.A, c.Atilde, c.B, c.K, c.c, c.cbar, c.delta, c.Q, c.theta, t_lower.c_str(),
                  t_tilde.c_str(), opt(rep.bounds.T0_upper).c_str(),
                  opt(rep.bounds.Tbar_upper).c_str());
    std::string text = buf;
    if (!rep.bounds.t0_diagnostic.empty()) text += "note: " + rep.bounds.t0_diagnostic + "\n";
    return text;
}

// ---------------------------------------------------------------------------
// SVG plots
// ---------------------------------------------------------------------------

struct PlotMarker {
    std::string label;
    double t;
};

/// Plot (t, values) in log10-y with vertical dashed markers. Nonpositive
/// values are clipped to the bottom decade.
inline void write_series_svg(const std::filesystem::path& path, const std::string& title,
                             const std::vector<double>& ts, const std::vector<double>& values,
                             const std::vector<PlotMarker>& markers) {
    const double W = 720, H = 440, ml = 70, mr = 20, mt = 34, mb = 44;
    if (ts.empty() || ts.size() != values.size())
        throw std::invalid_argument("write_series_svg: bad series");

    double tmax = *std::max_element(ts.begin(), ts.end());
    for (const PlotMarker& m : markers) tmax = std::max(tmax, m.t);
    const double tmin = ts.front();
    if (tmax <= tmin) tmax = tmin + 1.0;

    double vmax = 1e-300;
    for (double v : values) vmax = std::max(vmax, v);
    double lmax = std::ceil(std::log10(vmax));
    double lmin = lmax - 12;
    for (double v : values)
        if (v > 0.0) lmin = std::min(lmin, std::floor(std::log10(v)));
    lmin = std::max(lmin, lmax - 16);

    auto xm = [&](double t) { return ml + (t - tmin) / (tmax - tmin) * (W - ml - mr); };
    auto ym = [&](double v) {
        const double l = v > 0.0 ? std::clamp(std::log10(v), lmin, lmax) : lmin;
        return H - mb - (l - lmin) / (lmax - lmin) * (H - mt - mb);
    };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << ml << "' y='20' font-family='monospace' font-size='14'>" << title
        << " (log10 scale)</text>\n";
    out << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    for (int l = static_cast<int>(lmin); l <= static_cast<int>(lmax); l += 2) {
        const double y = ym(std::pow(10.0, l));
        out << "<text x='6' y='" << y + 4 << "' font-family='monospace' font-size='11'>1e" << l
            << "</text>\n";
        out << "<line x1='" << ml - 4 << "' y1='" << y << "' x2='" << ml << "' y2='" << y
            << "' stroke='black'/>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double t = tmin + (tmax - tmin) * i / 5;
        out << "<text x='" << xm(t) - 16 << "' y='" << H - mb + 18
            << "' font-family='monospace' font-size='11'>" << std::round(t * 1e5) / 1e5
            << "</text>\n";
    }
    out << "<polyline fill='none' stroke='#1f4e9c' stroke-width='1.5' points='";
    const std::size_t stride = std::max<std::size_t>(1, ts.size() / 4000);
    for (std::size_t i = 0; i < ts.size(); i += stride)
        out << xm(ts[i]) << ',' << ym(values[i]) << ' ';
    out << xm(ts.back()) << ',' << ym(values.back()) << "'/>\n";
    const char* colors[] = {"#b22222", "#2e8b57", "#8b008b", "#cc8400"};
    int ci = 0;
    for (const PlotMarker& m : markers) {
        const double x = xm(m.t);
        out << "<line x1='" << x << "' y1='" << mt << "' x2='" << x << "' y2='" << H - mb
            << "' stroke='" << colors[ci % 4] << "' stroke-dasharray='5,4'/>\n";
        out << "<text x='" << x + 3 << "' y='" << mt + 12 + 14 * ci
            << "' font-family='monospace' font-size='12' fill='" << colors[ci % 4] << "'>"
            << m.label << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
}

inline void write_trajectory_plots(const std::filesystem::path& outdir, const Trajectory& traj,
                                   const VerificationReport& rep) {
    std::vector<double> ts, phis, psis;
    ts.reserve(traj.samples.size());
    for (const TrajectorySample& s : traj.samples) {
        ts.push_back(s.t);
        phis.push_back(s.phi);
        psis.push_back(s.psi);
    }
    std::vector<PlotMarker> markers;
    markers.push_back({"T", rep.bounds.T_lower});
    if (rep.tstar_psi.value) markers.push_back({"t*", *rep.tstar_psi.value});
    if (auto up = rep.effective_upper()) markers.push_back({"T0", *up});
    write_series_svg(outdir / "phi.svg", "phi(t)", ts, phis, markers);
    write_series_svg(outdir / "psi.svg", "psi(t)", ts, psis, markers);
}

}  // namespace quenchlab
