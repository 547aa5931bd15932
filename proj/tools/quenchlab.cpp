// Command-line laboratory for the coupled fourth-order parabolic system:
// clamped-plate spectra, embedding constants, blow-up time bounds, time
// integration, bound verification and parameter sweeps.
//
// Exit codes: 0 success, 1 validation/config error, 2 numerical failure,
// 3 sandwich verification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "quenchlab/harness.hpp"

using namespace quenchlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitSandwich = 3;

struct PreparedScenario {
    ScenarioConfig cfg;
    DomainOperators ops;
    EigenPair eig;
};

PreparedScenario prepare(const std::string& config_path, double eig_tol = 1e-10) {
    ScenarioConfig cfg = load_scenario(config_path);
    DomainOperators ops = DomainOperators::build(cfg.domain);
    EigenPair eig = first_eigenpair(ops.bilaplacian, ops.quadrature, ops.grid, eig_tol);
    return {std::move(cfg), std::move(ops), std::move(eig)};
}

int cmd_eig(const std::string& config_path, double tol) {
    PreparedScenario ps = prepare(config_path, tol);
    PositivityReport pos = verify_positivity(ps.eig, ps.ops.grid);
    const double norm = norm_L2(ps.eig.phi1, ps.ops.quadrature);
    std::printf("domain          %s\n",
                ps.cfg.domain.kind == DomainKind::Ball ? "ball" : "rectangle");
    std::printf("Lambda1         %.12g\n", ps.eig.lambda1);
    std::printf("residual        %.3e\n", ps.eig.residual);
    std::printf("iterations      %d\n", ps.eig.iterations);
    std::printf("|phi1|_2        %.15g\n", norm);
    std::printf("min phi1        %.6e\n", pos.min_interior);
    std::printf("positivity      %s%s\n", pos.positive ? "pass" : "fail",
                pos.guaranteed_domain ? " (guaranteed on balls)" : " (informational)");
    return kExitOk;
}

int cmd_sobolev(const std::string& config_path, std::vector<double> rs) {
    PreparedScenario ps = prepare(config_path);
    if (rs.empty()) rs = {2.0, 2.0 * ps.cfg.q, 2.0 * ps.cfg.p};
    std::printf("%-10s %-14s %-18s %s\n", "r", "S(r)", "method", "iterations");
    for (double r : rs) {
        SobolevEstimate est =
            sobolev_constant(ps.ops.bilaplacian, ps.ops.quadrature, ps.ops.grid, ps.eig, r);
        std::printf("%-10g %-14.8g %-18s %d%s\n", r, est.value,
                    est.method == SobolevMethod::RayleighExact ? "rayleigh-exact"
                                                               : "variational-ascent",
                    est.iterations, est.converged ? "" : " (not converged)");
    }
    return kExitOk;
}

int cmd_simulate(const std::string& config_path) {
    ScenarioConfig cfg = load_scenario(config_path);
    VerifyOptions opt;
    opt.with_bounds = false;
    VerifyOutcome out = verify_scenario(cfg, opt);
    std::printf("scenario        %s\n", cfg.name.c_str());
    std::printf("verdict         %s\n", to_string(out.report.run_verdict));
    std::printf("final t         %.8g\n", out.report.final_t);
    std::printf("samples         %zu\n", out.trajectory.samples.size());
    std::printf("phi(0) .. end   %.8g .. %.8g\n", out.trajectory.samples.front().phi,
                out.trajectory.samples.back().phi);
    if (out.report.tstar_psi.value)
        std::printf("tstar           %.8g  bracket [%.8g, %.8g]\n", *out.report.tstar_psi.value,
                    out.report.tstar_psi.low, out.report.tstar_psi.high);
    if (!out.report.nonnegativity_ok)
        std::printf("note            state left the nonnegativity hypothesis\n");
    return kExitOk;
}

int cmd_bounds(const std::string& config_path) {
    ScenarioConfig cfg = load_scenario(config_path);
    cfg.coefficients.validate(cfg.horizon);
    VerifyOptions opt;
    opt.emit_outputs = false;
    // bounds only: skip the evolution by shrinking the horizon to one step
    ScenarioConfig bounds_cfg = cfg;
    bounds_cfg.horizon = std::min(cfg.horizon, 1e-9);
    bounds_cfg.envelope_horizon =
        cfg.envelope_horizon > 0.0 ? cfg.envelope_horizon : cfg.horizon;
    VerifyOutcome out = verify_scenario(bounds_cfg, opt);
    out.report.scenario = cfg.name;
    std::fputs(bounds_text(out.report).c_str(), stdout);
    nlohmann::ordered_json j = summary_json(out.report);
    j.erase("tstar");
    j.erase("tstar_phi");
    j["verdicts"].erase("run");
    j["verdicts"].erase("sandwich");
    j["verdicts"].erase("sandwich_reason");
    j["verdicts"].erase("l2_bound");
    j["verdicts"].erase("nonnegativity");
    std::printf("%s\n", j.dump(2).c_str());
    if (!cfg.outputs.outdir.empty() && cfg.outputs.json) {
        std::filesystem::create_directories(cfg.outputs.outdir);
        std::ofstream js(cfg.outputs.outdir / "bounds.json");
        js << j.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_verify(const std::string& config_path) {
    ScenarioConfig cfg = load_scenario(config_path);
    VerifyOutcome out = verify_scenario(cfg);
    const VerificationReport& rep = out.report;
    std::fputs(bounds_text(rep).c_str(), stdout);
    std::printf("run verdict     %s (final t = %.8g)\n", to_string(rep.run_verdict), rep.final_t);
    if (rep.tstar_psi.value)
        std::printf("tstar (psi)     %.8g  bracket [%.8g, %.8g]\n", *rep.tstar_psi.value,
                    rep.tstar_psi.low, rep.tstar_psi.high);
    if (rep.tstar_phi.value)
        std::printf("tstar (phi)     %.8g  bracket [%.8g, %.8g]\n", *rep.tstar_phi.value,
                    rep.tstar_phi.low, rep.tstar_phi.high);
    std::printf("L2-bound check  %s (worst ratio %.12g)\n", rep.l2_bound_ok ? "pass" : "FAIL",
                rep.l2_bound_worst);
    std::printf("nonnegativity   %s\n", rep.nonnegativity_ok ? "pass" : "flagged");
    std::printf("sandwich        %s: %s\n", to_string(rep.sandwich),
                rep.sandwich_reason.c_str());
    return rep.sandwich == SandwichVerdict::Fail ? kExitSandwich : kExitOk;
}

int cmd_sweep(const std::string& config_path, std::optional<unsigned> threads) {
    ScenarioConfig cfg = load_scenario(config_path);
    std::vector<SweepRow> rows = run_sweep(cfg, threads);
    std::filesystem::path csv_path;
    if (!cfg.outputs.outdir.empty()) {
        std::filesystem::create_directories(cfg.outputs.outdir);
        csv_path = cfg.outputs.outdir / "sweep.csv";
        std::ofstream out(csv_path);
        write_sweep_csv(out, rows);
    }
    write_sweep_csv(std::cout, rows);
    if (!csv_path.empty()) std::printf("# wrote %s\n", csv_path.string().c_str());
    int failures = 0;
    for (const SweepRow& row : rows)
        if (row.failed) ++failures;
    if (failures) std::printf("# %d row(s) failed\n", failures);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quenchlab: blow-up bounds laboratory for a coupled fourth-order system"};
    app.require_subcommand(1);

    std::string config_path;
    double eig_tol = 1e-10;
    std::vector<double> sobolev_r;
    std::optional<unsigned> threads;

    CLI::App* eig = app.add_subcommand("eig", "first clamped-plate eigenpair");
    eig->add_option("config", config_path, "scenario config")->required();
    eig->add_option("--tol", eig_tol, "Rayleigh-quotient increment tolerance");

    CLI::App* sob = app.add_subcommand("sobolev", "embedding constant table");
    sob->add_option("config", config_path, "scenario config")->required();
    sob->add_option("--r", sobolev_r, "exponents r (default: 2, 2q, 2p)")->delimiter(',');

    CLI::App* sim = app.add_subcommand("simulate", "time integration only");
    sim->add_option("config", config_path, "scenario config")->required();

    CLI::App* bnd = app.add_subcommand("bounds", "envelope constants and bounds");
    bnd->add_option("config", config_path, "scenario config")->required();

    CLI::App* ver = app.add_subcommand("verify", "bounds + run + sandwich check");
    ver->add_option("config", config_path, "scenario config")->required();

    CLI::App* swp = app.add_subcommand("sweep", "parameter sweep");
    swp->add_option("config", config_path, "scenario config")->required();
    unsigned threads_raw = 0;
    swp->add_option("--threads", threads_raw, "cap worker threads (default QUENCHLAB_THREADS)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (app.got_subcommand(eig)) return cmd_eig(config_path, eig_tol);
        if (app.got_subcommand(sob)) return cmd_sobolev(config_path, sobolev_r);
        if (app.got_subcommand(sim)) return cmd_simulate(config_path);
        if (app.got_subcommand(bnd)) return cmd_bounds(config_path);
        if (app.got_subcommand(ver)) return cmd_verify(config_path);
        if (app.got_subcommand(swp)) {
            if (threads_raw > 0) threads = threads_raw;
            return cmd_sweep(config_path, threads);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitValidation;
}
