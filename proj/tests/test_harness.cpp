#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "quenchlab/harness.hpp"

using namespace quenchlab;
namespace fs = std::filesystem;

namespace {

ScenarioConfig disk_config(double phi1_amplitude, double horizon, int res = 48) {
    ScenarioConfig cfg;
    cfg.name = "disk";
    cfg.domain.kind = DomainKind::Ball;
    cfg.domain.dimension = 2;
    cfg.domain.radius = 1.0;
    cfg.domain.resolution = res;
    cfg.p = 2.0;
    cfg.q = 2.0;
    cfg.u0.kind = InitialProfile::Kind::Phi1;
    cfg.u0.amplitude = phi1_amplitude;
    cfg.v0 = cfg.u0;
    cfg.horizon = horizon;
    cfg.blowup_threshold = 1e6;
    return cfg;
}

}  // namespace

TEST_CASE("supercritical disk scenario passes the sandwich") {
    // explicit threshold at unit coefficients is Lambda1/cbar ~ 370 in psi;
    // psi0 = 2 * amplitude for eigenfunction data
    ScenarioConfig cfg = disk_config(280.0, 0.2);
    VerifyOutcome out = verify_scenario(cfg, {.with_bounds = true, .emit_outputs = false});
    const VerificationReport& rep = out.report;
    CHECK(rep.upper_bounds_applicable);
    CHECK(rep.psi0 == doctest::Approx(560.0).epsilon(1e-10));
    CHECK(rep.bounds.tbar_condition);
    REQUIRE(rep.bounds.Tbar_upper.has_value());
    CHECK(rep.run_verdict == RunVerdict::BlowupDetected);
    REQUIRE(rep.tstar_psi.value.has_value());
    CHECK(rep.sandwich == SandwichVerdict::Pass);
    CHECK(rep.l2_bound_ok);
    CHECK(rep.bounds.T_lower <= rep.tstar_psi.low);
    CHECK(rep.tstar_psi.high <= *rep.effective_upper());
}

TEST_CASE("small-data scenario completes with lower bound only") {
    ScenarioConfig cfg = disk_config(5.0, 0.02);
    VerifyOutcome out = verify_scenario(cfg, {.with_bounds = true, .emit_outputs = false});
    const VerificationReport& rep = out.report;
    CHECK(rep.run_verdict == RunVerdict::CompletedHorizon);
    CHECK(rep.bounds.T_lower > 0.0);
    CHECK_FALSE(rep.bounds.tbar_condition);      // below the threshold
    CHECK_FALSE(rep.bounds.Tbar_upper.has_value());
    CHECK_FALSE(rep.bounds.h_positive_on_ray);        // H dips negative on the ray
    CHECK(rep.sandwich == SandwichVerdict::NotApplicable);
    CHECK(rep.l2_bound_ok);
}

TEST_CASE("rectangle scenarios mark the upper bounds not applicable") {
    ScenarioConfig cfg;
    cfg.name = "square";
    cfg.domain.kind = DomainKind::Rectangle;
    cfg.domain.resolution = 24;
    cfg.p = 2.0;
    cfg.q = 2.0;
    cfg.u0.kind = InitialProfile::Kind::SinSq;
    cfg.u0.amplitude = 3.0;
    cfg.v0 = cfg.u0;
    cfg.horizon = 1e-3;
    VerifyOutcome out = verify_scenario(cfg, {.with_bounds = true, .emit_outputs = false});
    CHECK_FALSE(out.report.upper_bounds_applicable);
    CHECK_FALSE(out.report.bounds.T0_upper.has_value());
    CHECK_FALSE(out.report.bounds.Tbar_upper.has_value());
    CHECK(out.report.bounds.T_lower > 0.0);
    CHECK(out.report.sandwich == SandwichVerdict::NotApplicable);
    CHECK(out.report.sandwich_reason.find("ball") != std::string::npos);
}

TEST_CASE("small square data complete the computed safe interval") {
    ScenarioConfig cfg;
    cfg.name = "square-safe";
    cfg.domain.kind = DomainKind::Rectangle;
    cfg.domain.resolution = 32;
    cfg.p = 3.0;
    cfg.q = 2.0;
    // amplitude chosen so the guaranteed interval is desk-scale
    cfg.u0.kind = InitialProfile::Kind::SinSq;
    cfg.u0.amplitude = 17.0;
    cfg.v0 = cfg.u0;
    cfg.horizon = 1e-6;  // probe pass for the bound only
    cfg.envelope_horizon = 1.0;
    VerifyOutcome probe = verify_scenario(cfg, {.with_bounds = true, .emit_outputs = false});
    const double T = probe.report.bounds.T_lower;
    REQUIRE(T > 0.0);

    cfg.horizon = T;
    VerifyOutcome out = verify_scenario(cfg, {.with_bounds = true, .emit_outputs = false});
    CHECK(out.report.run_verdict == RunVerdict::CompletedHorizon);
    CHECK(out.report.l2_bound_ok);
    for (const TrajectorySample& s : out.trajectory.samples) CHECK(std::isfinite(s.phi));
}

TEST_CASE("inadmissible embedding exponents keep the upper bounds") {
    // N = 6 ball with p = 3: 2p = 6 is not below 2N/(N-4) = 6, so the lower
    // bounds are unavailable while the eigenfunction-weighted bounds remain
    ScenarioConfig cfg;
    cfg.name = "ball6";
    cfg.domain.kind = DomainKind::Ball;
    cfg.domain.dimension = 6;
    cfg.domain.radius = 1.0;
    cfg.domain.resolution = 48;
    cfg.p = 3.0;
    cfg.q = 2.0;
    cfg.u0.kind = InitialProfile::Kind::Phi1;
    cfg.u0.amplitude = 1e5;
    cfg.v0 = cfg.u0;
    cfg.horizon = 1e-5;
    VerifyOutcome out = verify_scenario(cfg, {.with_bounds = true, .emit_outputs = false});
    CHECK_FALSE(out.report.lower_applicable);
    CHECK_FALSE(out.report.lower_bounds_present);
    CHECK(out.report.upper_bounds_applicable);
    CHECK(out.report.bounds.h_positive_at_psi0);
    CHECK(out.report.bounds.T0_upper.has_value());
    CHECK(out.report.sandwich == SandwichVerdict::NotApplicable);
    nlohmann::ordered_json j = summary_json(out.report);
    CHECK(j["bounds"]["T"].is_null());
    CHECK_FALSE(j["bounds"]["T0"].is_null());
}

TEST_CASE("nonzero h disables the upper bounds") {
    ScenarioConfig cfg = disk_config(280.0, 1e-3);
    cfg.coefficients.h1 = CoefficientProfile::constant(0.5);
    VerifyOutcome out = verify_scenario(cfg, {.with_bounds = true, .emit_outputs = false});
    CHECK_FALSE(out.report.upper_bounds_applicable);
    CHECK_FALSE(out.report.bounds.Tbar_upper.has_value());
    CHECK(out.report.bounds.constants.B > 0.0);
}

TEST_CASE("sweep grids expand as cartesian products") {
    ScenarioConfig cfg = disk_config(5.0, 1e-3, 32);
    cfg.sweep["amplitude"] = {0.5, 1.0, 2.0};
    cfg.sweep["k1"] = {1.0, 2.0, 3.0};
    std::vector<SweepRow> rows = run_sweep(cfg, 2);
    REQUIRE(rows.size() == 9);
    for (const SweepRow& row : rows) {
        CHECK_FALSE(row.failed);
        CHECK(row.overrides.size() == 2);
    }
    // names are unique
    std::set<std::string> names;
    for (const SweepRow& row : rows) names.insert(row.name);
    CHECK(names.size() == 9);

    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    std::istringstream lines(csv.str());
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 10);  // header + 9 rows
    CHECK(csv.str().find("ratio_tstar_T") != std::string::npos);
}

TEST_CASE("empty sweep grid yields an empty table") {
    ScenarioConfig cfg = disk_config(5.0, 1e-3, 32);
    CHECK(run_sweep(cfg).empty());
    std::ostringstream csv;
    write_sweep_csv(csv, {});
    CHECK(csv.str().find("name") == 0);
}

TEST_CASE("sweep rows isolate failures") {
    ScenarioConfig cfg = disk_config(5.0, 1e-3, 32);
    cfg.sweep["delta1"] = {1.0, -1.0};
    std::vector<SweepRow> rows = run_sweep(cfg, 1);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].failed);
    CHECK(rows[1].failed);
    CHECK_FALSE(rows[1].error.empty());
}

TEST_CASE("json summary and csv trajectory agree") {
    ScenarioConfig cfg = disk_config(250.0, 0.2);
    const fs::path outdir = fs::temp_directory_path() / "quenchlab-out";
    fs::remove_all(outdir);
    cfg.outputs.csv = cfg.outputs.json = cfg.outputs.svg = true;
    cfg.outputs.outdir = outdir;
    VerifyOutcome out = verify_scenario(cfg);
    REQUIRE(fs::exists(outdir / "trajectory.csv"));
    REQUIRE(fs::exists(outdir / "summary.json"));
    REQUIRE(fs::exists(outdir / "phi.svg"));
    REQUIRE(fs::exists(outdir / "psi.svg"));

    std::ifstream js(outdir / "summary.json");
    nlohmann::json j = nlohmann::json::parse(js);
    CHECK(j["lambda1"].get<double>() == doctest::Approx(out.report.lambda1));
    CHECK(j["constants"]["Phi0"].get<double>() == doctest::Approx(out.report.phi0));

    // spot-check phi at three sample times against the csv
    std::ifstream csv(outdir / "trajectory.csv");
    std::string header, line;
    std::getline(csv, header);
    CHECK(header == "t,phi,phi1,phi2,psi,psi1,psi2,sup_u,sup_v,min_u,min_v,dt");
    std::vector<std::pair<double, double>> rows;
    while (std::getline(csv, line)) {
        std::istringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        const double t = std::stod(cell);
        std::getline(ss, cell, ',');
        rows.emplace_back(t, std::stod(cell));
    }
    REQUIRE(rows.size() == out.trajectory.samples.size());
    for (std::size_t pick : {std::size_t(0), rows.size() / 2, rows.size() - 1}) {
        CHECK(rows[pick].first == doctest::Approx(out.trajectory.samples[pick].t).epsilon(1e-15));
        CHECK(rows[pick].second ==
              doctest::Approx(out.trajectory.samples[pick].phi).epsilon(1e-15));
    }
    // tstar bracket low equals the last sample time
    CHECK(j["tstar"]["low"].get<double>() == doctest::Approx(rows.back().first));
}

TEST_CASE("identical scenarios produce byte-identical artifacts") {
    ScenarioConfig cfg = disk_config(250.0, 0.05);
    auto render = [&]() {
        VerifyOutcome out = verify_scenario(cfg, {.with_bounds = true, .emit_outputs = false});
        std::ostringstream csv;
        write_trajectory_csv(csv, out.trajectory);
        return csv.str() + summary_json(out.report).dump();
    };
    CHECK(render() == render());
}

TEST_CASE("sweep artifacts are identical across thread counts") {
    ScenarioConfig cfg = disk_config(5.0, 1e-3, 32);
    cfg.sweep["amplitude"] = {0.5, 1.0, 2.0};
    cfg.sweep["k1"] = {1.0, 2.0};
    auto render = [&](unsigned threads) {
        std::ostringstream csv;
        write_sweep_csv(csv, run_sweep(cfg, threads));
        return csv.str();
    };
    CHECK(render(1) == render(4));
}

TEST_CASE("thread cap environment variable") {
    setenv("QUENCHLAB_THREADS", "3", 1);
    CHECK(sweep_thread_cap() == 3);
    unsetenv("QUENCHLAB_THREADS");
    CHECK(sweep_thread_cap() >= 1);
}
