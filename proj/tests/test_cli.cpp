#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code;
    std::string output;
};

CommandResult run_cli(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "quenchlab-cli-out.txt";
    const std::string cmd = std::string(QUENCHLAB_BIN) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(rc), ss.str()};
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "quenchlab-cli-configs";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << text;
    return p;
}

std::string disk_config(double amp, double horizon, const std::string& extra_run = "") {
    std::ostringstream os;
    os << "[domain]\nkind = ball\ndimension = 2\nradius = 1.0\nresolution = 40\n"
       << "[coefficients]\ndelta1 = 1\ndelta2 = 1\nh1 = 0\nh2 = 0\nk1 = 1\nk2 = 1\n"
       << "[exponents]\np = 2\nq = 2\n"
       << "[initial]\nu0 = " << amp << "*phi1\nv0 = " << amp << "*phi1\n"
       << "[run]\nhorizon = " << horizon << "\nblowup_threshold = 1e6\n" << extra_run;
    return os.str();
}

}  // namespace

TEST_CASE("verify exits zero and reports a pass on a blow-up scenario") {
    const fs::path cfg = write_config("blowup.cfg", disk_config(280.0, 0.2));
    CommandResult res = run_cli("verify " + cfg.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("sandwich        pass") != std::string::npos);
}

TEST_CASE("bounds rejects p <= 1 with exit code 1 naming the hypothesis") {
    std::string text = disk_config(1.0, 0.01);
    const std::string needle = "p = 2";
    text.replace(text.find(needle), needle.size(), "p = 0.5");
    const fs::path cfg = write_config("badp.cfg", text);
    CommandResult res = run_cli("bounds " + cfg.string());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("p >= q > 1") != std::string::npos);
}

TEST_CASE("simulate with zero sources completes the horizon") {
    std::string text = disk_config(3.0, 0.002);
    text.replace(text.find("k1 = 1"), 6, "k1 = 0");
    text.replace(text.find("k2 = 1"), 6, "k2 = 0");
    const fs::path cfg = write_config("nosource.cfg", text);
    CommandResult res = run_cli("simulate " + cfg.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("completed-horizon") != std::string::npos);
}

TEST_CASE("eig prints the spectral report") {
    const fs::path cfg = write_config("eig.cfg", disk_config(1.0, 0.001));
    CommandResult res = run_cli("eig " + cfg.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("Lambda1") != std::string::npos);
    CHECK(res.output.find("positivity      pass") != std::string::npos);
}

TEST_CASE("sobolev prints the embedding table") {
    const fs::path cfg = write_config("sob.cfg", disk_config(1.0, 0.001));
    CommandResult res = run_cli("sobolev " + cfg.string() + " --r 2,4");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("rayleigh-exact") != std::string::npos);
    CHECK(res.output.find("variational-ascent") != std::string::npos);
}

TEST_CASE("sweep on an empty grid exits zero with an empty table") {
    const fs::path cfg = write_config("emptysweep.cfg", disk_config(1.0, 0.001));
    CommandResult res = run_cli("sweep " + cfg.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("name,") != std::string::npos);
}

TEST_CASE("malformed config exits with the validation code") {
    const fs::path cfg = write_config("broken.cfg", "[domain]\nkind = cube\n");
    CommandResult res = run_cli("verify " + cfg.string());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("config error") != std::string::npos);
}

TEST_CASE("unknown flags are a parse error") {
    CommandResult res = run_cli("verify --frobnicate x.cfg");
    CHECK(res.exit_code == 1);
}

TEST_CASE("outputs are written to the requested directory") {
    const fs::path outdir = fs::temp_directory_path() / "quenchlab-cli-artifacts";
    fs::remove_all(outdir);
    std::string extra = "outputs = csv,json,svg\noutdir = " + outdir.string() + "\n";
    const fs::path cfg = write_config("without.cfg", disk_config(250.0, 0.05, extra));
    CommandResult res = run_cli("verify " + cfg.string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(outdir / "trajectory.csv"));
    CHECK(fs::exists(outdir / "summary.json"));
    CHECK(fs::exists(outdir / "phi.svg"));
}
