#include "cellspan/cli.hpp"
#include "cellspan/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cellspan;
namespace fs = std::filesystem;

namespace {

const char* demo_path = CELLSPAN_SOURCE_DIR "/configs/demo.cfg";

std::string small_run_config(const std::string& out_dir) {
    std::ostringstream os;
    os << "[domain]\n"
          "L_a = 1.0\nL_s = 0.1\nL_c = 1.0\n"
          "cells_a = 10\ncells_s = 4\ncells_c = 10\n"
          "[time]\ndt = 1e-3\nT_end = 1e-2\noutput_stride = 1\n"
          "[regularization]\ntau = 1e-3\n"
          "[output]\ndir = "
       << out_dir << "\n";
    return os.str();
}

fs::path write_temp(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "cellspan_tests";
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path);
    out << text;
    return path;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("bundled demo config parses and validates") {
    const RunConfig cfg = parse_config(demo_path);
    CHECK(cfg.cells[0] + cfg.cells[1] + cfg.cells[2] == 300);
    CHECK(cfg.tau == doctest::Approx(1e-3));
    CHECK(cfg.params.d == doctest::Approx(1.0));
    CHECK(cfg.apriori.q == doctest::Approx(4.0));
    CHECK(cfg.tau_schedule.size() == 3);

    const SimulationSetup setup = make_setup(cfg);
    CHECK(setup.mesh.n_cells() == 300);
    // asymmetric electrode pre-factors, within the two-sided bound
    CHECK(setup.h.value.minCoeff() == doctest::Approx(0.5));
    CHECK(setup.h.value.maxCoeff() == doctest::Approx(2.0));

    const AprioriParams apriori = make_apriori(cfg);
    CHECK(apriori.d == doctest::Approx(1.0));
    CHECK(apriori.alpha0 == doctest::Approx(1.0));
}

TEST_CASE("explicit d below one half trips the positivity hypothesis") {
    try {
        (void)parse_config_text("[params]\nd = 0.4\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        bool found = false;
        for (const auto& msg : e.errors())
            if (msg.find("(H8)") != std::string::npos) found = true;
        CHECK(found);
    }
}

TEST_CASE("unknown keys are named with their line") {
    try {
        (void)parse_config_text("[params]\nalpha1 = 1.0\nalpha9 = 2.0\n", "cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.errors().size() == 1);
        CHECK(e.errors()[0].find("alpha9") != std::string::npos);
        CHECK(e.errors()[0].find("cfg:3") != std::string::npos);
    }
}

TEST_CASE("malformed values and duplicates are reported") {
    CHECK_THROWS_AS((void)parse_config_text("[time]\ndt = fast\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[time]\ndt = 1e-3\ndt = 2e-3\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[domain]\nL_a = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("/nonexistent/cellspan.cfg"), ConfigError);
}

TEST_CASE("apriori section may override d and alpha0") {
    const RunConfig cfg = parse_config_text(
        "[params]\nalpha1 = 2.0\nkappa.alpha0 = 0.7\n[apriori]\nd = 1.5\nalpha0 = 0.9\n");
    const AprioriParams a = make_apriori(cfg);
    CHECK(a.d == doctest::Approx(1.5));
    CHECK(a.alpha0 == doctest::Approx(0.9));

    const RunConfig cfg2 = parse_config_text("[params]\nalpha1 = 2.0\nkappa.alpha0 = 0.7\n");
    const AprioriParams a2 = make_apriori(cfg2);
    CHECK(a2.d == doctest::Approx(2.0));
    CHECK(a2.alpha0 == doctest::Approx(0.7));
}

TEST_CASE("a lifted h field can be configured") {
    const RunConfig cfg = parse_config_text(
        "[params]\nh.mode = lifting\nK = 5\n"
        "I.gamma_a = 0.1\nI.interface_a = -0.1\nI.interface_c = 0.1\nI.gamma_c = -0.1\n");
    const SimulationSetup setup = make_setup(cfg);
    // phi is linear per component, so h varies but respects the bound
    CHECK(setup.h.value.minCoeff() >= 1.0 / 5.0);
    CHECK(setup.h.value.maxCoeff() <= 5.0);
    bool varies = false;
    for (int c : setup.mesh.cells_in(Region::anode))
        if (std::abs(setup.h.value[c] - setup.h.value[setup.mesh.cells_in(Region::anode)[0]])
            > 1e-12)
            varies = true;
    CHECK(varies);
}

TEST_CASE("identical configs produce byte-identical outputs") {
    const fs::path out_a = fs::temp_directory_path() / "cellspan_tests" / "run_a";
    const fs::path out_b = fs::temp_directory_path() / "cellspan_tests" / "run_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    const fs::path cfg_a = write_temp("det_a.cfg", small_run_config(out_a.string()));
    const fs::path cfg_b = write_temp("det_b.cfg", small_run_config(out_b.string()));

    RunOptions opt_a{cfg_a.string(), "", false, false};
    RunOptions opt_b{cfg_b.string(), "", false, false};
    CHECK(cmd_run(opt_a) == exit_ok);
    CHECK(cmd_run(opt_b) == exit_ok);

    CHECK(slurp(out_a / "fields.csv") == slurp(out_b / "fields.csv"));
    CHECK(slurp(out_a / "diagnostics.csv") == slurp(out_b / "diagnostics.csv"));

    const std::string fields = slurp(out_a / "fields.csv");
    CHECK(fields.rfind("t,x,region,C,phi_e,phi_s,S_e\n", 0) == 0);
}

TEST_CASE("run exits with code 2 on config problems") {
    RunOptions opt{"/nonexistent/cellspan.cfg", "", false, false};
    CHECK(cmd_run(opt) == exit_solver_failure);
}

TEST_CASE("lifespan command writes the report") {
    const fs::path out = fs::temp_directory_path() / "cellspan_tests" / "lifespan_out";
    fs::remove_all(out);
    CHECK(cmd_lifespan(demo_path, out.string()) == exit_ok);
    const std::string report = slurp(out / "lifespan.txt");
    for (const char* key : {"gamma = ", "delta = ", "s0 = ", "eps0 = ", "Tmax = ",
                            "s0_residual = ", "stationarity_f"})
        CHECK(report.find(key) != std::string::npos);
}

TEST_CASE("calibration sweep is monotone in the written csv") {
    const fs::path out = fs::temp_directory_path() / "cellspan_tests" / "sweep_out";
    fs::remove_all(out);
    SweepOptions opt;
    opt.config_path = demo_path;
    opt.out_dir = out.string();
    opt.axis = "c";
    opt.values = {0.5, 1.0, 2.0};
    opt.jobs = 2;
    CHECK(cmd_sweep(opt) == exit_ok);

    std::ifstream in(out / "sweep.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "axis,value,gamma,delta,s0,eps0,Tmax");
    std::vector<double> tmax;
    std::string line;
    while (std::getline(in, line)) {
        const auto last = line.rfind(',');
        tmax.push_back(std::stod(line.substr(last + 1)));
    }
    REQUIRE(tmax.size() == 3);
    CHECK(tmax[0] > tmax[1]);
    CHECK(tmax[1] > tmax[2]);
}
