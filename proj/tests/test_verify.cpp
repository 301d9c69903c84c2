#include "cellspan/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace cellspan;

namespace {
SimulationSetup fixture_setup() {
    SimulationSetup s;
    s.mesh = build_layered_mesh({1.0, 0.1, 1.0}, {10, 4, 10});
    s.params = PhysParams{};
    s.h = HField::constant(s.mesh, 1.0, s.params.K);
    s.tau = 1e-3;
    s.dt = 1e-3;
    s.T_end = 0.05;
    s.output_stride = 1;
    return s;
}
} // namespace

TEST_CASE("manufactured forcings satisfy the continuous equations") {
    const double defect = mms_forcing_selfcheck(default_mms_spatial_case(), 300, 0xf00d);
    CHECK(defect <= 1e-10);
}

TEST_CASE("exact constant case reproduces itself to machine precision") {
    const ConvergenceTable table = run_mms(default_mms_constant_case());
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].linf_C <= 1e-13);
    CHECK(table.rows[0].linf_phie <= 1e-13);
    CHECK(table.rows[0].linf_phis <= 1e-13);
}

TEST_CASE("a failing level leaves a partial table instead of throwing") {
    MMSCase mms = default_mms_constant_case();
    mms.settings.outer_tolerance = 0.0; // strict inequality: never satisfied
    mms.settings.max_outer = 3;
    const ConvergenceTable table = run_mms(mms);
    CHECK_FALSE(table.completed);
    CHECK(table.error.find("level 0") != std::string::npos);
    CHECK(table.rows.empty());
}

TEST_CASE("coarse temporal study shows first order") {
    MMSCase mms = default_mms_temporal_case();
    mms.dt_levels = {0.08, 0.04};
    const ConvergenceTable table = run_mms(mms);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[1].order_C >= 0.8);
    CHECK(table.rows[1].order_C <= 1.2);
}

TEST_CASE("equilibrium preservation over 100 steps") {
    SimulationSetup setup = fixture_setup();
    setup.dt = 1e-3;
    setup.T_end = 0.1;
    setup.verification_mode = true;
    CHECK(equilibrium_preservation(setup) <= 1e-12);
}

TEST_CASE("equilibrium drift in regularized mode is reported, small") {
    SimulationSetup setup = fixture_setup();
    setup.tau = 1e-3;
    const double drift = equilibrium_preservation(setup);
    CHECK(drift > 0.0);
    CHECK(drift <= 10.0 * setup.tau * setup.T_end);
}

TEST_CASE("uniqueness sweep over random guesses") {
    SimulationSetup setup = fixture_setup();
    CHECK(uniqueness_sweep(setup, 6) <= 1e-8);

    // identical guesses give bitwise identical solutions
    const Vector C = setup.params.expand_C0(setup.mesh);
    PotentialPair guess = PotentialPair::zero(setup.mesh);
    const PotentialPair a = solve_potential_pair(setup.mesh, setup.params, C, setup.h, setup.tau,
                                                 guess, setup.settings.elliptic);
    const PotentialPair b = solve_potential_pair(setup.mesh, setup.params, C, setup.h, setup.tau,
                                                 guess, setup.settings.elliptic);
    CHECK((a.phi_e - b.phi_e).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.phi_s - b.phi_s).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alpha4 = 0 uniqueness is exact") {
    SimulationSetup setup = fixture_setup();
    setup.params.alpha4 = 0.0;
    CHECK(uniqueness_sweep(setup, 4) <= setup.settings.elliptic.tolerance * 10);
}

TEST_CASE("invariant sweep passes on a healthy run and fails on a corrupted one") {
    SimulationSetup setup = fixture_setup();
    const SimulationResult result = simulate(setup);
    REQUIRE(result.completed);
    const auto report = invariant_sweep(setup.mesh, result.trajectory, setup.params, setup.h,
                                        setup.tau);
    CHECK(report.all_pass);
    // two sweeps over the same trajectory agree entry for entry
    const auto again = invariant_sweep(setup.mesh, result.trajectory, setup.params, setup.h,
                                       setup.tau);
    REQUIRE(report.entries.size() == again.entries.size());
    for (size_t k = 0; k < report.entries.size(); ++k) {
        CHECK(report.entries[k].worst_margin == again.entries[k].worst_margin);
        CHECK(report.entries[k].worst_time == again.entries[k].worst_time);
    }

    Trajectory corrupted = result.trajectory;
    for (auto& s : corrupted.states) s.C = -s.C;
    const auto bad = invariant_sweep(setup.mesh, corrupted, setup.params, setup.h, setup.tau);
    CHECK_FALSE(bad.all_pass);
    bool nonneg_failed_at_zero = false;
    for (const auto& e : bad.entries)
        if (e.name == "nonnegativity" && !e.pass && e.worst_time == 0.0)
            nonneg_failed_at_zero = true;
    CHECK(nonneg_failed_at_zero);
}
