#include "cellspan/parabolic.hpp"

#include "cellspan/reaction.hpp"

#include <doctest.h>

#include <cmath>

using namespace cellspan;

namespace {

struct Fixture {
    Mesh mesh = build_layered_mesh({1.0, 0.1, 1.0}, {10, 4, 10});
    PhysParams params;
    HField h;
    double tau = 1e-3;
    SolverSettings settings;

    Fixture() { h = HField::constant(mesh, 1.0, params.K); }

    SimulationSetup setup(double dt, double T_end) const {
        SimulationSetup s;
        s.mesh = mesh;
        s.params = params;
        s.h = h;
        s.tau = tau;
        s.dt = dt;
        s.T_end = T_end;
        s.output_stride = 1;
        s.settings = settings;
        return s;
    }
};

} // namespace

TEST_CASE("no source and constant data: the step is the identity") {
    Fixture f;
    f.params.alpha4 = 0.0;
    const Vector C_old = Vector::Constant(f.mesh.n_cells(), 1.7);
    const Vector C_new = step_concentration(f.mesh, f.params, C_old, PotentialPair::zero(f.mesh),
                                            f.h, f.tau, 1e-2, f.settings);
    CHECK((C_new - C_old).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("equilibrium data: exact in verification mode, tau-biased otherwise") {
    Fixture f;
    const Vector C_old = Vector::Constant(f.mesh.n_cells(), 1.0);
    const PotentialPair zero = PotentialPair::zero(f.mesh);
    const double dt = 1e-2;

    const Vector exact = step_concentration(f.mesh, f.params, C_old, zero, f.h, f.tau, dt,
                                            f.settings, nullptr, nullptr, true);
    CHECK((exact - C_old).cwiseAbs().maxCoeff() == 0.0);

    const Vector biased = step_concentration(f.mesh, f.params, C_old, zero, f.h, f.tau, dt,
                                             f.settings);
    const double drift = (biased - C_old).cwiseAbs().maxCoeff();
    CHECK(drift > 0.0);
    CHECK(drift <= dt * f.tau); // source magnitude ~ tau/2
}

TEST_CASE("step rejects nonpositive dt and mismatched fields") {
    Fixture f;
    const Vector C_old = Vector::Constant(f.mesh.n_cells(), 1.0);
    CHECK_THROWS_AS(step_concentration(f.mesh, f.params, C_old, PotentialPair::zero(f.mesh), f.h,
                                       f.tau, 0.0, f.settings),
                    ConfigError);
    const Vector wrong = Vector::Ones(3);
    CHECK_THROWS_AS(step_concentration(f.mesh, f.params, wrong, PotentialPair::zero(f.mesh), f.h,
                                       f.tau, 1e-2, f.settings),
                    ConfigError);
}

TEST_CASE("discrete mass balance holds to solver accuracy") {
    Fixture f;
    Vector C_old(f.mesh.n_cells());
    for (int i = 0; i < f.mesh.n_cells(); ++i)
        C_old[i] = 1.0 + 0.5 * std::sin(3.0 * f.mesh.center_x[i]);
    const PotentialPair pair = solve_potential_pair(f.mesh, f.params, C_old, f.h, f.tau,
                                                    PotentialPair::zero(f.mesh),
                                                    f.settings.elliptic);
    const double dt = 5e-3;
    const Vector C_new = step_concentration(f.mesh, f.params, C_old, pair, f.h, f.tau, dt,
                                            f.settings);

    const Vector mass = f.params.expand_eps_e(f.mesh).cwiseProduct(f.mesh.volume);
    double source = 0.0;
    for (int i = 0; i < f.mesh.n_cells(); ++i) {
        if (!is_electrode(f.mesh.region[i])) continue;
        const double u = pair.phi_s[i] - pair.phi_e[i];
        source += f.mesh.volume[i] * 0.5 * f.params.alpha3 * f.params.alpha4
                  * H_tau(f.h.value[i], C_new[i], u, f.params.d, f.params.alpha2, f.tau);
    }
    const double defect = std::abs(mass.dot(C_new - C_old) - dt * source);
    CHECK(defect <= 1e-10 * mass.dot(C_new.cwiseAbs()));
}

TEST_CASE("coupled step with alpha4 = 0 finishes in one outer pass") {
    Fixture f;
    f.params.alpha4 = 0.0;
    FieldState state;
    state.t = 0.0;
    state.C = Vector::Zero(f.mesh.n_cells());
    for (int i = 0; i < f.mesh.n_cells(); ++i)
        state.C[i] = 1.0 + 0.3 * std::cos(2.0 * f.mesh.center_x[i]);
    state.pair = PotentialPair::zero(f.mesh);

    CoupledReport report;
    const FieldState next = coupled_step(f.mesh, f.params, state, f.h, f.tau, 1e-2, f.settings,
                                         &report);
    CHECK(report.outer_iterations == 1);
    CHECK(next.pair.phi_e.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((next.C - state.C).cwiseAbs().maxCoeff() > 0.0); // diffusion acted
    CHECK(next.t == doctest::Approx(1e-2));
}

TEST_CASE("unreachable outer tolerance raises with the iterate history") {
    Fixture f;
    f.settings.outer_tolerance = 0.0;
    f.settings.max_outer = 5;
    FieldState state;
    state.t = 0.0;
    state.C = Vector::Constant(f.mesh.n_cells(), 1.0);
    state.pair = PotentialPair::zero(f.mesh);
    try {
        (void)coupled_step(f.mesh, f.params, state, f.h, f.tau, 1e-2, f.settings);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(std::string(e.what()).find("history") != std::string::npos);
    }
}

TEST_CASE("coupled step on the default fixture settles quickly") {
    Fixture f;
    FieldState state;
    state.t = 0.0;
    state.C = Vector::Constant(f.mesh.n_cells(), 1.0);
    state.pair = PotentialPair::zero(f.mesh);
    CoupledReport report;
    const FieldState next = coupled_step(f.mesh, f.params, state, f.h, f.tau, 1e-2, f.settings,
                                         &report);
    CHECK(report.outer_iterations <= 8);
    CHECK(next.C.minCoeff() > 0.0);
}

TEST_CASE("equilibrium simulation is preserved to machine precision") {
    Fixture f;
    SimulationSetup setup = f.setup(1e-3, 0.1);
    setup.verification_mode = true;
    const SimulationResult result = simulate(setup);
    REQUIRE(result.completed);
    CHECK(result.invariant_failures.empty());
    const Vector& C0 = result.trajectory.states.front().C;
    for (const auto& s : result.trajectory.states)
        CHECK((s.C - C0).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("trajectory times follow the fixed step") {
    Fixture f;
    SimulationSetup setup = f.setup(2e-3, 0.01);
    const SimulationResult result = simulate(setup);
    REQUIRE(result.completed);
    const auto times = trajectory_times(result.trajectory);
    REQUIRE(times.size() == 6);
    for (size_t k = 0; k < times.size(); ++k)
        CHECK(times[k] == doctest::Approx(2e-3 * static_cast<double>(k)).epsilon(1e-12));
}

TEST_CASE("tau continuation differences shrink monotonically") {
    Fixture f;
    SimulationSetup setup = f.setup(1e-3, 0.02);
    const ContinuationResult cont = simulate_continuation(setup, {1e-2, 1e-3, 1e-4});
    REQUIRE(cont.runs.size() == 3);
    for (const auto& run : cont.runs) REQUIRE(run.completed);
    REQUIRE(cont.final_state_diffs.size() == 2);
    CHECK(cont.final_state_diffs[0] > cont.final_state_diffs[1]);
}

TEST_CASE("amplitude of recorded trajectories") {
    Fixture f;
    Trajectory traj;
    FieldState s;
    s.t = 0.0;
    s.C = Vector::Constant(f.mesh.n_cells(), 1.0);
    s.pair = PotentialPair::zero(f.mesh);
    traj.states.push_back(s);
    s.t = 0.1;
    traj.states.push_back(s);
    auto amp = trajectory_amplitude(f.mesh, traj);
    CHECK(amp[0] == doctest::Approx(1.0));
    CHECK(amp[1] == doctest::Approx(1.0));

    // spread field covering [0.5, 2]
    for (int i = 0; i < f.mesh.n_cells(); ++i)
        s.C[i] = i % 2 == 0 ? 0.5 : 2.0;
    s.t = 0.2;
    traj.states.push_back(s);
    amp = trajectory_amplitude(f.mesh, traj);
    CHECK(amp[2] == doctest::Approx(4.0));
    // nondecreasing
    for (size_t k = 1; k < amp.size(); ++k) CHECK(amp[k] >= amp[k - 1]);

    s.C[3] = -1e-3;
    s.t = 0.3;
    traj.states.push_back(s);
    try {
        (void)trajectory_amplitude(f.mesh, traj);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("cell 3") != std::string::npos);
        CHECK(msg.find("0.3") != std::string::npos);
    }
}

TEST_CASE("halving dt changes the final state at first order") {
    Fixture f;
    f.params.C0_anode = 1.2;
    f.params.C0_separator = 1.0;
    f.params.C0_cathode = 0.8;
    const double T = 0.02;
    auto final_C = [&](double dt) {
        SimulationSetup setup = f.setup(dt, T);
        setup.output_stride = 1 << 30;
        const SimulationResult r = simulate(setup);
        REQUIRE(r.completed);
        return r.trajectory.states.back().C;
    };
    const Vector c1 = final_C(T / 8);
    const Vector c2 = final_C(T / 16);
    const Vector c3 = final_C(T / 32);
    const double d12 = (c1 - c2).cwiseAbs().maxCoeff();
    const double d23 = (c2 - c3).cwiseAbs().maxCoeff();
    CHECK(d12 / d23 == doctest::Approx(2.0).epsilon(0.35));
}
