#include "cellspan/elliptic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cellspan;

namespace {

Mesh two_cell_mesh() {
    Mesh m;
    m.volume = Vector::Constant(2, 0.5);
    m.center_x = Vector(2);
    m.center_x << 0.25, 0.75;
    m.center_y = Vector::Zero(2);
    m.region = {Region::anode, Region::anode};
    m.face.push_back({0, 1, 1.0, 1.0 / 0.5});
    m.cells_x = 2;
    m.cells_y = 1;
    return m;
}

struct Fixture {
    Mesh mesh = build_layered_mesh({1.0, 0.1, 1.0}, {8, 4, 8});
    PhysParams params;
    HField h;
    Vector C;
    double tau = 1e-3;
    EllipticSolveSettings settings;

    Fixture() {
        h = HField::constant(mesh, 1.0, params.K);
        C = Vector::Constant(mesh.n_cells(), 1.0);
    }
};

} // namespace

TEST_CASE("two-cell operator has the textbook stencil") {
    const Mesh mesh = two_cell_mesh();
    const Vector coeff = Vector::Ones(1);
    const double tau = 0.3;
    const SparseMatrix A = assemble_diffusion_operator(mesh, coeff, tau);
    const double a = 2.0;            // coeff * area / distance
    const double t = tau * 0.5;      // tau * volume
    CHECK(A.coeff(0, 0) == doctest::Approx(t + a).epsilon(1e-15));
    CHECK(A.coeff(1, 1) == doctest::Approx(t + a).epsilon(1e-15));
    CHECK(A.coeff(0, 1) == doctest::Approx(-a).epsilon(1e-15));
    CHECK(A.coeff(1, 0) == doctest::Approx(-a).epsilon(1e-15));
}

TEST_CASE("operator applied to constants returns tau * volume * constant") {
    const Mesh mesh = build_layered_mesh({1.0, 0.1, 1.0}, {5, 3, 6});
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> pick(0.2, 3.0);
    Vector cellc(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i) cellc[i] = pick(rng);
    const Vector face = harmonic_face_coefficients(mesh, cellc);
    const double tau = 0.7;
    const SparseMatrix A = assemble_diffusion_operator(mesh, face, tau);
    const Vector out = A * Vector::Constant(mesh.n_cells(), 2.5);
    for (int i = 0; i < mesh.n_cells(); ++i)
        CHECK(out[i] == doctest::Approx(tau * mesh.volume[i] * 2.5).epsilon(1e-12));
}

TEST_CASE("assembled operator is symmetric positive definite") {
    const Mesh mesh = build_layered_mesh({1.0, 0.1, 1.0}, {6, 2, 6});
    const Vector face = Vector::Ones(static_cast<Eigen::Index>(mesh.face.size()));
    const SparseMatrix A = assemble_diffusion_operator(mesh, face, 0.2);
    CHECK((Eigen::MatrixXd(A) - Eigen::MatrixXd(A).transpose()).cwiseAbs().maxCoeff() == 0.0);
    std::mt19937 rng(11);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 100; ++trial) {
        Vector x(mesh.n_cells());
        for (int i = 0; i < mesh.n_cells(); ++i) x[i] = gauss(rng);
        if (x.cwiseAbs().maxCoeff() == 0.0) continue;
        CHECK(x.dot(A * x) > 0.0);
    }
    Vector bad = face;
    bad[0] = 0.0;
    CHECK_THROWS_AS(assemble_diffusion_operator(mesh, bad, 0.2), SolverError);
}

TEST_CASE("alpha4 = 0 decouples and zeros the pair") {
    Fixture f;
    f.params.alpha4 = 0.0;
    const PotentialPair pair = solve_potential_pair(f.mesh, f.params, f.C, f.h, f.tau,
                                                    PotentialPair::zero(f.mesh), f.settings);
    CHECK(pair.phi_e.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(pair.phi_s.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("regularization bias makes the pair nonzero at C = h = 1") {
    Fixture f;
    EllipticReport report;
    const PotentialPair pair = solve_potential_pair(f.mesh, f.params, f.C, f.h, f.tau,
                                                    PotentialPair::zero(f.mesh), f.settings,
                                                    &report);
    CHECK(report.converged);
    CHECK(report.residual <= f.settings.tolerance);
    CHECK(pair.phi_e.cwiseAbs().maxCoeff() > 0.0);
    // residual history never increases once a step is accepted
    for (size_t k = 1; k < report.residual_history.size(); ++k)
        CHECK(report.residual_history[k] <= report.residual_history[k - 1] * (1.0 + 1e-12));
}

TEST_CASE("solution is independent of the initial guess") {
    Fixture f;
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> pick(-5.0, 5.0);
    PotentialPair g1 = PotentialPair::zero(f.mesh), g2 = PotentialPair::zero(f.mesh);
    for (int i = 0; i < f.mesh.n_cells(); ++i) {
        g1.phi_e[i] = pick(rng);
        g2.phi_e[i] = pick(rng);
        if (is_electrode(f.mesh.region[i])) {
            g1.phi_s[i] = pick(rng);
            g2.phi_s[i] = pick(rng);
        }
    }
    const PotentialPair p1 = solve_potential_pair(f.mesh, f.params, f.C, f.h, f.tau, g1, f.settings);
    const PotentialPair p2 = solve_potential_pair(f.mesh, f.params, f.C, f.h, f.tau, g2, f.settings);
    CHECK((p1.phi_e - p2.phi_e).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((p1.phi_s - p2.phi_s).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("nonconvergence carries the last residual") {
    Fixture f;
    f.settings.max_iterations = 1;
    f.settings.tolerance = 1e-300;
    try {
        (void)solve_potential_pair(f.mesh, f.params, f.C, f.h, f.tau,
                                   PotentialPair::zero(f.mesh), f.settings);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.last_residual() > 0.0);
    }
}

TEST_CASE("potential identity at the discrete level") {
    Fixture f;
    CHECK(potential_identity_residual(f.mesh, PotentialPair::zero(f.mesh)) == 0.0);

    // constructed cancellation
    PotentialPair constructed = PotentialPair::zero(f.mesh);
    constructed.phi_e = Vector::Constant(f.mesh.n_cells(), 1.0);
    const double ratio = f.mesh.measure() / f.mesh.electrode_measure();
    for (int c : f.mesh.electrode_cells()) constructed.phi_s[c] = -ratio;
    CHECK(std::abs(potential_identity_residual(f.mesh, constructed)) <= 1e-14);

    // converged generic solve
    Vector C(f.mesh.n_cells());
    for (int i = 0; i < f.mesh.n_cells(); ++i)
        C[i] = 1.0 + 0.4 * std::sin(2.0 + 3.0 * f.mesh.center_x[i]);
    const PotentialPair pair = solve_potential_pair(f.mesh, f.params, C, f.h, f.tau,
                                                    PotentialPair::zero(f.mesh), f.settings);
    const double phi_max = std::max(pair.phi_e.cwiseAbs().maxCoeff(),
                                    pair.phi_s.cwiseAbs().maxCoeff());
    CHECK(std::abs(potential_identity_residual(f.mesh, pair))
          <= 1e-10 * f.mesh.measure() * phi_max);
}

TEST_CASE("sup-norm bound check") {
    Fixture f;
    SUBCASE("alpha4 = 0 gives bound 0 with zero fields") {
        f.params.alpha4 = 0.0;
        const PotentialPair pair = solve_potential_pair(f.mesh, f.params, f.C, f.h, f.tau,
                                                        PotentialPair::zero(f.mesh), f.settings);
        const auto chk = linf_bound_check(f.mesh, pair, f.C, f.h, f.tau, 0.0, f.params.d,
                                          f.params.alpha2, 0.0);
        CHECK(chk.ok);
        CHECK(chk.bound == 0.0);
        CHECK(chk.margin == 0.0);
    }
    SUBCASE("generic converged solve satisfies the bound; a scaled pair does not") {
        const PotentialPair pair = solve_potential_pair(f.mesh, f.params, f.C, f.h, f.tau,
                                                        PotentialPair::zero(f.mesh), f.settings);
        const auto chk = linf_bound_check(f.mesh, pair, f.C, f.h, f.tau, f.params.alpha4,
                                          f.params.d, f.params.alpha2);
        CHECK(chk.ok);
        CHECK(chk.bound > 0.0);

        PotentialPair scaled = pair;
        const double blow = 20.0 * chk.bound / std::max(chk.actual, 1e-30);
        scaled.phi_e *= blow;
        scaled.phi_s *= blow;
        const auto bad = linf_bound_check(f.mesh, scaled, f.C, f.h, f.tau, f.params.alpha4,
                                          f.params.d, f.params.alpha2);
        CHECK_FALSE(bad.ok);
    }
}

TEST_CASE("current lifting: zero data, analytic profile, incompatible data") {
    const Mesh mesh = build_layered_mesh({1.0, 0.1, 1.0}, {10, 2, 10});
    PhysParams params;

    const Vector none = solve_current_lifting(mesh, params, BoundaryCurrent::zero(mesh));
    CHECK(none.cwiseAbs().maxCoeff() == 0.0);

    // unit influx through gamma_a, outflux through the anode interface:
    // phi = 0.5 - x on the anode; cathode likewise with its own mean
    const BoundaryCurrent I = BoundaryCurrent::per_label(mesh, 1.0, -1.0, 1.0, -1.0);
    const Vector phi = solve_current_lifting(mesh, params, I);
    for (int c : mesh.cells_in(Region::anode))
        CHECK(phi[c] == doctest::Approx(0.5 - mesh.center_x[c]).epsilon(1e-12));
    for (int c : mesh.cells_in(Region::cathode))
        CHECK(phi[c] == doctest::Approx(1.6 - mesh.center_x[c]).epsilon(1e-12));
    // per-component zero mean
    Vector anode_part = Vector::Zero(mesh.n_cells());
    for (int c : mesh.cells_in(Region::anode)) anode_part[c] = phi[c];
    CHECK(std::abs(region_integral(mesh, anode_part, Region::anode)) <= 1e-13);

    const BoundaryCurrent bad = BoundaryCurrent::per_label(mesh, 1.0, -1.0, 1.0, -0.5);
    CHECK_THROWS_AS(solve_current_lifting(mesh, params, bad), ConfigError);
}

TEST_CASE("pair solve works on the 2D tensor grid") {
    DomainLayout layout{1.0, 0.1, 1.0};
    layout.transverse_extent = 0.5;
    const Mesh mesh = build_layered_mesh(layout, {6, 2, 6}, 4);
    PhysParams params;
    const HField h = HField::constant(mesh, 1.0, params.K);
    Vector C(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i)
        C[i] = 1.0 + 0.3 * std::cos(mesh.center_x[i]) * std::cos(mesh.center_y[i]);
    EllipticSolveSettings settings;
    EllipticReport report;
    const PotentialPair pair = solve_potential_pair(mesh, params, C, h, 1e-2,
                                                    PotentialPair::zero(mesh), settings, &report);
    CHECK(report.converged);
    const auto chk = linf_bound_check(mesh, pair, C, h, 1e-2, params.alpha4, params.d,
                                      params.alpha2);
    CHECK(chk.ok);
}
