#include "cellspan/geometry.hpp"

#include <doctest.h>

#include <cmath>

using namespace cellspan;

TEST_CASE("uniform layered mesh reproduces layer subdivision") {
    const Mesh mesh = build_layered_mesh({1.0, 1.0, 1.0}, {2, 2, 2});
    REQUIRE(mesh.n_cells() == 6);
    const Region expected[6] = {Region::anode, Region::anode, Region::separator,
                                Region::separator, Region::cathode, Region::cathode};
    for (int i = 0; i < 6; ++i) {
        CHECK(mesh.volume[i] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(mesh.region[i] == expected[i]);
    }
    CHECK(mesh.center_x[0] == doctest::Approx(0.25));
    CHECK(mesh.center_x[5] == doctest::Approx(2.75));
}

TEST_CASE("separator cells carry the separator layer width") {
    const Mesh mesh = build_layered_mesh({1.0, 0.1, 1.0}, {10, 2, 10});
    for (int c : mesh.cells_in(Region::separator))
        CHECK(mesh.volume[c] == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("total mesh volume equals the sum of layer lengths") {
    const Mesh mesh = build_layered_mesh({0.3, 0.05, 0.35}, {4, 2, 5});
    double sum = 0.0;
    for (int i = 0; i < mesh.n_cells(); ++i) sum += mesh.volume[i];
    CHECK(sum == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(mesh.measure() == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("mesh construction rejects bad layouts and counts") {
    CHECK_THROWS_AS(build_layered_mesh({0.0, 0.1, 1.0}, {2, 2, 2}), ConfigError);
    CHECK_THROWS_AS(build_layered_mesh({1.0, -0.1, 1.0}, {2, 2, 2}), ConfigError);
    CHECK_THROWS_AS(build_layered_mesh({1.0, 0.1, 1.0}, {1, 2, 2}), ConfigError);
    CHECK_THROWS_AS(build_layered_mesh({1.0, 0.1, 1.0}, {2, 2, 0}), ConfigError);
}

TEST_CASE("separator measure condition") {
    CHECK(check_separator_condition({1.0, 0.1, 1.0}));
    CHECK_FALSE(check_separator_condition({0.1, 1.0, 0.1}));
    CHECK(check_separator_condition({1.0, 1.999, 1.0}));
}

TEST_CASE("region_integral of constants and indicators") {
    const Mesh mesh = build_layered_mesh({1.0, 0.1, 1.0}, {7, 3, 9});
    const Vector ones = Vector::Ones(mesh.n_cells());
    CHECK(region_integral(mesh, ones) == doctest::Approx(2.1).epsilon(1e-14));

    Vector indicator = Vector::Zero(mesh.n_cells());
    for (int c : mesh.cells_in(Region::separator)) indicator[c] = 1.0;
    CHECK(region_integral(mesh, indicator) == doctest::Approx(0.1).epsilon(1e-13));
    CHECK(region_integral(mesh, indicator, Region::separator)
          == doctest::Approx(0.1).epsilon(1e-13));
}

TEST_CASE("region_integral is exact for linear fields and O(h^2) for quadratics") {
    // midpoint rule: linear exact
    const Mesh mesh = build_layered_mesh({1.0, 0.5, 1.0}, {10, 5, 10});
    Vector lin(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i) lin[i] = 3.0 * mesh.center_x[i] - 1.0;
    const double L = 2.5;
    const double exact_lin = 1.5 * L * L - L;
    CHECK(region_integral(mesh, lin) == doctest::Approx(exact_lin).epsilon(1e-13));

    // quadratic: error shrinks by ~4x per refinement
    auto quad_error = [&](int scale) {
        const Mesh m = build_layered_mesh({1.0, 0.5, 1.0}, {10 * scale, 5 * scale, 10 * scale});
        Vector f(m.n_cells());
        for (int i = 0; i < m.n_cells(); ++i) f[i] = m.center_x[i] * m.center_x[i];
        return std::abs(region_integral(m, f) - L * L * L / 3.0);
    };
    const double e1 = quad_error(1), e2 = quad_error(2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("field length mismatch is rejected") {
    const Mesh mesh = build_layered_mesh({1.0, 0.1, 1.0}, {4, 2, 4});
    const Vector wrong = Vector::Ones(mesh.n_cells() + 1);
    CHECK_THROWS_AS(region_integral(mesh, wrong), ConfigError);
}

TEST_CASE("region tags partition the cells") {
    const Mesh mesh = build_layered_mesh({0.8, 0.2, 1.3}, {5, 4, 7});
    const auto a = mesh.cells_in(Region::anode);
    const auto s = mesh.cells_in(Region::separator);
    const auto c = mesh.cells_in(Region::cathode);
    CHECK(static_cast<int>(a.size() + s.size() + c.size()) == mesh.n_cells());

    Vector f(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i) f[i] = std::sin(1.0 + i);
    const double total = region_integral(mesh, f);
    const double parts = region_integral(mesh, f, Region::anode)
                         + region_integral(mesh, f, Region::separator)
                         + region_integral(mesh, f, Region::cathode);
    CHECK(total == doctest::Approx(parts).epsilon(1e-15));
}

TEST_CASE("refinement leaves region measures unchanged") {
    const DomainLayout layout{0.37, 0.081, 0.92};
    const Mesh coarse = build_layered_mesh(layout, {3, 2, 5});
    const Mesh fine = build_layered_mesh(layout, {6, 4, 10});
    for (Region r : {Region::anode, Region::separator, Region::cathode})
        CHECK(std::abs(coarse.measure(r) - fine.measure(r)) <= 1e-14);
}

TEST_CASE("2D tensor grid matches the extruded 1D measures") {
    DomainLayout layout{1.0, 0.1, 1.0};
    layout.transverse_extent = 0.4;
    const Mesh mesh = build_layered_mesh(layout, {4, 2, 4}, 3);
    CHECK_FALSE(mesh.is_1d());
    CHECK(mesh.n_cells() == 30);
    CHECK(mesh.measure() == doctest::Approx(2.1 * 0.4).epsilon(1e-14));
    CHECK(mesh.measure(Region::separator) == doctest::Approx(0.1 * 0.4).epsilon(1e-14));
    // interior faces in both directions
    size_t x_faces = 0, y_faces = 0;
    for (const auto& f : mesh.face)
        (std::abs(mesh.center_y[f.left] - mesh.center_y[f.right]) > 0 ? y_faces : x_faces)++;
    CHECK(x_faces == 9 * 3);
    CHECK(y_faces == 10 * 2);
}
