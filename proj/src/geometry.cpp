#include "cellspan/geometry.hpp"

#include <cmath>

namespace cellspan {

std::vector<std::string> DomainLayout::check() const {
    std::vector<std::string> errors;
    if (!(length_anode > 0.0)) errors.push_back("layer length: anode length must be > 0");
    if (!(length_separator > 0.0)) errors.push_back("layer length: separator length must be > 0");
    if (!(length_cathode > 0.0)) errors.push_back("layer length: cathode length must be > 0");
    if (transverse_extent < 0.0) errors.push_back("layer length: transverse extent must be >= 0");
    if (errors.empty() && !check_separator_condition(*this))
        errors.push_back("(H9) |Omega_s| < |Omega'| violated");
    return errors;
}

bool check_separator_condition(const DomainLayout& layout) {
    return layout.length_separator < layout.length_anode + layout.length_cathode;
}

std::vector<int> Mesh::cells_in(Region r) const {
    std::vector<int> out;
    for (int i = 0; i < n_cells(); ++i)
        if (region[i] == r) out.push_back(i);
    return out;
}

std::vector<int> Mesh::electrode_cells() const {
    std::vector<int> out;
    for (int i = 0; i < n_cells(); ++i)
        if (is_electrode(region[i])) out.push_back(i);
    return out;
}

double Mesh::measure(Region r) const {
    double m = 0.0;
    for (int i = 0; i < n_cells(); ++i)
        if (region[i] == r) m += volume[i];
    return m;
}

Mesh build_layered_mesh(const DomainLayout& layout, const std::array<int, 3>& cells_per_layer,
                        int cells_transverse) {
    auto layout_errors = layout.check();
    if (!layout_errors.empty()) throw ConfigError(layout_errors);
    for (int c : cells_per_layer)
        if (c < 2) throw ConfigError("cells_per_layer: every layer needs at least 2 cells");

    const bool two_d = layout.transverse_extent > 0.0;
    if (two_d && cells_transverse < 2)
        throw ConfigError("cells_transverse: 2D grid needs at least 2 cells in y");
    const int ny = two_d ? cells_transverse : 1;
    const double dy = two_d ? layout.transverse_extent / ny : 1.0;

    // x-columns: widths, centers and region per column
    const double lengths[3] = {layout.length_anode, layout.length_separator, layout.length_cathode};
    const Region regions[3] = {Region::anode, Region::separator, Region::cathode};
    std::vector<double> width, cx;
    std::vector<Region> col_region;
    double x0 = 0.0;
    for (int layer = 0; layer < 3; ++layer) {
        const int n = cells_per_layer[static_cast<size_t>(layer)];
        const double w = lengths[layer] / n;
        for (int i = 0; i < n; ++i) {
            width.push_back(w);
            cx.push_back(x0 + (i + 0.5) * w);
            col_region.push_back(regions[layer]);
        }
        x0 += lengths[layer];
    }
    const int nx = static_cast<int>(width.size());

    Mesh mesh;
    mesh.layout = layout;
    mesh.cells_x = nx;
    mesh.cells_y = ny;
    const int n_cells = nx * ny;
    mesh.volume.resize(n_cells);
    mesh.center_x.resize(n_cells);
    mesh.center_y.resize(n_cells);
    mesh.region.resize(n_cells);

    auto id = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int c = id(i, j);
            mesh.volume[c] = width[i] * dy;
            mesh.center_x[c] = cx[i];
            mesh.center_y[c] = two_d ? (j + 0.5) * dy : 0.0;
            mesh.region[c] = col_region[i];
        }
    }

    // interior faces in x
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            Face f;
            f.left = id(i, j);
            f.right = id(i + 1, j);
            f.area = dy;
            f.geom = f.area / (cx[i + 1] - cx[i]);
            mesh.face.push_back(f);
        }
    }
    // interior faces in y
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Face f;
            f.left = id(i, j);
            f.right = id(i, j + 1);
            f.area = width[i];
            f.geom = f.area / dy;
            mesh.face.push_back(f);
        }
    }

    // faces that may carry applied current: external electrode boundaries and
    // the electrode sides of the two separator interfaces
    const int na = cells_per_layer[0];
    const int ns = cells_per_layer[1];
    for (int j = 0; j < ny; ++j) {
        mesh.current_face.push_back({id(0, j), dy, CurrentFaceLabel::gamma_a});
        mesh.current_face.push_back({id(na - 1, j), dy, CurrentFaceLabel::interface_anode});
        mesh.current_face.push_back({id(na + ns, j), dy, CurrentFaceLabel::interface_cathode});
        mesh.current_face.push_back({id(nx - 1, j), dy, CurrentFaceLabel::gamma_c});
    }
    return mesh;
}

double region_integral(const Mesh& mesh, const Vector& field, const std::vector<int>& cells) {
    if (field.size() != mesh.volume.size())
        throw ConfigError("region_integral: field length does not match cell count");
    double sum = 0.0;
    for (int c : cells) sum += mesh.volume[c] * field[c];
    return sum;
}

double region_integral(const Mesh& mesh, const Vector& field, Region region) {
    return region_integral(mesh, field, mesh.cells_in(region));
}

double region_integral(const Mesh& mesh, const Vector& field) {
    if (field.size() != mesh.volume.size())
        throw ConfigError("region_integral: field length does not match cell count");
    return mesh.volume.dot(field);
}

} // namespace cellspan
