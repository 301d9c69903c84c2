#ifndef CELLSPAN_GEOMETRY_HPP
#define CELLSPAN_GEOMETRY_HPP

#include "cellspan/types.hpp"

#include <array>
#include <cstdint>

namespace cellspan {

/// Layered cell geometry: anode | separator | cathode along x, optionally
/// extruded in y to a tensor-product grid.
struct DomainLayout {
    double length_anode = 1.0;
    double length_separator = 0.1;
    double length_cathode = 1.0;
    double transverse_extent = 0.0; // > 0 selects the 2D tensor grid

    double total_length() const { return length_anode + length_separator + length_cathode; }
    std::vector<std::string> check() const;
};

/// Strictly-less separator measure test: |Omega_s| < |Omega'|.
bool check_separator_condition(const DomainLayout& layout);

struct Face {
    int left = -1;       // cell index
    int right = -1;      // cell index
    double area = 0.0;   // face area (1 in 1D, dy or dx in 2D)
    double geom = 0.0;   // area / center distance
};

/// Labels for faces that may carry an applied current in the lifting solve.
/// gamma_a / gamma_c are the external electrode boundaries; the two interface
/// labels are the electrode sides of the separator interfaces.
enum class CurrentFaceLabel { gamma_a, interface_anode, interface_cathode, gamma_c };

struct CurrentFace {
    int cell = -1;            // electrode cell adjoining the face
    double area = 0.0;
    CurrentFaceLabel label = CurrentFaceLabel::gamma_a;
};

/// Cell-centered mesh over the layered domain. Immutable after construction.
struct Mesh {
    Vector volume;                 // per cell
    Vector center_x;
    Vector center_y;               // zero in 1D
    std::vector<Region> region;    // per cell
    std::vector<Face> face;        // interior faces of Omega
    std::vector<CurrentFace> current_face;
    int cells_x = 0;
    int cells_y = 1;
    DomainLayout layout;

    int n_cells() const { return static_cast<int>(volume.size()); }
    bool is_1d() const { return cells_y == 1; }

    std::vector<int> cells_in(Region r) const;
    /// Electrode cells (anode followed by cathode).
    std::vector<int> electrode_cells() const;

    double measure() const { return volume.sum(); }
    double measure(Region r) const;
    /// |Omega'| = |Omega_a| + |Omega_c|.
    double electrode_measure() const {
        return measure(Region::anode) + measure(Region::cathode);
    }
};

/// Builds the layered mesh. cells_per_layer = {anode, separator, cathode};
/// each count must be >= 2. cells_transverse only applies when the layout has
/// a positive transverse extent.
Mesh build_layered_mesh(const DomainLayout& layout, const std::array<int, 3>& cells_per_layer,
                        int cells_transverse = 1);

/// Midpoint-rule integral of a cell field over a set of cells.
double region_integral(const Mesh& mesh, const Vector& field, const std::vector<int>& cells);
/// Same, over all cells of one region.
double region_integral(const Mesh& mesh, const Vector& field, Region region);
/// Integral over all of Omega.
double region_integral(const Mesh& mesh, const Vector& field);

} // namespace cellspan

#endif
