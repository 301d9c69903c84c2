#ifndef CELLSPAN_ELLIPTIC_HPP
#define CELLSPAN_ELLIPTIC_HPP

#include "cellspan/geometry.hpp"
#include "cellspan/params.hpp"
#include "cellspan/types.hpp"

#include <functional>
#include <optional>

namespace cellspan {

/// Electrolyte and solid potentials at one time level. phi_s is stored over
/// all cells; separator entries are kept at zero and never enter any
/// equation or norm over Omega'.
struct PotentialPair {
    Vector phi_e;
    Vector phi_s;

    static PotentialPair zero(const Mesh& mesh) {
        return {Vector::Zero(mesh.n_cells()), Vector::Zero(mesh.n_cells())};
    }
};

struct EllipticSolveSettings {
    double tolerance = 1e-12;     // volume-scaled residual, inf-norm
    int max_iterations = 60;
    double damping = 1.0;         // initial Newton step fraction, in (0,1]
    double linear_tolerance = 1e-12;
    bool polish = true;           // extra Newton steps toward the rounding floor
};

struct EllipticReport {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    int rejected_steps = 0;
    int picard_steps = 0;
    std::vector<double> residual_history; // accepted-state residuals, nonincreasing
};

/// Optional manufactured-solution forcing, added cellwise to the right-hand
/// sides. Arguments are (x, y, t).
struct Forcing {
    std::function<double(double, double, double)> f_e;
    std::function<double(double, double, double)> f_s;
    std::function<double(double, double, double)> f_c;
    double time = 0.0;
};

/// Finite-volume operator for -div(coef grad .) + tau_coeff * ., assembled
/// over a cell subset with two-point fluxes. face_coeff is indexed like
/// mesh.face; faces leaving the subset are dropped (homogeneous Neumann).
/// Row i sums to tau_coeff * volume_i.
SparseMatrix assemble_diffusion_operator(const Mesh& mesh, const Vector& face_coeff,
                                         double tau_coeff, const std::vector<int>& cells);
SparseMatrix assemble_diffusion_operator(const Mesh& mesh, const Vector& face_coeff,
                                         double tau_coeff);

/// Harmonic face averages of a positive cell field.
Vector harmonic_face_coefficients(const Mesh& mesh, const Vector& cell_values);

/// Solves the coupled regularized potential pair at frozen C by damped
/// Newton with Picard fallback; unique by monotonicity of the kinetics in
/// its potential slot. Uses the unregularized kinetics when
/// verification_mode is set (then C must stay positive on electrodes).
PotentialPair solve_potential_pair(const Mesh& mesh, const PhysParams& params, const Vector& C,
                                   const HField& h, double tau, const PotentialPair& guess,
                                   const EllipticSolveSettings& settings,
                                   EllipticReport* report = nullptr,
                                   const Forcing* forcing = nullptr,
                                   bool verification_mode = false);

/// Current lifting: -div(sigma grad phi) = 0 per electrode component with
/// the applied current as Neumann data; gauge-fixed to zero mean per
/// component. Values outside Omega' are zero.
Vector solve_current_lifting(const Mesh& mesh, const PhysParams& params,
                             const BoundaryCurrent& current, double tolerance = 1e-12);

/// integral of phi_e over Omega plus integral of phi_s over Omega'.
double potential_identity_residual(const Mesh& mesh, const PotentialPair& pair);

/// Per-step tolerance for the identity above. The discrete identity equals
/// the summed equation residuals divided by tau, so the attainable
/// precision grows as 1/tau below the reference tau = 1e-3.
inline double potential_identity_tolerance(double omega_measure, double phi_max, double tau) {
    return 1e-10 * omega_measure * phi_max * std::max(1.0, 1e-3 / tau);
}

struct LinfBoundCheck {
    bool ok = false;
    double bound = 0.0;  // (alpha4 / tau) * max |H_tau(h, theta(C+), 0)|
    double actual = 0.0; // max of the two sup norms
    double margin = 0.0; // bound + slack - actual
};

/// Checks the regularized sup-norm bound on a converged pair.
LinfBoundCheck linf_bound_check(const Mesh& mesh, const PotentialPair& pair, const Vector& C,
                                const HField& h, double tau, double alpha4, double d,
                                double alpha2, double slack = 1e-8);

} // namespace cellspan

#endif
