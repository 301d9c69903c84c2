#ifndef CELLSPAN_VERIFY_HPP
#define CELLSPAN_VERIFY_HPP

#include "cellspan/parabolic.hpp"

#include <functional>

namespace cellspan {

/// Closed-form 1D space-time field with the derivatives the forcing
/// construction needs.
struct ScalarField1D {
    std::function<double(double, double)> v;   // (x, t)
    std::function<double(double, double)> dx;
    std::function<double(double, double)> dxx;
    std::function<double(double, double)> dt;
};

/// Manufactured-solution case: exact fields, induced forcings and a
/// refinement schedule. Runs in verification mode (unregularized kinetics)
/// so the forcings stay closed-form.
struct MMSCase {
    std::string name;
    DomainLayout layout;
    PhysParams params;
    double tau = 1e-3;
    ScalarField1D C_exact;
    ScalarField1D phie_exact;
    ScalarField1D phis_anode;
    ScalarField1D phis_cathode;
    Forcing forcing;

    enum class Refinement { space, time };
    Refinement refinement = Refinement::space;
    std::vector<std::array<int, 3>> cell_levels; // one entry per level (time study: single)
    std::vector<double> dt_levels;               // one entry per level (space study: single)
    double T_final = 0.01;
    SolverSettings settings;

    double phis_value(double x, double t) const;
};

struct ConvergenceRow {
    double h = 0.0;
    double dt = 0.0;
    double l2_C = 0.0, linf_C = 0.0;
    double l2_phie = 0.0, linf_phie = 0.0;
    double l2_phis = 0.0, linf_phis = 0.0;
    double order_C = 0.0, order_phie = 0.0, order_phis = 0.0; // vs previous level
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    bool completed = true;  // false: a level failed, rows hold the partial table
    std::string error;
};

/// Built-in cases.
MMSCase default_mms_spatial_case();
MMSCase default_mms_temporal_case();
MMSCase default_mms_constant_case();

/// Checks the analytic forcings against high-order finite differences of
/// the exact fields at random interior points; returns the worst defect.
double mms_forcing_selfcheck(const MMSCase& mms, int n_points = 1000, unsigned seed = 0x5eed);

/// Runs the refinement schedule and reports errors and observed orders.
ConvergenceTable run_mms(const MMSCase& mms);

/// Max |C(t) - C0| over a run of the given setup (expected to be an
/// equilibrium configuration).
double equilibrium_preservation(const SimulationSetup& setup);

/// Solves the potential pair from n random starting guesses in [-5, 5] and
/// returns the largest pairwise inf-norm discrepancy.
double uniqueness_sweep(const SimulationSetup& setup, int n_guesses, unsigned seed = 0x5eed);

struct InvariantEntry {
    std::string name;
    bool pass = true;
    double worst_margin = 0.0; // negative = violated
    double worst_time = 0.0;
};

struct InvariantSweepReport {
    std::vector<InvariantEntry> entries;
    bool all_pass = true;
};

/// Re-checks the trajectory invariants (nonnegativity, potential identity,
/// sup-norm potential bound, mass balance) from the recorded states and
/// per-step diagnostics.
InvariantSweepReport invariant_sweep(const Mesh& mesh, const Trajectory& traj,
                                     const PhysParams& params, const HField& h, double tau,
                                     bool verification_mode = false, bool has_forcing = false);

} // namespace cellspan

#endif
