#ifndef CELLSPAN_PARABOLIC_HPP
#define CELLSPAN_PARABOLIC_HPP

#include "cellspan/elliptic.hpp"
#include "cellspan/geometry.hpp"
#include "cellspan/params.hpp"

#include <optional>

namespace cellspan {

/// Discrete fields at one time level.
struct FieldState {
    double t = 0.0;
    Vector C;
    PotentialPair pair;
};

struct StepDiagnostics {
    double t = 0.0;
    int outer_iterations = 0;
    double elliptic_residual = 0.0;
    double parabolic_residual = 0.0;
    double min_C = 0.0;
    double max_C = 0.0;
    double amplitude = 0.0;          // running M * L up to this step
    double identity_residual = 0.0;  // integral phi_e + integral phi_s
    double mass_balance = 0.0;       // relative defect of the integrated scheme
    double linf_margin = 0.0;        // slack of the sup-norm potential bound
};

/// Recorded states plus per-step diagnostics and the running amplitude
/// ingredients M(t) = max(max C, 1), L(t) = max 1/C over all steps so far.
struct Trajectory {
    std::vector<FieldState> states;          // every output_stride steps
    std::vector<double> state_M, state_L;    // running values at the recorded states
    std::vector<StepDiagnostics> diagnostics; // every step
    double running_M = 1.0;
    double running_L = 0.0;
};

struct SolverSettings {
    EllipticSolveSettings elliptic;
    double parabolic_tolerance = 1e-12;
    int max_newton = 60;
    double outer_tolerance = 1e-11;
    int max_outer = 40;
    double relaxation = 1.0; // outer update fraction, in (0,1]
    double nonneg_tolerance = 1e-12;
};

struct StepReport {
    int newton_iterations = 0;
    double residual = 0.0;
};

struct CoupledReport {
    int outer_iterations = 0;
    double elliptic_residual = 0.0;
    double parabolic_residual = 0.0;
    std::vector<double> update_history; // ||C_{k+1} - C_k||_inf per outer pass
};

/// One implicit-Euler update of the concentration with frozen potentials;
/// the reaction term is implicit in C.
Vector step_concentration(const Mesh& mesh, const PhysParams& params, const Vector& C_old,
                          const PotentialPair& pair, const HField& h, double tau, double dt,
                          const SolverSettings& settings, StepReport* report = nullptr,
                          const Forcing* forcing = nullptr, bool verification_mode = false);

/// Volume-scaled inf-norm residual of the implicit-Euler equation at C_new.
double concentration_residual(const Mesh& mesh, const PhysParams& params, const Vector& C_old,
                              const Vector& C_new, const PotentialPair& pair, const HField& h,
                              double tau, double dt, const Forcing* forcing = nullptr,
                              bool verification_mode = false);

/// One full time step: alternate potential-pair solves and concentration
/// updates until the concentration iterate settles.
FieldState coupled_step(const Mesh& mesh, const PhysParams& params, const FieldState& state,
                        const HField& h, double tau, double dt, const SolverSettings& settings,
                        CoupledReport* report = nullptr, const Forcing* forcing = nullptr,
                        bool verification_mode = false);

struct SimulationSetup {
    Mesh mesh;
    PhysParams params;
    HField h;
    double tau = 1e-3;
    double dt = 1e-5;
    double T_end = 1e-3;
    int output_stride = 1;
    SolverSettings settings;
    bool verification_mode = false;
    bool check_invariants = true;
    const Forcing* forcing = nullptr;   // evaluated at the step's end time
    std::optional<Vector> C0_override;  // per-cell initial datum (else from params)
};

struct InvariantFailure {
    std::string name;
    double time = 0.0;
    double value = 0.0;
    double threshold = 0.0;
};

struct SimulationResult {
    Trajectory trajectory;
    bool completed = false;
    std::string error;
    std::vector<InvariantFailure> invariant_failures;
};

/// Advances C from C0 over [0, T_end] with fixed dt, recording every
/// output_stride steps. A step failure aborts but keeps the partial
/// trajectory.
SimulationResult simulate(const SimulationSetup& setup);

struct ContinuationResult {
    std::vector<double> taus;
    std::vector<SimulationResult> runs;
    std::vector<double> final_state_diffs; // inf-norm between consecutive runs
};

/// Repeats the run over a decreasing tau schedule and reports inter-run
/// final-state differences.
ContinuationResult simulate_continuation(const SimulationSetup& setup,
                                         const std::vector<double>& tau_schedule);

/// Amplitude a(t) = M(t) L(t) per recorded state, computed from the
/// recorded concentration fields; throws when a state has C <= 0,
/// naming the cell and time.
std::vector<double> trajectory_amplitude(const Mesh& mesh, const Trajectory& traj);

/// Times of the recorded states.
std::vector<double> trajectory_times(const Trajectory& traj);

} // namespace cellspan

#endif
