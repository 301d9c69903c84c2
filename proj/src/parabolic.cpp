#include "cellspan/parabolic.hpp"

#include "cellspan/reaction.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <sstream>

namespace cellspan {

namespace {

struct ConcentrationSystem {
    const Mesh& mesh;
    const PhysParams& params;
    const Vector& C_old;
    const Vector& u; // phi_s - phi_e per cell (electrode cells meaningful)
    const Vector& h;
    double tau, dt;
    const Forcing* forcing;
    bool verification_mode;

    Vector mass;     // eps_e * volume
    SparseMatrix A;  // diffusion, zero zero-order
    Vector force;

    ConcentrationSystem(const Mesh& mesh_, const PhysParams& params_, const Vector& C_old_,
                        const Vector& u_, const Vector& h_, double tau_, double dt_,
                        const Forcing* forcing_, bool verification, double t_new)
        : mesh(mesh_), params(params_), C_old(C_old_), u(u_), h(h_), tau(tau_), dt(dt_),
          forcing(forcing_), verification_mode(verification) {
        const Vector eps = params.expand_eps_e(mesh);
        mass = eps.cwiseProduct(mesh.volume);
        const Vector D = params.expand_D(mesh);
        A = assemble_diffusion_operator(mesh, harmonic_face_coefficients(mesh, D), 0.0);
        force = Vector::Zero(mesh.n_cells());
        if (forcing)
            for (int i = 0; i < mesh.n_cells(); ++i)
                force[i] = mesh.volume[i] * forcing->f_c(mesh.center_x[i], mesh.center_y[i], t_new);
    }

    double kinetics(int cell, double c) const {
        if (verification_mode) {
            if (!(c > 0.0))
                throw SolverError("step_concentration: C <= 0 in electrode cell "
                                  + std::to_string(cell) + " (verification mode)");
            return std::sqrt(c) * G(h[cell], c, u[cell], params.d, params.alpha2);
        }
        return H_tau(h[cell], c, u[cell], params.d, params.alpha2, tau);
    }

    double kinetics_dc(int cell, double c) const {
        if (verification_mode) {
            const double g = G(h[cell], c, u[cell], params.d, params.alpha2);
            const double dg = dG_dy2(h[cell], c, u[cell], params.d, params.alpha2);
            return g / (2.0 * std::sqrt(c)) + std::sqrt(c) * dg;
        }
        return dH_tau_dy2(h[cell], c, u[cell], params.d, params.alpha2, tau);
    }

    Vector residual(const Vector& C) const {
        Vector r = mass.cwiseProduct(C - C_old) / dt + A * C - force;
        for (int i = 0; i < mesh.n_cells(); ++i) {
            if (!is_electrode(mesh.region[i])) continue;
            r[i] -= mesh.volume[i] * 0.5 * params.alpha3 * params.alpha4 * kinetics(i, C[i]);
        }
        return r;
    }

    // +inf on any non-finite entry; see the potential-pair solver
    double scaled_inf_norm(const Vector& r) const {
        double worst = 0.0;
        for (int i = 0; i < mesh.n_cells(); ++i) {
            const double v = std::abs(r[i]) / mesh.volume[i];
            if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, v);
        }
        return worst;
    }

    SparseMatrix jacobian(const Vector& C, bool with_source) const {
        std::vector<Triplet> trip;
        trip.reserve(static_cast<size_t>(A.nonZeros()) + static_cast<size_t>(mesh.n_cells()));
        for (int k = 0; k < A.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(A, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int i = 0; i < mesh.n_cells(); ++i) {
            double diag = mass[i] / dt;
            if (with_source && is_electrode(mesh.region[i]))
                diag -= mesh.volume[i] * 0.5 * params.alpha3 * params.alpha4 * kinetics_dc(i, C[i]);
            trip.emplace_back(i, i, diag);
        }
        SparseMatrix J(mesh.n_cells(), mesh.n_cells());
        J.setFromTriplets(trip.begin(), trip.end());
        J.makeCompressed();
        return J;
    }
};

// Natural magnitude of the implicit-Euler equation, dominated by the
// eps_e C / dt mass term; convergence tolerances are relative to it so the
// attainable residual floor does not depend on dt or the mesh.
double parabolic_scale(const Mesh& mesh, const PhysParams& params, const Vector& C_old,
                       double dt) {
    double scale = 1.0;
    for (int i = 0; i < mesh.n_cells(); ++i)
        scale = std::max(scale, params.eps_e(mesh.region[i]) * (std::abs(C_old[i]) + 1.0) / dt);
    return scale;
}

Vector solve_linear(const SparseMatrix& J, const Vector& rhs) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(J);
    if (ldlt.info() == Eigen::Success) {
        Vector x = ldlt.solve(rhs);
        if ((J * x - rhs).cwiseAbs().maxCoeff()
            <= 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
            return x;
    }
    Eigen::SparseLU<SparseMatrix> lu(J);
    if (lu.info() != Eigen::Success)
        throw SolverError("step_concentration: linear solve failed");
    return lu.solve(rhs);
}

} // namespace

double concentration_residual(const Mesh& mesh, const PhysParams& params, const Vector& C_old,
                              const Vector& C_new, const PotentialPair& pair, const HField& h,
                              double tau, double dt, const Forcing* forcing,
                              bool verification_mode) {
    const Vector u = pair.phi_s - pair.phi_e;
    ConcentrationSystem sys(mesh, params, C_old, u, h.value, tau, dt, forcing, verification_mode,
                            forcing ? forcing->time : 0.0);
    return sys.scaled_inf_norm(sys.residual(C_new));
}

Vector step_concentration(const Mesh& mesh, const PhysParams& params, const Vector& C_old,
                          const PotentialPair& pair, const HField& h, double tau, double dt,
                          const SolverSettings& settings, StepReport* report,
                          const Forcing* forcing, bool verification_mode) {
    if (!(dt > 0.0)) throw ConfigError("step_concentration: dt must be > 0");
    if (C_old.size() != mesh.volume.size())
        throw ConfigError("step_concentration: field length mismatch");
    require_unit_interval_tau(tau);

    const Vector u = pair.phi_s - pair.phi_e;
    ConcentrationSystem sys(mesh, params, C_old, u, h.value, tau, dt, forcing, verification_mode,
                            forcing ? forcing->time : 0.0);

    Vector C = C_old;
    reset_saturation_count();
    Vector r = sys.residual(C);
    bool saturated = saturation_count() > 0;
    double res = sys.scaled_inf_norm(r);

    const double tol = settings.parabolic_tolerance * parabolic_scale(mesh, params, C_old, dt);
    StepReport rep;
    int polish_left = res > tol ? 2 : 0;
    bool picard_mode = false;
    int picard_budget = 0;
    while (rep.newton_iterations < settings.max_newton) {
        const bool below_tol = res <= tol;
        if (below_tol && (polish_left == 0 || res == 0.0)) break;

        SparseMatrix J = sys.jacobian(C, !picard_mode);
        Vector dx = solve_linear(J, -r);
        ++rep.newton_iterations;
        if (!dx.allFinite()) {
            if (picard_mode)
                throw SolverError("step_concentration: non-finite correction", res);
            if (below_tol) break;
            picard_mode = true;
            picard_budget = 5;
            continue;
        }

        if (picard_mode) {
            // frozen-source step with backtracked relaxation
            double omega = 0.5;
            bool moved = false;
            for (int attempt = 0; attempt < 6; ++attempt) {
                Vector C_trial = C + omega * dx;
                bool trial_ok = true;
                Vector r_trial;
                double res_trial = 0.0;
                bool sat_trial = false;
                try {
                    reset_saturation_count();
                    r_trial = sys.residual(C_trial);
                    sat_trial = saturation_count() > 0;
                    res_trial = sys.scaled_inf_norm(r_trial);
                } catch (const std::exception&) {
                    trial_ok = false;
                }
                if (trial_ok && res_trial <= res) {
                    C = std::move(C_trial);
                    r = std::move(r_trial);
                    saturated = sat_trial;
                    res = res_trial;
                    moved = true;
                    break;
                }
                omega *= 0.5;
            }
            if (res <= tol || !moved || --picard_budget <= 0) picard_mode = false;
            continue;
        }

        double lambda = 1.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 4; ++attempt) {
            Vector C_trial = C + lambda * dx;
            bool trial_ok = true;
            Vector r_trial;
            double res_trial = 0.0;
            bool sat_trial = false;
            try {
                reset_saturation_count();
                r_trial = sys.residual(C_trial);
                sat_trial = saturation_count() > 0;
                res_trial = sys.scaled_inf_norm(r_trial);
            } catch (const std::exception&) {
                trial_ok = false; // e.g. C <= 0 under the unregularized kinetics
            }
            if (trial_ok && (res_trial <= res || res_trial == 0.0)) {
                C = std::move(C_trial);
                r = std::move(r_trial);
                saturated = sat_trial;
                if (below_tol) {
                    if (res_trial > 0.5 * res) polish_left = 0;
                    if (polish_left > 0) --polish_left;
                }
                res = res_trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            if (below_tol) break;
            picard_mode = true;
            picard_budget = 5;
        }
    }

    rep.residual = res;
    if (report) *report = rep;
    if (res > tol)
        throw SolverError("step_concentration: no convergence within "
                              + std::to_string(settings.max_newton) + " iterations",
                          res);
    if (saturated)
        throw SolverError("step_concentration: kinetics exponent saturated at the converged state",
                          res);
    const double min_C = C.minCoeff();
    if (min_C < -settings.nonneg_tolerance)
        throw SolverError("step_concentration: nonnegativity violated (min C = "
                              + std::to_string(min_C) + ")",
                          res);
    return C;
}

FieldState coupled_step(const Mesh& mesh, const PhysParams& params, const FieldState& state,
                        const HField& h, double tau, double dt, const SolverSettings& settings,
                        CoupledReport* report, const Forcing* forcing, bool verification_mode) {
    if (!(settings.relaxation > 0.0) || settings.relaxation > 1.0)
        throw ConfigError("coupled_step: relaxation must lie in (0,1]");

    CoupledReport rep;
    Forcing forcing_at_new;
    const Forcing* fptr = nullptr;
    if (forcing) {
        forcing_at_new = *forcing;
        forcing_at_new.time = state.t + dt;
        fptr = &forcing_at_new;
    }

    Vector C_k = state.C;
    PotentialPair pair = state.pair.phi_e.size() == mesh.volume.size() ? state.pair
                                                                       : PotentialPair::zero(mesh);
    EllipticReport erep;
    StepReport srep;
    while (rep.outer_iterations < settings.max_outer) {
        ++rep.outer_iterations;
        pair = solve_potential_pair(mesh, params, C_k, h, tau, pair, settings.elliptic, &erep,
                                    fptr, verification_mode);
        Vector C_new = step_concentration(mesh, params, state.C, pair, h, tau, dt, settings, &srep,
                                          fptr, verification_mode);
        if (settings.relaxation < 1.0)
            C_new = (1.0 - settings.relaxation) * C_k + settings.relaxation * C_new;
        const double dC = (C_new - C_k).cwiseAbs().maxCoeff();
        rep.update_history.push_back(dC);
        C_k = std::move(C_new);
        if (params.alpha4 == 0.0) {
            // no reaction: the concentration never feeds back into the pair
            rep.elliptic_residual = erep.residual;
            rep.parabolic_residual = srep.residual;
            if (report) *report = rep;
            return {state.t + dt, std::move(C_k), std::move(pair)};
        }
        if (dC < settings.outer_tolerance) {
            // refresh potentials so the returned state is self-consistent
            pair = solve_potential_pair(mesh, params, C_k, h, tau, pair, settings.elliptic, &erep,
                                        fptr, verification_mode);
            const double parab = concentration_residual(mesh, params, state.C, C_k, pair, h, tau,
                                                        dt, fptr, verification_mode);
            rep.elliptic_residual = erep.residual;
            rep.parabolic_residual = parab;
            const double tol = settings.parabolic_tolerance
                               * parabolic_scale(mesh, params, state.C, dt);
            if (parab <= 10.0 * tol) {
                if (report) *report = rep;
                return {state.t + dt, std::move(C_k), std::move(pair)};
            }
        }
    }
    std::ostringstream os;
    os << "coupled_step: outer fixed point did not settle within " << settings.max_outer
       << " iterations; |dC| history:";
    for (double d : rep.update_history) os << " " << d;
    if (report) *report = rep;
    throw SolverError(os.str(), rep.update_history.empty() ? -1.0 : rep.update_history.back());
}

std::vector<double> trajectory_times(const Trajectory& traj) {
    std::vector<double> t;
    t.reserve(traj.states.size());
    for (const auto& s : traj.states) t.push_back(s.t);
    return t;
}

std::vector<double> trajectory_amplitude(const Mesh& mesh, const Trajectory& traj) {
    std::vector<double> a;
    a.reserve(traj.states.size());
    double M = 1.0, L = 0.0;
    for (const auto& s : traj.states) {
        int argmin = 0;
        const double min_C = s.C.minCoeff(&argmin);
        if (!(min_C > 0.0)) {
            std::ostringstream os;
            os << "trajectory_amplitude: C <= 0 at cell " << argmin << " (x = "
               << mesh.center_x[argmin] << ") at t = " << s.t;
            throw SolverError(os.str(), min_C);
        }
        M = std::max(M, s.C.maxCoeff());
        L = std::max(L, 1.0 / min_C);
        a.push_back(M * L);
    }
    return a;
}

SimulationResult simulate(const SimulationSetup& setup) {
    SimulationResult result;
    Trajectory& traj = result.trajectory;

    const long long n_steps = std::llround(setup.T_end / setup.dt);
    if (n_steps < 1) throw ConfigError("simulate: T_end must cover at least one step");
    if (setup.output_stride < 1) throw ConfigError("simulate: output_stride must be >= 1");

    const Vector C0 = setup.C0_override ? *setup.C0_override : setup.params.expand_C0(setup.mesh);
    if (C0.size() != setup.mesh.volume.size())
        throw ConfigError("simulate: C0 length does not match cell count");
    Forcing f0;
    const Forcing* fptr0 = nullptr;
    if (setup.forcing) {
        f0 = *setup.forcing;
        f0.time = 0.0;
        fptr0 = &f0;
    }

    FieldState state;
    state.t = 0.0;
    state.C = C0;
    try {
        state.pair = solve_potential_pair(setup.mesh, setup.params, C0, setup.h, setup.tau,
                                          PotentialPair::zero(setup.mesh), setup.settings.elliptic,
                                          nullptr, fptr0, setup.verification_mode);
    } catch (const std::exception& e) {
        result.error = std::string("initial potential solve: ") + e.what();
        return result;
    }

    traj.running_M = std::max(1.0, C0.maxCoeff());
    traj.running_L = C0.minCoeff() > 0.0 ? 1.0 / C0.minCoeff()
                                         : std::numeric_limits<double>::infinity();
    traj.states.push_back(state);
    traj.state_M.push_back(traj.running_M);
    traj.state_L.push_back(traj.running_L);

    const double omega_measure = setup.mesh.measure();
    const Vector mass = setup.params.expand_eps_e(setup.mesh).cwiseProduct(setup.mesh.volume);
    CoupledReport crep;
    for (long long k = 1; k <= n_steps; ++k) {
        const Vector C_prev = state.C;
        FieldState next;
        try {
            next = coupled_step(setup.mesh, setup.params, state, setup.h, setup.tau, setup.dt,
                                setup.settings, &crep, setup.forcing, setup.verification_mode);
        } catch (const std::exception& e) {
            result.error = e.what();
            return result; // partial trajectory preserved
        }
        state = std::move(next);

        const double min_C = state.C.minCoeff();
        const double max_C = state.C.maxCoeff();
        traj.running_M = std::max(traj.running_M, std::max(max_C, 1.0));
        traj.running_L = min_C > 0.0 ? std::max(traj.running_L, 1.0 / min_C)
                                     : std::numeric_limits<double>::infinity();

        StepDiagnostics diag;
        diag.t = state.t;
        diag.outer_iterations = crep.outer_iterations;
        diag.elliptic_residual = crep.elliptic_residual;
        diag.parabolic_residual = crep.parabolic_residual;
        diag.min_C = min_C;
        diag.max_C = max_C;
        diag.amplitude = traj.running_M * traj.running_L;
        diag.identity_residual = potential_identity_residual(setup.mesh, state.pair);

        // integrated implicit-Euler identity: mass change = dt * total source
        {
            double source = 0.0;
            for (int i = 0; i < setup.mesh.n_cells(); ++i) {
                if (is_electrode(setup.mesh.region[i])) {
                    const double u = state.pair.phi_s[i] - state.pair.phi_e[i];
                    const double kin =
                        setup.verification_mode
                            ? std::sqrt(state.C[i])
                                  * G(setup.h.value[i], state.C[i], u, setup.params.d,
                                      setup.params.alpha2)
                            : H_tau(setup.h.value[i], state.C[i], u, setup.params.d,
                                    setup.params.alpha2, setup.tau);
                    source += setup.mesh.volume[i] * 0.5 * setup.params.alpha3
                              * setup.params.alpha4 * kin;
                }
                if (setup.forcing)
                    source += setup.mesh.volume[i]
                              * setup.forcing->f_c(setup.mesh.center_x[i], setup.mesh.center_y[i],
                                                   state.t);
            }
            const double lhs = mass.dot(state.C - C_prev);
            const double scale = std::max(mass.dot(state.C.cwiseAbs()), 1e-300);
            diag.mass_balance = std::abs(lhs - setup.dt * source) / scale;
        }

        if (!setup.verification_mode) {
            const auto bound = linf_bound_check(setup.mesh, state.pair, state.C, setup.h,
                                                setup.tau, setup.params.alpha4, setup.params.d,
                                                setup.params.alpha2);
            diag.linf_margin = bound.margin;
        } else {
            diag.linf_margin = std::numeric_limits<double>::infinity();
        }
        traj.diagnostics.push_back(diag);

        if (setup.check_invariants) {
            if (min_C < -setup.settings.nonneg_tolerance)
                result.invariant_failures.push_back(
                    {"nonnegativity", state.t, min_C, -setup.settings.nonneg_tolerance});
            if (diag.mass_balance > 1e-10)
                result.invariant_failures.push_back(
                    {"mass_balance", state.t, diag.mass_balance, 1e-10});
            if (!setup.forcing) {
                const double phi_max = std::max(state.pair.phi_e.cwiseAbs().maxCoeff(),
                                                state.pair.phi_s.cwiseAbs().maxCoeff());
                const double threshold =
                    potential_identity_tolerance(omega_measure, phi_max, setup.tau);
                if (std::abs(diag.identity_residual) > threshold)
                    result.invariant_failures.push_back(
                        {"potential_identity", state.t, std::abs(diag.identity_residual),
                         threshold});
            }
            if (!setup.verification_mode && diag.linf_margin < 0.0)
                result.invariant_failures.push_back(
                    {"linf_potential_bound", state.t, diag.linf_margin, 0.0});
        }

        if (k % setup.output_stride == 0 || k == n_steps) {
            traj.states.push_back(state);
            traj.state_M.push_back(traj.running_M);
            traj.state_L.push_back(traj.running_L);
        }
    }
    result.completed = true;
    return result;
}

ContinuationResult simulate_continuation(const SimulationSetup& setup,
                                         const std::vector<double>& tau_schedule) {
    if (tau_schedule.empty()) throw ConfigError("tau continuation: empty schedule");
    ContinuationResult out;
    out.taus = tau_schedule;
    for (double tau : tau_schedule) {
        SimulationSetup member = setup;
        member.tau = tau;
        out.runs.push_back(simulate(member));
    }
    for (size_t i = 0; i + 1 < out.runs.size(); ++i) {
        const auto& a = out.runs[i].trajectory.states;
        const auto& b = out.runs[i + 1].trajectory.states;
        if (a.empty() || b.empty() || !out.runs[i].completed || !out.runs[i + 1].completed) {
            out.final_state_diffs.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        out.final_state_diffs.push_back((a.back().C - b.back().C).cwiseAbs().maxCoeff());
    }
    return out;
}

} // namespace cellspan
