#include "cellspan/elliptic.hpp"

#include "cellspan/reaction.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <sstream>

namespace cellspan {

Vector harmonic_face_coefficients(const Mesh& mesh, const Vector& cell_values) {
    Vector out(static_cast<Eigen::Index>(mesh.face.size()));
    for (size_t f = 0; f < mesh.face.size(); ++f) {
        const double a = cell_values[mesh.face[f].left];
        const double b = cell_values[mesh.face[f].right];
        if (!(a > 0.0) || !(b > 0.0))
            throw SolverError("harmonic_face_coefficients: nonpositive cell coefficient");
        out[static_cast<Eigen::Index>(f)] = 2.0 * a * b / (a + b);
    }
    return out;
}

SparseMatrix assemble_diffusion_operator(const Mesh& mesh, const Vector& face_coeff,
                                         double tau_coeff, const std::vector<int>& cells) {
    if (face_coeff.size() != static_cast<Eigen::Index>(mesh.face.size()))
        throw ConfigError("assemble_diffusion_operator: face coefficient count mismatch");
    if (tau_coeff < 0.0)
        throw ConfigError("assemble_diffusion_operator: zero-order coefficient must be >= 0");

    std::vector<int> local(static_cast<size_t>(mesh.n_cells()), -1);
    for (size_t j = 0; j < cells.size(); ++j) local[static_cast<size_t>(cells[j])] = static_cast<int>(j);

    std::vector<Triplet> trip;
    trip.reserve(cells.size() + 4 * mesh.face.size());
    for (size_t j = 0; j < cells.size(); ++j)
        trip.emplace_back(static_cast<int>(j), static_cast<int>(j),
                          tau_coeff * mesh.volume[cells[j]]);
    for (size_t f = 0; f < mesh.face.size(); ++f) {
        const int li = local[static_cast<size_t>(mesh.face[f].left)];
        const int ri = local[static_cast<size_t>(mesh.face[f].right)];
        if (li < 0 || ri < 0) continue; // face leaves the subset: Neumann
        const double coeff = face_coeff[static_cast<Eigen::Index>(f)];
        if (!(coeff > 0.0))
            throw SolverError("assemble_diffusion_operator: nonpositive face coefficient");
        const double t = coeff * mesh.face[f].geom;
        trip.emplace_back(li, li, t);
        trip.emplace_back(ri, ri, t);
        trip.emplace_back(li, ri, -t);
        trip.emplace_back(ri, li, -t);
    }
    SparseMatrix A(static_cast<int>(cells.size()), static_cast<int>(cells.size()));
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

SparseMatrix assemble_diffusion_operator(const Mesh& mesh, const Vector& face_coeff,
                                         double tau_coeff) {
    std::vector<int> all(static_cast<size_t>(mesh.n_cells()));
    for (int i = 0; i < mesh.n_cells(); ++i) all[static_cast<size_t>(i)] = i;
    return assemble_diffusion_operator(mesh, face_coeff, tau_coeff, all);
}

namespace {

// Solves an SPD sparse system; direct factorization in 1D, conjugate
// gradients in 2D with a direct fallback.
Vector solve_spd(const Mesh& mesh, const SparseMatrix& A, const Vector& b, double linear_tol) {
    if (mesh.is_1d()) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
        if (ldlt.info() == Eigen::Success) return ldlt.solve(b);
    } else {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(linear_tol);
        cg.setMaxIterations(20 * A.rows());
        cg.compute(A);
        Vector x = cg.solve(b);
        if (cg.info() == Eigen::Success) return x;
    }
    Eigen::SparseLU<SparseMatrix> lu(A);
    if (lu.info() != Eigen::Success)
        throw SolverError("linear solve failed (singular operator)");
    return lu.solve(b);
}

struct PairSystem {
    const Mesh& mesh;
    const PhysParams& params;
    const Vector& C;
    const Vector& h;
    double tau;
    const Forcing* forcing;
    bool verification_mode;

    std::vector<int> elec;          // electrode cells
    SparseMatrix A_e;               // n x n
    SparseMatrix A_s;               // m x m
    SparseMatrix A_e_abs, A_s_abs;  // entrywise magnitudes, for the floor
    Vector force_e, force_s;        // cellwise forcing integrals

    PairSystem(const Mesh& mesh_, const PhysParams& params_, const Vector& C_, const Vector& h_,
               double tau_, const Forcing* forcing_, bool verification)
        : mesh(mesh_), params(params_), C(C_), h(h_), tau(tau_), forcing(forcing_),
          verification_mode(verification) {
        elec = mesh.electrode_cells();

        Vector kappa_cell(mesh.n_cells());
        for (int i = 0; i < mesh.n_cells(); ++i) {
            kappa_cell[i] = verification_mode ? params.kappa(C[i]) : kappa_tau(params.kappa, C[i], tau);
            if (!(kappa_cell[i] > 0.0))
                throw SolverError("potential pair: kappa coefficient vanished at cell " + std::to_string(i));
        }
        A_e = assemble_diffusion_operator(mesh, harmonic_face_coefficients(mesh, kappa_cell), tau);

        Vector sigma_cell(mesh.n_cells());
        for (int i = 0; i < mesh.n_cells(); ++i)
            sigma_cell[i] = is_electrode(mesh.region[i]) ? params.sigma(mesh.region[i]) : 1.0;
        A_s = assemble_diffusion_operator(mesh, harmonic_face_coefficients(mesh, sigma_cell), tau, elec);

        force_e = Vector::Zero(mesh.n_cells());
        force_s = Vector::Zero(static_cast<Eigen::Index>(elec.size()));
        if (forcing) {
            for (int i = 0; i < mesh.n_cells(); ++i)
                force_e[i] = mesh.volume[i]
                             * forcing->f_e(mesh.center_x[i], mesh.center_y[i], forcing->time);
            for (size_t j = 0; j < elec.size(); ++j) {
                const int i = elec[j];
                force_s[static_cast<Eigen::Index>(j)] =
                    mesh.volume[i] * forcing->f_s(mesh.center_x[i], mesh.center_y[i], forcing->time);
            }
        }
        A_e_abs = A_e.cwiseAbs();
        A_s_abs = A_s.cwiseAbs();
    }

    // attainable pointwise precision of the residual evaluation at x
    // (backward-error floor): eps times the magnitudes that get summed
    double residual_floor(const Vector& x) const {
        const Vector mag_e = A_e_abs * x.head(n()).cwiseAbs() + force_e.cwiseAbs();
        const Vector mag_s = A_s_abs * x.tail(m()).cwiseAbs() + force_s.cwiseAbs();
        double worst = 0.0;
        for (int i = 0; i < n(); ++i) worst = std::max(worst, mag_e[i] / mesh.volume[i]);
        for (int j = 0; j < m(); ++j) {
            const int i = elec[static_cast<size_t>(j)];
            const double u = x[n() + j] - x[i];
            const double kin_mag = mesh.volume[i] * 0.5 * params.alpha4
                                   * kinetics_du(i, u) / params.alpha2;
            worst = std::max(worst, (mag_s[j] + kin_mag) / mesh.volume[i]);
            worst = std::max(worst, kin_mag / mesh.volume[i]);
        }
        return std::numeric_limits<double>::epsilon() * worst;
    }

    int n() const { return mesh.n_cells(); }
    int m() const { return static_cast<int>(elec.size()); }

    double kinetics(int cell, double u) const {
        if (verification_mode) {
            if (!(C[cell] > 0.0))
                throw SolverError("potential pair: C <= 0 in electrode cell " + std::to_string(cell)
                                  + " (verification mode)");
            return std::sqrt(C[cell]) * G(h[cell], C[cell], u, params.d, params.alpha2);
        }
        return H_tau(h[cell], C[cell], u, params.d, params.alpha2, tau);
    }

    double kinetics_du(int cell, double u) const {
        if (verification_mode)
            return std::sqrt(C[cell]) * dG_dy3(h[cell], C[cell], u, params.d, params.alpha2);
        const double th = theta_tau(C[cell], tau);
        if (th == 0.0) return 0.0;
        return std::sqrt(th) * dG_tau_dy3(h[cell], C[cell], u, params.d, params.alpha2, tau);
    }

    // Stacked residual [r_e; r_s] of the coupled system.
    Vector residual(const Vector& x) const {
        const auto phi_e = x.head(n());
        const auto phi_s = x.tail(m());
        Vector r(n() + m());
        r.head(n()) = A_e * phi_e - force_e;
        r.tail(m()) = A_s * phi_s - force_s;
        for (int j = 0; j < m(); ++j) {
            const int i = elec[static_cast<size_t>(j)];
            const double u = phi_s[j] - phi_e[i];
            const double s = mesh.volume[i] * 0.5 * params.alpha4 * kinetics(i, u);
            r[i] -= s;
            r[n() + j] += s;
        }
        return r;
    }

    // any non-finite entry makes the norm +inf so poisoned trials are
    // always rejected
    double scaled_inf_norm(const Vector& r) const {
        double worst = 0.0;
        for (int i = 0; i < n(); ++i) {
            const double v = std::abs(r[i]) / mesh.volume[i];
            if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, v);
        }
        for (int j = 0; j < m(); ++j) {
            const double v = std::abs(r[n() + j]) / mesh.volume[elec[static_cast<size_t>(j)]];
            if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, v);
        }
        return worst;
    }

    SparseMatrix jacobian(const Vector& x, bool with_coupling) const {
        const auto phi_e = x.head(n());
        const auto phi_s = x.tail(m());
        std::vector<Triplet> trip;
        trip.reserve(static_cast<size_t>(A_e.nonZeros() + A_s.nonZeros()) + 4 * static_cast<size_t>(m()));
        for (int k = 0; k < A_e.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(A_e, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int k = 0; k < A_s.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(A_s, k); it; ++it)
                trip.emplace_back(n() + static_cast<int>(it.row()), n() + static_cast<int>(it.col()),
                                  it.value());
        if (with_coupling) {
            for (int j = 0; j < m(); ++j) {
                const int i = elec[static_cast<size_t>(j)];
                const double u = phi_s[j] - phi_e[i];
                const double w = mesh.volume[i] * 0.5 * params.alpha4 * kinetics_du(i, u);
                trip.emplace_back(i, i, w);
                trip.emplace_back(i, n() + j, -w);
                trip.emplace_back(n() + j, n() + j, w);
                trip.emplace_back(n() + j, i, -w);
            }
        }
        SparseMatrix J(n() + m(), n() + m());
        J.setFromTriplets(trip.begin(), trip.end());
        J.makeCompressed();
        return J;
    }
};

} // namespace

PotentialPair solve_potential_pair(const Mesh& mesh, const PhysParams& params, const Vector& C,
                                   const HField& h, double tau, const PotentialPair& guess,
                                   const EllipticSolveSettings& settings, EllipticReport* report,
                                   const Forcing* forcing, bool verification_mode) {
    require_unit_interval_tau(tau);
    if (!(settings.tolerance > 0.0) || !(settings.linear_tolerance > 0.0))
        throw ConfigError("elliptic settings: tolerances must be > 0");
    if (!(settings.damping > 0.0) || settings.damping > 1.0)
        throw ConfigError("elliptic settings: damping must lie in (0,1]");
    if (C.size() != mesh.volume.size() || h.value.size() != mesh.volume.size())
        throw ConfigError("solve_potential_pair: field length mismatch");

    PairSystem sys(mesh, params, C, h.value, tau, forcing, verification_mode);
    const int n = sys.n(), m = sys.m();

    Vector x(n + m);
    x.head(n) = guess.phi_e;
    for (int j = 0; j < m; ++j) x[n + j] = guess.phi_s[sys.elec[static_cast<size_t>(j)]];

    reset_saturation_count();
    Vector r = sys.residual(x);
    bool saturated = saturation_count() > 0;
    double res = sys.scaled_inf_norm(r);

    // stop once the residual reaches the tolerance or the evaluation's own
    // rounding floor, whichever is larger
    auto effective_tol = [&] {
        return std::max(settings.tolerance, 8.0 * sys.residual_floor(x));
    };

    EllipticReport rep;
    rep.residual = res;
    rep.residual_history.push_back(res);
    int consecutive_rejections = 0;
    bool picard_mode = false;
    int picard_budget = 0;
    // polish toward the rounding floor only when Newton actually iterates;
    // a guess that already satisfies the equations is returned untouched
    int polish_left = (settings.polish && res > effective_tol()) ? 3 : 0;

    while (rep.iterations < settings.max_iterations) {
        const bool below_tol = res <= effective_tol();
        if (below_tol && (polish_left == 0 || res == 0.0)) break;

        SparseMatrix J = sys.jacobian(x, !picard_mode);
        Vector dx = solve_spd(mesh, J, -r, settings.linear_tolerance);
        ++rep.iterations;
        if (!dx.allFinite()) {
            // an overflowed kinetics slope poisoned the Jacobian; the
            // frozen-source step stays well defined
            if (picard_mode)
                throw SolverError("solve_potential_pair: non-finite correction", res);
            if (below_tol) break;
            picard_mode = true;
            picard_budget = 5;
            continue;
        }

        if (picard_mode) {
            // relaxed fixed-point step on the frozen-source linear problem;
            // backtrack on the relaxation so a non-contractive map cannot
            // run away
            double omega = 0.5;
            bool moved = false;
            for (int attempt = 0; attempt < 6; ++attempt) {
                Vector x_trial = x + omega * dx;
                reset_saturation_count();
                Vector r_trial = sys.residual(x_trial);
                const bool sat_trial = saturation_count() > 0;
                const double res_trial = sys.scaled_inf_norm(r_trial);
                if (res_trial <= res) {
                    x = std::move(x_trial);
                    r = std::move(r_trial);
                    saturated = sat_trial;
                    res = res_trial;
                    rep.residual_history.push_back(res);
                    moved = true;
                    break;
                }
                omega *= 0.5;
            }
            ++rep.picard_steps;
            if (res <= settings.tolerance || !moved || --picard_budget <= 0)
                picard_mode = false;
            continue;
        }

        double lambda = settings.damping;
        bool accepted = false;
        for (int attempt = 0; attempt < 4; ++attempt) {
            Vector x_trial = x + lambda * dx;
            reset_saturation_count();
            Vector r_trial = sys.residual(x_trial);
            const bool sat_trial = saturation_count() > 0;
            const double res_trial = sys.scaled_inf_norm(r_trial);
            if (res_trial <= res || res_trial == 0.0) {
                x = std::move(x_trial);
                r = std::move(r_trial);
                saturated = sat_trial;
                if (below_tol) {
                    // polishing: keep going only while clearly improving
                    if (res_trial > 0.5 * res) polish_left = 0;
                    --polish_left;
                    if (polish_left < 0) polish_left = 0;
                }
                res = res_trial;
                rep.residual_history.push_back(res);
                accepted = true;
                consecutive_rejections = 0;
                break;
            }
            lambda *= 0.5;
            ++rep.rejected_steps;
            ++consecutive_rejections;
            if (consecutive_rejections >= 3) break;
        }
        if (!accepted) {
            if (below_tol) break; // polishing stalled at the rounding floor
            picard_mode = true;
            picard_budget = 5;
            consecutive_rejections = 0;
        }
    }

    rep.residual = res;
    rep.converged = res <= effective_tol();
    if (report) *report = rep;
    if (!rep.converged)
        throw SolverError("solve_potential_pair: no convergence within "
                              + std::to_string(settings.max_iterations) + " iterations",
                          res);
    if (saturated)
        throw SolverError("solve_potential_pair: kinetics exponent saturated at the converged state",
                          res);

    PotentialPair out = PotentialPair::zero(mesh);
    out.phi_e = x.head(n);
    for (int j = 0; j < m; ++j) out.phi_s[sys.elec[static_cast<size_t>(j)]] = x[n + j];
    return out;
}

Vector solve_current_lifting(const Mesh& mesh, const PhysParams& params,
                             const BoundaryCurrent& current, double tolerance) {
    if (current.value.size() != mesh.current_face.size())
        throw ConfigError("solve_current_lifting: current value count mismatch");

    Vector phi = Vector::Zero(mesh.n_cells());
    Vector sigma_cell(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i)
        sigma_cell[i] = is_electrode(mesh.region[i]) ? params.sigma(mesh.region[i]) : 1.0;
    const Vector sigma_face = harmonic_face_coefficients(mesh, sigma_cell);

    for (Region reg : {Region::anode, Region::cathode}) {
        const auto cells = mesh.cells_in(reg);
        const int k = static_cast<int>(cells.size());
        std::vector<int> local(static_cast<size_t>(mesh.n_cells()), -1);
        for (int j = 0; j < k; ++j) local[static_cast<size_t>(cells[static_cast<size_t>(j)])] = j;

        Vector b = Vector::Zero(k);
        double abs_flux = 0.0;
        for (size_t f = 0; f < mesh.current_face.size(); ++f) {
            const int cell = mesh.current_face[f].cell;
            if (local[static_cast<size_t>(cell)] < 0) continue;
            const double q = current.value[f] * mesh.current_face[f].area;
            b[local[static_cast<size_t>(cell)]] += q;
            abs_flux += std::abs(q);
        }
        const double imbalance = std::abs(b.sum());
        if (imbalance > 1e-12 * std::max(1.0, abs_flux)) {
            std::ostringstream os;
            os << "solve_current_lifting: incompatible current on the " << region_name(reg)
               << " component (net flux " << b.sum() << ")";
            throw ConfigError(os.str());
        }
        if (abs_flux == 0.0) continue; // zero data: phi stays 0

        const SparseMatrix A = assemble_diffusion_operator(mesh, sigma_face, 0.0, cells);
        // bordered system enforcing the zero-mean gauge
        std::vector<Triplet> trip;
        for (int col = 0; col < A.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(A, col); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int j = 0; j < k; ++j) {
            const double v = mesh.volume[cells[static_cast<size_t>(j)]];
            trip.emplace_back(j, k, v);
            trip.emplace_back(k, j, v);
        }
        SparseMatrix B(k + 1, k + 1);
        B.setFromTriplets(trip.begin(), trip.end());
        B.makeCompressed();

        Vector rhs(k + 1);
        rhs.head(k) = b;
        rhs[k] = 0.0;
        Eigen::SparseLU<SparseMatrix> lu(B);
        if (lu.info() != Eigen::Success)
            throw SolverError("solve_current_lifting: factorization failed");
        Vector sol = lu.solve(rhs);

        double worst = 0.0;
        Vector res = A * sol.head(k) - b;
        for (int j = 0; j < k; ++j)
            worst = std::max(worst, std::abs(res[j]) / mesh.volume[cells[static_cast<size_t>(j)]]);
        if (worst > tolerance * std::max(1.0, abs_flux))
            throw SolverError("solve_current_lifting: residual above tolerance", worst);

        for (int j = 0; j < k; ++j) phi[cells[static_cast<size_t>(j)]] = sol[j];
    }
    return phi;
}

double potential_identity_residual(const Mesh& mesh, const PotentialPair& pair) {
    return region_integral(mesh, pair.phi_e)
           + region_integral(mesh, pair.phi_s, mesh.electrode_cells());
}

LinfBoundCheck linf_bound_check(const Mesh& mesh, const PotentialPair& pair, const Vector& C,
                                const HField& h, double tau, double alpha4, double d,
                                double alpha2, double slack) {
    LinfBoundCheck out;
    double h_norm = 0.0;
    double phi_s_max = 0.0;
    for (int i = 0; i < mesh.n_cells(); ++i) {
        if (!is_electrode(mesh.region[i])) continue;
        const double th = theta_tau(std::max(C[i], 0.0), tau);
        h_norm = std::max(h_norm, std::abs(H_tau(h.value[i], th, 0.0, d, alpha2, tau)));
        phi_s_max = std::max(phi_s_max, std::abs(pair.phi_s[i]));
    }
    out.bound = alpha4 / tau * h_norm;
    out.actual = std::max(pair.phi_e.cwiseAbs().maxCoeff(), phi_s_max);
    out.margin = out.bound + slack - out.actual;
    out.ok = out.margin >= 0.0;
    return out;
}

} // namespace cellspan
