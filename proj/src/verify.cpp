#include "cellspan/verify.hpp"

#include "cellspan/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace cellspan {

double MMSCase::phis_value(double x, double t) const {
    const double a_end = layout.length_anode;
    const double c_start = layout.length_anode + layout.length_separator;
    if (x < a_end) return phis_anode.v(x, t);
    if (x > c_start) return phis_cathode.v(x, t);
    return 0.0;
}

namespace {

PhysParams mms_params() {
    PhysParams p;
    p.alpha1 = p.alpha2 = p.alpha3 = p.alpha4 = 1.0;
    p.d = 1.0;
    p.K = 3.0;
    p.U = 1.0;
    p.kappa = KappaModel::power_law(1.0, 1.0, 1.0);
    return p;
}

// (1/2) alpha4 sqrt(C) G(1, C, u) with the case parameters
double mms_kinetics(const PhysParams& p, double C, double u) {
    return 0.5 * p.alpha4 * std::sqrt(C) * G(1.0, C, u, p.d, p.alpha2);
}

MMSCase base_case() {
    MMSCase mms;
    mms.layout = {1.0, 0.5, 1.0};
    mms.params = mms_params();
    mms.tau = 1e-3;

    const double L = mms.layout.total_length();
    const double w = M_PI / L;
    mms.C_exact = {
        [w](double x, double t) { return 2.0 + std::cos(w * x) * std::exp(-t); },
        [w](double x, double t) { return -w * std::sin(w * x) * std::exp(-t); },
        [w](double x, double t) { return -w * w * std::cos(w * x) * std::exp(-t); },
        [w](double x, double t) { return -std::cos(w * x) * std::exp(-t); },
    };
    mms.phie_exact = {
        [w](double x, double t) { return 0.3 * std::cos(w * x) * (1.0 + 0.5 * std::exp(-t)); },
        [w](double x, double t) { return -0.3 * w * std::sin(w * x) * (1.0 + 0.5 * std::exp(-t)); },
        [w](double x, double t) { return -0.3 * w * w * std::cos(w * x) * (1.0 + 0.5 * std::exp(-t)); },
        [w](double x, double t) { return -0.15 * std::cos(w * x) * std::exp(-t); },
    };
    const double wa = M_PI / mms.layout.length_anode;
    mms.phis_anode = {
        [wa](double x, double t) { return 0.2 * std::cos(wa * x) * (1.0 + 0.5 * std::exp(-t)); },
        [wa](double x, double t) { return -0.2 * wa * std::sin(wa * x) * (1.0 + 0.5 * std::exp(-t)); },
        [wa](double x, double t) { return -0.2 * wa * wa * std::cos(wa * x) * (1.0 + 0.5 * std::exp(-t)); },
        [wa](double x, double t) { return -0.1 * std::cos(wa * x) * std::exp(-t); },
    };
    const double xc = mms.layout.length_anode + mms.layout.length_separator;
    const double wc = M_PI / mms.layout.length_cathode;
    mms.phis_cathode = {
        [wc, xc](double x, double t) { return -0.25 * std::cos(wc * (x - xc)) * (1.0 + 0.5 * std::exp(-t)); },
        [wc, xc](double x, double t) { return 0.25 * wc * std::sin(wc * (x - xc)) * (1.0 + 0.5 * std::exp(-t)); },
        [wc, xc](double x, double t) { return 0.25 * wc * wc * std::cos(wc * (x - xc)) * (1.0 + 0.5 * std::exp(-t)); },
        [wc, xc](double x, double t) { return -0.125 * std::cos(wc * (x - xc)) * std::exp(-t); },
    };

    // induced forcings; in the separator the kinetic term drops out and
    // phi_s has no equation
    const double a_end = mms.layout.length_anode;
    const double c_start = xc;
    const PhysParams p = mms.params;
    const double tau = mms.tau;

    auto C = mms.C_exact;
    auto pe = mms.phie_exact;
    auto psa = mms.phis_anode;
    auto psc = mms.phis_cathode;
    auto phis_at = [a_end, c_start, psa, psc](double x, double t) -> double {
        if (x < a_end) return psa.v(x, t);
        if (x > c_start) return psc.v(x, t);
        return 0.0;
    };
    auto kin_at = [p, C, pe, phis_at, a_end, c_start](double x, double t) -> double {
        if (x >= a_end && x <= c_start) return 0.0;
        return mms_kinetics(p, C.v(x, t), phis_at(x, t) - pe.v(x, t));
    };

    mms.forcing.f_e = [p, tau, C, pe, kin_at](double x, double /*y*/, double t) {
        // kappa(C) = c0 C^alpha0 with alpha0 = 1
        const double flux_div = p.kappa.c0 * (C.dx(x, t) * pe.dx(x, t) + C.v(x, t) * pe.dxx(x, t));
        return -flux_div + tau * pe.v(x, t) - kin_at(x, t);
    };
    mms.forcing.f_s = [p, tau, a_end, c_start, psa, psc, kin_at](double x, double /*y*/, double t) {
        const ScalarField1D& ps = x < a_end ? psa : psc;
        if (x >= a_end && x <= c_start) return 0.0;
        const double sigma = x < a_end ? p.sigma_anode : p.sigma_cathode;
        return -sigma * ps.dxx(x, t) + tau * ps.v(x, t) + kin_at(x, t);
    };
    mms.forcing.f_c = [p, C, kin_at](double x, double /*y*/, double t) {
        const double D = p.D_anode; // uniform D across regions in this case
        return p.eps_e_anode * C.dt(x, t) - D * C.dxx(x, t) - p.alpha3 * kin_at(x, t);
    };

    mms.settings.elliptic.tolerance = 1e-12;
    mms.settings.parabolic_tolerance = 1e-12;
    mms.settings.outer_tolerance = 1e-11;
    return mms;
}

} // namespace

MMSCase default_mms_spatial_case() {
    MMSCase mms = base_case();
    mms.name = "smooth-trig spatial refinement";
    mms.refinement = MMSCase::Refinement::space;
    mms.cell_levels = {{16, 8, 16}, {32, 16, 32}, {64, 32, 64}};
    mms.dt_levels = {2e-6};
    mms.T_final = 0.01;
    return mms;
}

MMSCase default_mms_temporal_case() {
    MMSCase mms = base_case();
    mms.name = "smooth-trig dt refinement";
    mms.refinement = MMSCase::Refinement::time;
    mms.cell_levels = {{48, 24, 48}};
    mms.dt_levels = {0.04, 0.02, 0.01};
    mms.T_final = 0.4;
    return mms;
}

MMSCase default_mms_constant_case() {
    MMSCase mms = base_case();
    mms.name = "exact constant equilibrium";
    auto zero2 = [](double, double) { return 0.0; };
    auto one2 = [](double, double) { return 1.0; };
    mms.C_exact = {one2, zero2, zero2, zero2};
    mms.phie_exact = {zero2, zero2, zero2, zero2};
    mms.phis_anode = {zero2, zero2, zero2, zero2};
    mms.phis_cathode = {zero2, zero2, zero2, zero2};
    auto zero3 = [](double, double, double) { return 0.0; };
    mms.forcing.f_e = zero3;
    mms.forcing.f_s = zero3;
    mms.forcing.f_c = zero3;
    mms.refinement = MMSCase::Refinement::space;
    mms.cell_levels = {{8, 4, 8}};
    mms.dt_levels = {1e-3};
    mms.T_final = 1e-2;
    return mms;
}

double mms_forcing_selfcheck(const MMSCase& mms, int n_points, unsigned seed) {
    std::mt19937 rng(seed);
    const double a_end = mms.layout.length_anode;
    const double c_start = a_end + mms.layout.length_separator;
    const double L = mms.layout.total_length();
    const double hx = 1e-2;
    const double ht = 1e-3;
    const double margin = 4.0 * hx;
    const PhysParams& p = mms.params;

    // 6th-order stencils over the value closures only
    auto d1 = [&](const std::function<double(double)>& f, double x) {
        return (-f(x - 3 * hx) + 9 * f(x - 2 * hx) - 45 * f(x - hx) + 45 * f(x + hx)
                - 9 * f(x + 2 * hx) + f(x + 3 * hx))
               / (60 * hx);
    };
    auto d2 = [&](const std::function<double(double)>& f, double x) {
        return (2 * f(x - 3 * hx) - 27 * f(x - 2 * hx) + 270 * f(x - hx) - 490 * f(x)
                + 270 * f(x + hx) - 27 * f(x + 2 * hx) + 2 * f(x + 3 * hx))
               / (180 * hx * hx);
    };

    std::uniform_real_distribution<double> pick_t(2 * ht, std::max(mms.T_final - 2 * ht, 4 * ht));
    std::uniform_int_distribution<int> pick_region(0, 2);
    double worst = 0.0;
    for (int k = 0; k < n_points; ++k) {
        const int reg = pick_region(rng);
        double lo = 0.0, hi = a_end;
        if (reg == 1) { lo = a_end; hi = c_start; }
        if (reg == 2) { lo = c_start; hi = L; }
        std::uniform_real_distribution<double> pick_x(lo + margin, hi - margin);
        const double x = pick_x(rng);
        const double t = pick_t(rng);
        const bool electrode = reg != 1;

        auto Cf = [&](double xx) { return mms.C_exact.v(xx, t); };
        auto PEf = [&](double xx) { return mms.phie_exact.v(xx, t); };
        auto Ct = [&](double tt) { return mms.C_exact.v(x, tt); };
        auto kapC = [&](double xx) { return p.kappa(mms.C_exact.v(xx, t)); };

        const double Cv = Cf(x);
        const double u = mms.phis_value(x, t) - PEf(x);
        const double kin = electrode ? mms_kinetics(p, Cv, u) : 0.0;

        // electrolyte potential equation
        const double div_e = d1(kapC, x) * d1(PEf, x) + kapC(x) * d2(PEf, x);
        const double re = -div_e + mms.tau * PEf(x) - kin
                          - mms.forcing.f_e(x, 0.0, t);
        worst = std::max(worst, std::abs(re));

        // solid potential equation (electrodes only)
        if (electrode) {
            auto PSf = [&](double xx) { return mms.phis_value(xx, t); };
            const double sigma = reg == 0 ? p.sigma_anode : p.sigma_cathode;
            const double rs = -sigma * d2(PSf, x) + mms.tau * PSf(x) + kin
                              - mms.forcing.f_s(x, 0.0, t);
            worst = std::max(worst, std::abs(rs));
        }

        // concentration equation
        const double dCdt = (-Ct(t + 2 * ht) + 8 * Ct(t + ht) - 8 * Ct(t - ht) + Ct(t - 2 * ht))
                            / (12 * ht);
        const double D = reg == 0 ? p.D_anode : (reg == 1 ? p.D_separator : p.D_cathode);
        const double eps = reg == 0 ? p.eps_e_anode : (reg == 1 ? p.eps_e_separator : p.eps_e_cathode);
        const double rc = eps * dCdt - D * d2(Cf, x) - p.alpha3 * kin
                          - mms.forcing.f_c(x, 0.0, t);
        worst = std::max(worst, std::abs(rc));
    }
    return worst;
}

ConvergenceTable run_mms(const MMSCase& mms) {
    ConvergenceTable table;
    const size_t n_levels = std::max(mms.cell_levels.size(), mms.dt_levels.size());
    for (size_t level = 0; level < n_levels; ++level) {
        const auto cells = mms.cell_levels[std::min(level, mms.cell_levels.size() - 1)];
        const double dt = mms.dt_levels[std::min(level, mms.dt_levels.size() - 1)];

        SimulationSetup setup;
        setup.mesh = build_layered_mesh(mms.layout, cells);
        setup.params = mms.params;
        setup.h = HField::constant(setup.mesh, 1.0, mms.params.K);
        setup.tau = mms.tau;
        setup.dt = dt;
        setup.T_end = mms.T_final;
        setup.output_stride = 1 << 30;
        setup.settings = mms.settings;
        setup.verification_mode = true;
        setup.check_invariants = false;
        setup.forcing = &mms.forcing;

        Vector C0(setup.mesh.n_cells());
        for (int i = 0; i < setup.mesh.n_cells(); ++i)
            C0[i] = mms.C_exact.v(setup.mesh.center_x[i], 0.0);
        setup.C0_override = C0;

        SimulationResult result = simulate(setup);
        if (!result.completed) {
            table.completed = false;
            table.error = "level " + std::to_string(level) + ": " + result.error;
            return table;
        }

        const FieldState& fin = result.trajectory.states.back();
        const Mesh& mesh = setup.mesh;
        ConvergenceRow row;
        row.dt = dt;
        row.h = mesh.volume.maxCoeff(); // cell width in 1D
        double l2c = 0, l2e = 0, l2s = 0;
        for (int i = 0; i < mesh.n_cells(); ++i) {
            const double x = mesh.center_x[i];
            const double ec = fin.C[i] - mms.C_exact.v(x, fin.t);
            const double ee = fin.pair.phi_e[i] - mms.phie_exact.v(x, fin.t);
            l2c += mesh.volume[i] * ec * ec;
            l2e += mesh.volume[i] * ee * ee;
            row.linf_C = std::max(row.linf_C, std::abs(ec));
            row.linf_phie = std::max(row.linf_phie, std::abs(ee));
            if (is_electrode(mesh.region[i])) {
                const double es = fin.pair.phi_s[i] - mms.phis_value(x, fin.t);
                l2s += mesh.volume[i] * es * es;
                row.linf_phis = std::max(row.linf_phis, std::abs(es));
            }
        }
        row.l2_C = std::sqrt(l2c);
        row.l2_phie = std::sqrt(l2e);
        row.l2_phis = std::sqrt(l2s);

        if (!table.rows.empty()) {
            const ConvergenceRow& prev = table.rows.back();
            const double ratio = mms.refinement == MMSCase::Refinement::space ? prev.h / row.h
                                                                              : prev.dt / row.dt;
            const double lr = std::log(ratio);
            row.order_C = std::log(prev.l2_C / row.l2_C) / lr;
            row.order_phie = std::log(prev.l2_phie / row.l2_phie) / lr;
            row.order_phis = std::log(prev.l2_phis / row.l2_phis) / lr;
        }
        table.rows.push_back(row);
    }
    return table;
}

double equilibrium_preservation(const SimulationSetup& setup) {
    SimulationResult result = simulate(setup);
    if (!result.completed)
        throw SolverError("equilibrium_preservation: run failed: " + result.error);
    const Vector& C0 = result.trajectory.states.front().C;
    double drift = 0.0;
    for (const auto& s : result.trajectory.states)
        drift = std::max(drift, (s.C - C0).cwiseAbs().maxCoeff());
    return drift;
}

double uniqueness_sweep(const SimulationSetup& setup, int n_guesses, unsigned seed) {
    if (n_guesses < 2) throw ConfigError("uniqueness_sweep: need at least 2 guesses");
    const Mesh& mesh = setup.mesh;
    const Vector C = setup.C0_override ? *setup.C0_override : setup.params.expand_C0(mesh);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> pick(-5.0, 5.0);

    std::vector<PotentialPair> solutions;
    for (int g = 0; g < n_guesses; ++g) {
        PotentialPair guess = PotentialPair::zero(mesh);
        for (int i = 0; i < mesh.n_cells(); ++i) {
            guess.phi_e[i] = pick(rng);
            if (is_electrode(mesh.region[i])) guess.phi_s[i] = pick(rng);
        }
        solutions.push_back(solve_potential_pair(mesh, setup.params, C, setup.h, setup.tau, guess,
                                                 setup.settings.elliptic, nullptr, nullptr,
                                                 setup.verification_mode));
    }
    double worst = 0.0;
    for (size_t a = 0; a < solutions.size(); ++a) {
        for (size_t b = a + 1; b < solutions.size(); ++b) {
            worst = std::max(worst,
                             (solutions[a].phi_e - solutions[b].phi_e).cwiseAbs().maxCoeff());
            worst = std::max(worst,
                             (solutions[a].phi_s - solutions[b].phi_s).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

InvariantSweepReport invariant_sweep(const Mesh& mesh, const Trajectory& traj,
                                     const PhysParams& params, const HField& h, double tau,
                                     bool verification_mode, bool has_forcing) {
    InvariantSweepReport report;

    InvariantEntry nonneg{"nonnegativity", true, std::numeric_limits<double>::infinity(), 0.0};
    InvariantEntry identity{"potential_identity", true, std::numeric_limits<double>::infinity(), 0.0};
    InvariantEntry linf{"linf_potential_bound", true, std::numeric_limits<double>::infinity(), 0.0};
    InvariantEntry mass{"mass_balance", true, std::numeric_limits<double>::infinity(), 0.0};

    const double omega = mesh.measure();
    for (const auto& s : traj.states) {
        const double margin_n = s.C.minCoeff() + 1e-12;
        if (margin_n < nonneg.worst_margin) {
            nonneg.worst_margin = margin_n;
            nonneg.worst_time = s.t;
        }
        if (!has_forcing) {
            const double phi_max = std::max(s.pair.phi_e.cwiseAbs().maxCoeff(),
                                            s.pair.phi_s.cwiseAbs().maxCoeff());
            const double threshold = potential_identity_tolerance(omega, phi_max, tau);
            const double margin_i = threshold - std::abs(potential_identity_residual(mesh, s.pair));
            if (margin_i < identity.worst_margin) {
                identity.worst_margin = margin_i;
                identity.worst_time = s.t;
            }
        }
        if (!verification_mode) {
            const auto chk = linf_bound_check(mesh, s.pair, s.C, h, tau, params.alpha4, params.d,
                                              params.alpha2);
            if (chk.margin < linf.worst_margin) {
                linf.worst_margin = chk.margin;
                linf.worst_time = s.t;
            }
        }
    }
    for (const auto& d : traj.diagnostics) {
        const double margin_m = 1e-10 - d.mass_balance;
        if (margin_m < mass.worst_margin) {
            mass.worst_margin = margin_m;
            mass.worst_time = d.t;
        }
    }

    nonneg.pass = nonneg.worst_margin >= 0.0;
    identity.pass = identity.worst_margin >= 0.0;
    linf.pass = linf.worst_margin >= 0.0;
    mass.pass = mass.worst_margin >= 0.0;

    report.entries.push_back(nonneg);
    if (!has_forcing) report.entries.push_back(identity);
    if (!verification_mode) report.entries.push_back(linf);
    report.entries.push_back(mass);
    report.all_pass = true;
    for (const auto& e : report.entries) report.all_pass = report.all_pass && e.pass;
    return report;
}

} // namespace cellspan
