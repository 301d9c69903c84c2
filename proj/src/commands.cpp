#include "cellspan/cli.hpp"

#include "cellspan/reaction.hpp"
#include "cellspan/verify.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace cellspan {

namespace fs = std::filesystem;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

int log_verbosity() {
    static const int level = [] {
        const char* env = std::getenv("CELLSPAN_LOG");
        if (!env) return 1;
        const std::string v(env);
        if (v == "debug") return 2;
        if (v == "info") return 1;
        if (v == "warn" || v == "error") return 0;
        if (v == "quiet" || v == "off") return -1;
        return 1;
    }();
    return level;
}

void info(const std::string& msg) {
    if (log_verbosity() >= 1) std::cerr << "cellspan: " << msg << "\n";
}

double source_value(const SimulationSetup& setup, const FieldState& s, int i) {
    if (!is_electrode(setup.mesh.region[i])) return 0.0;
    const double u = s.pair.phi_s[i] - s.pair.phi_e[i];
    const PhysParams& p = setup.params;
    if (setup.verification_mode) {
        if (!(s.C[i] > 0.0)) return 0.0;
        return 0.5 * p.alpha4 * std::sqrt(s.C[i]) * G(setup.h.value[i], s.C[i], u, p.d, p.alpha2);
    }
    return 0.5 * p.alpha4 * H_tau(setup.h.value[i], s.C[i], u, p.d, p.alpha2, setup.tau);
}

void write_fields_csv(const fs::path& path, const SimulationSetup& setup, const Trajectory& traj) {
    std::ofstream out(path);
    out << "t,x,region,C,phi_e,phi_s,S_e\n";
    for (const auto& s : traj.states) {
        for (int i = 0; i < setup.mesh.n_cells(); ++i) {
            out << fmt17(s.t) << ',' << fmt17(setup.mesh.center_x[i]) << ','
                << region_name(setup.mesh.region[i]) << ',' << fmt17(s.C[i]) << ','
                << fmt17(s.pair.phi_e[i]) << ','
                << fmt17(is_electrode(setup.mesh.region[i]) ? s.pair.phi_s[i] : 0.0) << ','
                << fmt17(source_value(setup, s, i)) << '\n';
        }
    }
}

void write_diagnostics_csv(const fs::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    out << "t,outer_iters,elliptic_residual,parabolic_residual,min_C,max_C,amplitude,"
           "identity_residual,mass_balance,linf_margin\n";
    for (const auto& d : traj.diagnostics) {
        out << fmt17(d.t) << ',' << d.outer_iterations << ',' << fmt17(d.elliptic_residual) << ','
            << fmt17(d.parabolic_residual) << ',' << fmt17(d.min_C) << ',' << fmt17(d.max_C) << ','
            << fmt17(d.amplitude) << ',' << fmt17(d.identity_residual) << ','
            << fmt17(d.mass_balance) << ',' << fmt17(d.linf_margin) << '\n';
    }
}

void write_lifespan_txt(const fs::path& path, const AprioriParams& a, const LifespanReport& r) {
    std::ofstream out(path);
    out << "N = " << a.N << "\n";
    out << "q = " << fmt17(a.q) << "\n";
    out << "d = " << fmt17(a.d) << "\n";
    out << "alpha0 = " << fmt17(a.alpha0) << "\n";
    out << "c = " << fmt17(a.c) << "\n";
    out << "gamma = " << fmt17(r.gamma) << "\n";
    out << "delta = " << fmt17(r.delta) << "\n";
    out << "m = " << fmt17(r.m) << "\n";
    out << "s0 = " << fmt17(r.s0) << "\n";
    out << "eps0 = " << fmt17(r.eps0) << "\n";
    out << "log_eps0 = " << fmt17(r.log_eps0) << "\n";
    out << "Tmax = " << fmt17(r.T_max) << "\n";
    out << "s0_residual = " << fmt17(r.s0_residual) << "\n";
    out << "stationarity_f = " << fmt17(r.stationarity_f) << "\n";
    out << "stationarity_fprime = " << fmt17(r.stationarity_fprime) << "\n";
    out << "tmax_residual = " << fmt17(r.tmax_residual) << "\n";
}

// Closed-form a-priori bounds next to the measured extremes, for
// qualitative comparison. The space-time q-norms of exp(+-alpha2 u) are
// accumulated over the recorded states.
void write_bounds_txt(const fs::path& path, const SimulationSetup& setup,
                      const Trajectory& traj, const AprioriParams& apriori) {
    if (traj.states.size() < 2) return;
    const Mesh& mesh = setup.mesh;
    const double alpha2 = setup.params.alpha2;
    double plus_q = 0.0, minus_q = 0.0;
    double max_C = -std::numeric_limits<double>::infinity();
    double max_inv_C = 0.0;
    bool positive = true;
    for (size_t k = 1; k < traj.states.size(); ++k) {
        const FieldState& s = traj.states[k];
        const double w = s.t - traj.states[k - 1].t;
        for (int i = 0; i < mesh.n_cells(); ++i) {
            max_C = std::max(max_C, s.C[i]);
            if (s.C[i] > 0.0)
                max_inv_C = std::max(max_inv_C, 1.0 / s.C[i]);
            else
                positive = false;
            if (!is_electrode(mesh.region[i])) continue;
            const double u = s.pair.phi_s[i] - s.pair.phi_e[i];
            plus_q += w * mesh.volume[i] * std::exp(apriori.q * alpha2 * u);
            minus_q += w * mesh.volume[i] * std::exp(-apriori.q * alpha2 * u);
        }
    }
    const double T = traj.states.back().t;
    const double norm_plus = std::pow(plus_q, 1.0 / apriori.q);
    const double norm_minus = std::pow(minus_q, 1.0 / apriori.q);
    const Vector C0 = setup.C0_override ? *setup.C0_override : setup.params.expand_C0(mesh);
    const double upper = upper_bound_estimate(T, apriori.q, apriori.N, apriori.c, norm_plus,
                                              C0.cwiseAbs().maxCoeff());
    const double lower = lower_bound_estimate(T, apriori.q, apriori.N, apriori.d, apriori.c,
                                              norm_minus, C0.minCoeff());

    std::ofstream out(path);
    out << "T = " << fmt17(T) << "\n";
    out << "exp_norm_plus = " << fmt17(norm_plus) << "\n";
    out << "exp_norm_minus = " << fmt17(norm_minus) << "\n";
    out << "measured_max_C = " << fmt17(max_C) << "\n";
    out << "upper_bound_max_C = " << fmt17(upper) << "\n";
    out << "measured_max_inv_C = " << (positive ? fmt17(max_inv_C) : std::string("inf")) << "\n";
    out << "upper_bound_max_inv_C = " << fmt17(lower) << "\n";
}

int report_invariants(const SimulationSetup& setup, const SimulationResult& result,
                      const fs::path& out_dir) {
    const auto sweep = invariant_sweep(setup.mesh, result.trajectory, setup.params, setup.h,
                                       setup.tau, setup.verification_mode,
                                       setup.forcing != nullptr);
    std::ofstream out(out_dir / "invariants.txt");
    for (const auto& e : sweep.entries) {
        out << e.name << " = " << (e.pass ? "pass" : "FAIL")
            << " (worst margin " << fmt17(e.worst_margin) << " at t = " << fmt17(e.worst_time)
            << ")\n";
        if (!e.pass)
            std::cerr << "invariant failed: " << e.name << " (worst margin "
                      << fmt17(e.worst_margin) << " at t = " << fmt17(e.worst_time) << ")\n";
    }
    if (!result.invariant_failures.empty() || !sweep.all_pass) return exit_invariant_failure;
    return exit_ok;
}

} // namespace

int cmd_run(const RunOptions& options) {
    RunConfig config;
    try {
        config = parse_config(options.config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_solver_failure;
    }
    if (!options.out_dir.empty()) config.out_dir = options.out_dir;
    if (options.verification_mode) config.verification_mode = true;

    fs::path out_dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    try {
        SimulationSetup setup = make_setup(config);
        if (options.tau_continuation) {
            std::vector<double> schedule = config.tau_schedule;
            if (schedule.empty()) schedule = {config.tau, config.tau / 2, config.tau / 4};
            info("tau continuation over " + std::to_string(schedule.size()) + " members");
            const ContinuationResult cont = simulate_continuation(setup, schedule);
            std::ofstream summary(out_dir / "continuation.csv");
            summary << "tau,completed,final_diff_to_next\n";
            int code = exit_ok;
            for (size_t k = 0; k < cont.runs.size(); ++k) {
                fs::path member_dir = out_dir / ("tau_" + std::to_string(k));
                fs::create_directories(member_dir, ec);
                SimulationSetup member = setup;
                member.tau = cont.taus[k];
                write_fields_csv(member_dir / "fields.csv", member, cont.runs[k].trajectory);
                write_diagnostics_csv(member_dir / "diagnostics.csv", cont.runs[k].trajectory);
                summary << fmt17(cont.taus[k]) << ',' << (cont.runs[k].completed ? 1 : 0) << ','
                        << (k < cont.final_state_diffs.size() ? fmt17(cont.final_state_diffs[k])
                                                              : std::string(""))
                        << '\n';
                if (!cont.runs[k].completed) {
                    std::cerr << "solver error (tau = " << cont.taus[k]
                              << "): " << cont.runs[k].error << "\n";
                    code = exit_solver_failure;
                } else {
                    const int member_code = report_invariants(member, cont.runs[k], member_dir);
                    if (member_code != exit_ok && code == exit_ok) code = member_code;
                }
            }
            return code;
        }

        const SimulationResult result = simulate(setup);
        write_fields_csv(out_dir / "fields.csv", setup, result.trajectory);
        write_diagnostics_csv(out_dir / "diagnostics.csv", result.trajectory);
        if (!result.completed) {
            std::cerr << "solver error: " << result.error << "\n";
            return exit_solver_failure;
        }
        write_bounds_txt(out_dir / "bounds.txt", setup, result.trajectory, make_apriori(config));
        info("run finished: " + std::to_string(result.trajectory.states.size())
             + " recorded states");
        return report_invariants(setup, result, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver_failure;
    }
}

int cmd_lifespan(const std::string& config_path, const std::string& out_dir_override) {
    try {
        RunConfig config = parse_config(config_path);
        if (!out_dir_override.empty()) config.out_dir = out_dir_override;
        fs::path out_dir(config.out_dir);
        std::error_code ec;
        fs::create_directories(out_dir, ec);

        const AprioriParams apriori = make_apriori(config);
        const LifespanReport report = lifespan_pipeline(apriori);
        write_lifespan_txt(out_dir / "lifespan.txt", apriori, report);
        std::cout << "gamma = " << fmt17(report.gamma) << "\n"
                  << "delta = " << fmt17(report.delta) << "\n"
                  << "s0 = " << fmt17(report.s0) << "\n"
                  << "eps0 = " << fmt17(report.eps0) << "\n"
                  << "Tmax = " << fmt17(report.T_max) << "\n";
        return exit_ok;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver_failure;
    }
}

int cmd_sweep(const SweepOptions& options) {
    RunConfig config;
    try {
        config = parse_config(options.config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_solver_failure;
    }
    if (options.values.empty()) {
        std::cerr << "error: sweep needs --values\n";
        return exit_solver_failure;
    }
    if (!options.out_dir.empty()) config.out_dir = options.out_dir;

    const AprioriParams base = make_apriori(config);
    std::vector<LifespanReport> reports(options.values.size());
    std::vector<std::exception_ptr> failures(options.values.size());

    auto run_one = [&](size_t k) {
        AprioriParams a = base;
        const double v = options.values[k];
        if (options.axis == "c") a.c = v;
        else if (options.axis == "m") a.m = v;
        else if (options.axis == "alpha0") a.alpha0 = v;
        else if (options.axis == "q") a.q = v;
        else if (options.axis == "N") a.N = static_cast<int>(v);
        else if (options.axis == "d") a.d = v;
        else throw ConfigError("unknown sweep axis '" + options.axis + "'");
        reports[k] = lifespan_pipeline(a);
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (size_t k = 0; k < options.values.size(); ++k) {
            try {
                run_one(k);
            } catch (...) {
                failures[k] = std::current_exception();
            }
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back([&] {
                for (size_t k = next.fetch_add(1); k < options.values.size();
                     k = next.fetch_add(1)) {
                    try {
                        run_one(k);
                    } catch (...) {
                        failures[k] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    fs::path out_dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream out(out_dir / "sweep.csv");
    out << "axis,value,gamma,delta,s0,eps0,Tmax\n";
    int code = exit_ok;
    for (size_t k = 0; k < options.values.size(); ++k) {
        if (failures[k]) {
            try {
                std::rethrow_exception(failures[k]);
            } catch (const std::exception& e) {
                std::cerr << "sweep member " << options.axis << " = " << options.values[k]
                          << " failed: " << e.what() << "\n";
            }
            code = exit_solver_failure;
            continue;
        }
        const LifespanReport& r = reports[k];
        out << options.axis << ',' << fmt17(options.values[k]) << ',' << fmt17(r.gamma) << ','
            << fmt17(r.delta) << ',' << fmt17(r.s0) << ',' << fmt17(r.eps0) << ','
            << fmt17(r.T_max) << '\n';
    }
    return code;
}

namespace {

SimulationSetup small_fixture_setup() {
    RunConfig config;
    config.cells = {20, 10, 20};
    config.layout = {1.0, 0.1, 1.0};
    config.dt = 1e-3;
    config.T_end = 0.1;
    return make_setup(config);
}

struct CaseOutcome {
    std::string name;
    bool pass = false;
    std::string detail;
};

} // namespace

int cmd_verify(const VerifyOptions& options) {
    fs::path out_dir(options.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    auto selected = [&](const std::string& name) {
        return options.case_name == "all" || options.case_name == name;
    };
    std::vector<CaseOutcome> outcomes;

    auto write_table = [&](const fs::path& path, const ConvergenceTable& table) {
        std::ofstream out(path);
        out << "h,dt,l2_C,linf_C,l2_phi_e,linf_phi_e,l2_phi_s,linf_phi_s,order_C,order_phi_e,"
               "order_phi_s\n";
        for (const auto& r : table.rows) {
            out << fmt17(r.h) << ',' << fmt17(r.dt) << ',' << fmt17(r.l2_C) << ','
                << fmt17(r.linf_C) << ',' << fmt17(r.l2_phie) << ',' << fmt17(r.linf_phie) << ','
                << fmt17(r.l2_phis) << ',' << fmt17(r.linf_phis) << ',' << fmt17(r.order_C) << ','
                << fmt17(r.order_phie) << ',' << fmt17(r.order_phis) << '\n';
        }
    };

    try {
        if (selected("mms-spatial")) {
            const MMSCase mms = default_mms_spatial_case();
            const double defect = mms_forcing_selfcheck(mms);
            const ConvergenceTable table = run_mms(mms);
            write_table(out_dir / "mms_spatial.csv", table);
            if (!table.completed) {
                outcomes.push_back({"mms-spatial", false, "aborted: " + table.error});
            } else {
                const ConvergenceRow& last = table.rows.back();
                const bool pass = defect <= 1e-10 && last.order_C >= 1.9 && last.order_C <= 2.1
                                  && last.order_phie >= 1.9 && last.order_phie <= 2.1
                                  && last.order_phis >= 1.9 && last.order_phis <= 2.1;
                outcomes.push_back({"mms-spatial", pass,
                                    "orders C/phi_e/phi_s = " + fmt17(last.order_C) + "/"
                                        + fmt17(last.order_phie) + "/" + fmt17(last.order_phis)
                                        + ", forcing defect " + fmt17(defect)});
            }
        }
        if (selected("mms-temporal")) {
            const MMSCase mms = default_mms_temporal_case();
            const ConvergenceTable table = run_mms(mms);
            write_table(out_dir / "mms_temporal.csv", table);
            if (!table.completed) {
                outcomes.push_back({"mms-temporal", false, "aborted: " + table.error});
            } else {
                const ConvergenceRow& last = table.rows.back();
                const bool pass = last.order_C >= 0.9 && last.order_C <= 1.1;
                outcomes.push_back({"mms-temporal", pass, "order C = " + fmt17(last.order_C)});
            }
        }
        if (selected("mms-constant")) {
            const ConvergenceTable table = run_mms(default_mms_constant_case());
            if (!table.completed || table.rows.empty()) {
                outcomes.push_back({"mms-constant", false, "aborted: " + table.error});
            } else {
                const ConvergenceRow& row = table.rows.front();
                const double worst = std::max({row.linf_C, row.linf_phie, row.linf_phis});
                outcomes.push_back({"mms-constant", worst <= 1e-12, "max error " + fmt17(worst)});
            }
        }
        if (selected("equilibrium")) {
            SimulationSetup setup = small_fixture_setup();
            setup.verification_mode = true;
            const double drift = equilibrium_preservation(setup);
            outcomes.push_back({"equilibrium", drift <= 1e-12, "drift " + fmt17(drift)});
        }
        if (selected("uniqueness")) {
            SimulationSetup setup = small_fixture_setup();
            const double disc = uniqueness_sweep(setup, 10);
            outcomes.push_back({"uniqueness", disc <= 1e-8, "max discrepancy " + fmt17(disc)});
        }
        if (selected("invariants")) {
            SimulationSetup setup = options.config_path.empty()
                                        ? small_fixture_setup()
                                        : make_setup(parse_config(options.config_path));
            const SimulationResult result = simulate(setup);
            if (!result.completed) {
                outcomes.push_back({"invariants", false, "run failed: " + result.error});
            } else {
                const auto sweep = invariant_sweep(setup.mesh, result.trajectory, setup.params,
                                                   setup.h, setup.tau, setup.verification_mode,
                                                   false);
                std::string detail;
                for (const auto& e : sweep.entries)
                    detail += e.name + (e.pass ? " ok; " : " FAIL; ");
                outcomes.push_back({"invariants", sweep.all_pass, detail});
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "verify error: " << e.what() << "\n";
        return exit_invariant_failure;
    }

    if (outcomes.empty()) {
        std::cerr << "error: unknown verify case '" << options.case_name << "'\n";
        return exit_invariant_failure;
    }
    bool all = true;
    for (const auto& o : outcomes) {
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << o.name << ": " << o.detail << "\n";
        all = all && o.pass;
    }
    return all ? exit_ok : exit_invariant_failure;
}

} // namespace cellspan
