#include "cellspan/config.hpp"

#include "cellspan/elliptic.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace cellspan {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

struct ParsedFile {
    // (section, key) -> entry
    std::map<std::pair<std::string, std::string>, Entry> entries;
    std::vector<std::string> errors;
};

ParsedFile read_key_values(std::istream& in, const std::string& origin) {
    ParsedFile out;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                out.errors.push_back(origin + ":" + std::to_string(lineno)
                                     + ": malformed section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            out.errors.push_back(origin + ":" + std::to_string(lineno)
                                 + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            out.errors.push_back(origin + ":" + std::to_string(lineno) + ": empty key");
            continue;
        }
        auto [it, inserted] = out.entries.insert({{section, key}, Entry{value, lineno, false}});
        if (!inserted)
            out.errors.push_back(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key
                                 + "' in [" + section + "]");
    }
    return out;
}

class Reader {
public:
    Reader(ParsedFile& file, const std::string& origin) : file_(file), origin_(origin) {}

    bool has(const std::string& sec, const std::string& key) {
        return file_.entries.count({sec, key}) > 0;
    }

    template <typename F>
    void get(const std::string& sec, const std::string& key, F&& apply) {
        auto it = file_.entries.find({sec, key});
        if (it == file_.entries.end()) return;
        it->second.used = true;
        try {
            apply(it->second.value);
        } catch (const std::exception& e) {
            file_.errors.push_back(origin_ + ":" + std::to_string(it->second.line) + ": key '"
                                   + key + "': " + e.what());
        }
    }

    void get_double(const std::string& sec, const std::string& key, double& target) {
        get(sec, key, [&](const std::string& v) { target = parse_double(v); });
    }
    void get_int(const std::string& sec, const std::string& key, int& target) {
        get(sec, key, [&](const std::string& v) { target = parse_int(v); });
    }
    void get_bool(const std::string& sec, const std::string& key, bool& target) {
        get(sec, key, [&](const std::string& v) {
            if (v == "true" || v == "1") target = true;
            else if (v == "false" || v == "0") target = false;
            else throw std::runtime_error("expected true/false");
        });
    }
    void get_string(const std::string& sec, const std::string& key, std::string& target) {
        get(sec, key, [&](const std::string& v) { target = v; });
    }

    static double parse_double(const std::string& v) {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::runtime_error("not a number: '" + v + "'");
        return x;
    }
    static int parse_int(const std::string& v) {
        size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::runtime_error("not an integer: '" + v + "'");
        return static_cast<int>(x);
    }
    static std::vector<double> parse_list(const std::string& v) {
        std::vector<double> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
        return out;
    }

    void finish() {
        for (const auto& [sk, entry] : file_.entries) {
            if (!entry.used)
                file_.errors.push_back(origin_ + ":" + std::to_string(entry.line)
                                       + ": unknown key '" + sk.second + "' in [" + sk.first
                                       + "]");
        }
    }

private:
    ParsedFile& file_;
    std::string origin_;
};

RunConfig build(ParsedFile& file, const std::string& origin) {
    RunConfig cfg;
    Reader r(file, origin);

    r.get_double("domain", "L_a", cfg.layout.length_anode);
    r.get_double("domain", "L_s", cfg.layout.length_separator);
    r.get_double("domain", "L_c", cfg.layout.length_cathode);
    r.get_double("domain", "L_y", cfg.layout.transverse_extent);
    r.get_int("domain", "cells_a", cfg.cells[0]);
    r.get_int("domain", "cells_s", cfg.cells[1]);
    r.get_int("domain", "cells_c", cfg.cells[2]);
    r.get_int("domain", "cells_y", cfg.cells_y);

    PhysParams& p = cfg.params;
    r.get_double("params", "alpha1", p.alpha1);
    r.get_double("params", "alpha2", p.alpha2);
    r.get_double("params", "alpha3", p.alpha3);
    r.get_double("params", "alpha4", p.alpha4);
    r.get_double("params", "K", p.K);
    r.get_double("params", "U", p.U);
    r.get_double("params", "sigma_a", p.sigma_anode);
    r.get_double("params", "sigma_c", p.sigma_cathode);
    r.get("params", "eps_e", [&](const std::string& v) {
        p.eps_e_anode = p.eps_e_separator = p.eps_e_cathode = Reader::parse_double(v);
    });
    r.get_double("params", "eps_e_a", p.eps_e_anode);
    r.get_double("params", "eps_e_s", p.eps_e_separator);
    r.get_double("params", "eps_e_c", p.eps_e_cathode);
    r.get("params", "D", [&](const std::string& v) {
        p.D_anode = p.D_separator = p.D_cathode = Reader::parse_double(v);
    });
    r.get_double("params", "D_a", p.D_anode);
    r.get_double("params", "D_s", p.D_separator);
    r.get_double("params", "D_c", p.D_cathode);

    std::string kappa_model = "power_law";
    double kappa_c0 = 1.0, kappa_alpha0 = 1.0, kappa_knee = 1.0;
    r.get_string("params", "kappa.model", kappa_model);
    r.get_double("params", "kappa.c0", kappa_c0);
    r.get_double("params", "kappa.alpha0", kappa_alpha0);
    r.get_double("params", "kappa.knee", kappa_knee);
    std::vector<double> kappa_s, kappa_v;
    r.get("params", "kappa.table_s", [&](const std::string& v) { kappa_s = Reader::parse_list(v); });
    r.get("params", "kappa.table_kappa",
          [&](const std::string& v) { kappa_v = Reader::parse_list(v); });

    r.get("params", "C0", [&](const std::string& v) {
        p.C0_anode = p.C0_separator = p.C0_cathode = Reader::parse_double(v);
    });
    r.get_double("params", "C0_a", p.C0_anode);
    r.get_double("params", "C0_s", p.C0_separator);
    r.get_double("params", "C0_c", p.C0_cathode);

    // d is derived from alpha1 * alpha2; an explicit d re-derives alpha1
    bool d_given = false;
    double d_value = 0.0;
    r.get("params", "d", [&](const std::string& v) {
        d_value = Reader::parse_double(v);
        d_given = true;
    });
    if (d_given) {
        p.d = d_value;
        if (p.alpha2 != 0.0) p.alpha1 = d_value / p.alpha2;
    } else {
        p.d = p.alpha1 * p.alpha2;
    }
    r.get_bool("params", "require_positivity", p.require_positivity);

    r.get("params", "h", [&](const std::string& v) {
        cfg.h_anode = cfg.h_cathode = Reader::parse_double(v);
    });
    r.get_double("params", "h_a", cfg.h_anode);
    r.get_double("params", "h_c", cfg.h_cathode);
    std::string h_mode = "constant";
    r.get_string("params", "h.mode", h_mode);
    r.get_double("params", "I.gamma_a", cfg.I_gamma_a);
    r.get_double("params", "I.interface_a", cfg.I_interface_a);
    r.get_double("params", "I.interface_c", cfg.I_interface_c);
    r.get_double("params", "I.gamma_c", cfg.I_gamma_c);

    r.get_double("regularization", "tau", cfg.tau);
    r.get("regularization", "tau_schedule",
          [&](const std::string& v) { cfg.tau_schedule = Reader::parse_list(v); });

    r.get_double("time", "dt", cfg.dt);
    r.get_double("time", "T_end", cfg.T_end);
    r.get_int("time", "output_stride", cfg.output_stride);

    r.get_double("solver", "tol_elliptic", cfg.settings.elliptic.tolerance);
    r.get_double("solver", "linear_tol", cfg.settings.elliptic.linear_tolerance);
    r.get_double("solver", "damping", cfg.settings.elliptic.damping);
    r.get_int("solver", "max_newton", cfg.settings.max_newton);
    r.get("solver", "max_newton_elliptic", [&](const std::string& v) {
        cfg.settings.elliptic.max_iterations = Reader::parse_int(v);
    });
    r.get_double("solver", "tol_parabolic", cfg.settings.parabolic_tolerance);
    r.get_double("solver", "tol_outer", cfg.settings.outer_tolerance);
    r.get_int("solver", "max_outer", cfg.settings.max_outer);
    r.get_double("solver", "relaxation", cfg.settings.relaxation);
    r.get_bool("solver", "verification_mode", cfg.verification_mode);

    r.get_int("apriori", "N", cfg.apriori.N);
    r.get_double("apriori", "q", cfg.apriori.q);
    r.get_double("apriori", "c", cfg.apriori.c);
    r.get_double("apriori", "m", cfg.apriori.m);
    r.get("apriori", "d", [&](const std::string& v) {
        cfg.apriori.d = Reader::parse_double(v);
        cfg.apriori_d_set = true;
    });
    r.get("apriori", "alpha0", [&](const std::string& v) {
        cfg.apriori.alpha0 = Reader::parse_double(v);
        cfg.apriori_alpha0_set = true;
    });

    r.get_string("output", "dir", cfg.out_dir);

    r.finish();

    if (kappa_model == "power_law") {
        p.kappa = KappaModel::power_law(kappa_c0, kappa_alpha0, kappa_knee);
    } else if (kappa_model == "table") {
        if (kappa_s.empty() || kappa_v.empty())
            file.errors.push_back(origin + ": kappa.model = table needs kappa.table_s and kappa.table_kappa");
        else
            p.kappa = KappaModel::tabulated(kappa_s, kappa_v, kappa_c0, kappa_alpha0, kappa_knee);
    } else {
        file.errors.push_back(origin + ": unknown kappa.model '" + kappa_model + "'");
    }

    if (h_mode == "constant") {
        cfg.h_mode = RunConfig::HMode::constant;
    } else if (h_mode == "lifting") {
        cfg.h_mode = RunConfig::HMode::lifting;
    } else {
        file.errors.push_back(origin + ": unknown h.mode '" + h_mode + "'");
    }

    cfg.settings.max_newton = std::max(cfg.settings.max_newton, 1);
    if (!file.errors.empty()) throw ConfigError(file.errors);

    auto violations = validate(cfg.params, cfg.layout);
    if (!(cfg.tau > 0.0) || !(cfg.tau < 1.0)) violations.push_back("tau must lie in (0,1)");
    if (!(cfg.dt > 0.0)) violations.push_back("dt must be > 0");
    if (!(cfg.T_end > 0.0)) violations.push_back("T_end must be > 0");
    if (cfg.output_stride < 1) violations.push_back("output_stride must be >= 1");
    auto apriori_errors = make_apriori(cfg).check();
    violations.insert(violations.end(), apriori_errors.begin(), apriori_errors.end());
    if (!violations.empty()) throw ConfigError(violations);
    return cfg;
}

} // namespace

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    ParsedFile file = read_key_values(in, path);
    return build(file, path);
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    ParsedFile file = read_key_values(in, origin);
    return build(file, origin);
}

SimulationSetup make_setup(const RunConfig& config) {
    SimulationSetup setup;
    setup.mesh = build_layered_mesh(config.layout, config.cells, config.cells_y);
    setup.params = config.params;
    if (config.h_mode == RunConfig::HMode::constant) {
        setup.h = HField::per_region(setup.mesh, config.h_anode, config.h_cathode,
                                     config.params.K);
    } else {
        BoundaryCurrent I = BoundaryCurrent::per_label(setup.mesh, config.I_gamma_a,
                                                       config.I_interface_a, config.I_interface_c,
                                                       config.I_gamma_c);
        I.check_compatibility(setup.mesh);
        const Vector phi = solve_current_lifting(setup.mesh, config.params, I);
        setup.h = HField::from_potential(setup.mesh, phi, config.params.U, config.params.alpha2,
                                         config.params.K);
    }
    setup.tau = config.tau;
    setup.dt = config.dt;
    setup.T_end = config.T_end;
    setup.output_stride = config.output_stride;
    setup.settings = config.settings;
    setup.verification_mode = config.verification_mode;
    return setup;
}

AprioriParams make_apriori(const RunConfig& config) {
    AprioriParams a = config.apriori;
    if (!config.apriori_d_set) a.d = config.params.d;
    if (!config.apriori_alpha0_set) a.alpha0 = config.params.kappa.alpha0;
    return a;
}

} // namespace cellspan
