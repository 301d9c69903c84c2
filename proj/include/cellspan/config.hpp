#ifndef CELLSPAN_CONFIG_HPP
#define CELLSPAN_CONFIG_HPP

#include "cellspan/lifespan.hpp"
#include "cellspan/parabolic.hpp"
#include "cellspan/params.hpp"

#include <array>
#include <optional>
#include <string>

namespace cellspan {

/// Parsed run configuration: flat key=value sections, strict about unknown
/// keys.
struct RunConfig {
    DomainLayout layout;
    std::array<int, 3> cells = {120, 60, 120};
    int cells_y = 1;

    PhysParams params;

    // h source: constant / per-region value, or lifted from an applied current
    enum class HMode { constant, lifting };
    HMode h_mode = HMode::constant;
    double h_anode = 1.0;
    double h_cathode = 1.0;
    double I_gamma_a = 0.0, I_interface_a = 0.0, I_interface_c = 0.0, I_gamma_c = 0.0;

    double tau = 1e-3;
    std::vector<double> tau_schedule;

    double dt = 1e-5;
    double T_end = 1e-3;
    int output_stride = 1;

    SolverSettings settings;
    bool verification_mode = false;

    AprioriParams apriori;
    bool apriori_d_set = false;
    bool apriori_alpha0_set = false;

    std::string out_dir = "out";
};

/// Parses and validates; throws ConfigError carrying every named violation
/// with line numbers.
RunConfig parse_config(const std::string& path);

/// Same, from in-memory text (used by tests).
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<memory>");

/// Builds the simulation inputs (mesh, expanded h, solver settings).
SimulationSetup make_setup(const RunConfig& config);

/// Lifespan inputs; d and alpha0 default to the physical parameters unless
/// the [apriori] section overrides them.
AprioriParams make_apriori(const RunConfig& config);

} // namespace cellspan

#endif
