#ifndef CELLSPAN_PARAMS_HPP
#define CELLSPAN_PARAMS_HPP

#include "cellspan/geometry.hpp"
#include "cellspan/types.hpp"

#include <functional>
#include <optional>

namespace cellspan {

/// Electrolyte conductivity model kappa: [0,inf) -> [0,inf) with
/// kappa(0) = 0, kappa > 0 for s > 0 and kappa(s) >= c0 s^alpha0 below the
/// knee. Built-ins: the power law itself and a tabulated monotone
/// interpolant.
struct KappaModel {
    std::function<double(double)> eval;
    double c0 = 1.0;
    double alpha0 = 1.0;
    double knee = 1.0; // the lower-bound window [0, knee)

    double operator()(double s) const { return eval(s); }

    static KappaModel power_law(double c0, double alpha0, double knee = 1.0);
    /// Piecewise-linear interpolant through (s_i, kappa_i); requires
    /// s_0 = 0, kappa_0 = 0 and nondecreasing data. Extended by the last
    /// slope beyond the table.
    static KappaModel tabulated(std::vector<double> s, std::vector<double> kappa,
                                double c0, double alpha0, double knee);

    /// Sampled checks of the (H1) properties; returns violations.
    std::vector<std::string> check(int samples = 512) const;
};

/// kappa_tau(s) = kappa(s^+ + tau); strictly positive for tau in (0,1).
double kappa_tau(const KappaModel& model, double s, double tau);

struct PhysParams {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double alpha3 = 1.0;
    double alpha4 = 1.0;
    double d = 1.0; // must equal alpha1 * alpha2
    double K = 3.0; // sup bound for h, >= 1
    double U = 1.0; // constant open-circuit potential
    double sigma_anode = 1.0;
    double sigma_cathode = 1.0;
    double eps_e_anode = 1.0;
    double eps_e_separator = 1.0;
    double eps_e_cathode = 1.0;
    double D_anode = 1.0;
    double D_separator = 1.0;
    double D_cathode = 1.0;
    KappaModel kappa = KappaModel::power_law(1.0, 1.0);
    double C0_anode = 1.0;
    double C0_separator = 1.0;
    double C0_cathode = 1.0;
    bool require_positivity = true; // demands (H8) d > 1/2

    double sigma(Region r) const;
    double eps_e(Region r) const;
    double D(Region r) const;
    double C0(Region r) const;

    Vector expand_eps_e(const Mesh& mesh) const;
    Vector expand_D(const Mesh& mesh) const;
    Vector expand_C0(const Mesh& mesh) const;
};

/// Checks hypotheses (H1)-(H9) plus internal consistency; empty result
/// means valid. Every violation is reported under its hypothesis name.
std::vector<std::string> validate(const PhysParams& params, const DomainLayout& layout);
/// Same, but throws ConfigError with the full list.
void validate_or_throw(const PhysParams& params, const DomainLayout& layout);

/// Cell values of h on Omega' (stored over all of Omega; 1 on the
/// separator where it is never read). Bounded via 1/K <= h <= K.
struct HField {
    Vector value;

    static HField constant(const Mesh& mesh, double h, double K);
    static HField per_region(const Mesh& mesh, double h_anode, double h_cathode, double K);
    /// h = exp(alpha2 (phi - U)) per electrode cell; throws if the bound
    /// 1/K <= h <= K fails, naming the first offending cell.
    static HField from_potential(const Mesh& mesh, const Vector& phi, double U, double alpha2,
                                 double K);
};

/// Applied current density per designated face of the mesh, positive into
/// the electrode. Compatibility: the external faces (gamma_a, gamma_c)
/// must integrate to zero.
struct BoundaryCurrent {
    std::vector<double> value; // parallel to mesh.current_face

    static BoundaryCurrent zero(const Mesh& mesh);
    static BoundaryCurrent per_label(const Mesh& mesh, double gamma_a, double interface_anode,
                                     double interface_cathode, double gamma_c);

    /// |sum over gamma_a + gamma_c| relative to the total |I| dS.
    double external_imbalance(const Mesh& mesh) const;
    /// Throws if the external compatibility integral exceeds 1e-12 relative.
    void check_compatibility(const Mesh& mesh) const;
};

} // namespace cellspan

#endif
