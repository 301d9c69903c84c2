#include "cellspan/params.hpp"

#include "cellspan/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cellspan {

KappaModel KappaModel::power_law(double c0, double alpha0, double knee) {
    KappaModel m;
    m.c0 = c0;
    m.alpha0 = alpha0;
    m.knee = knee;
    m.eval = [c0, alpha0](double s) { return s <= 0.0 ? 0.0 : c0 * std::pow(s, alpha0); };
    return m;
}

KappaModel KappaModel::tabulated(std::vector<double> s, std::vector<double> kappa, double c0,
                                 double alpha0, double knee) {
    if (s.size() != kappa.size() || s.size() < 2)
        throw ConfigError("kappa table: need at least two (s, kappa) samples of equal length");
    if (s.front() != 0.0 || kappa.front() != 0.0)
        throw ConfigError("kappa table: first sample must be (0, 0)");
    for (size_t i = 1; i < s.size(); ++i) {
        if (!(s[i] > s[i - 1])) throw ConfigError("kappa table: s samples must increase");
        if (kappa[i] < kappa[i - 1]) throw ConfigError("kappa table: values must be nondecreasing");
    }
    KappaModel m;
    m.c0 = c0;
    m.alpha0 = alpha0;
    m.knee = knee;
    m.eval = [s = std::move(s), kappa = std::move(kappa)](double x) {
        if (x <= 0.0) return 0.0;
        auto it = std::upper_bound(s.begin(), s.end(), x);
        size_t hi = std::min<size_t>(static_cast<size_t>(it - s.begin()), s.size() - 1);
        if (hi == 0) hi = 1;
        const size_t lo = hi - 1;
        const double t = (x - s[lo]) / (s[hi] - s[lo]);
        return kappa[lo] + t * (kappa[hi] - kappa[lo]);
    };
    return m;
}

std::vector<std::string> KappaModel::check(int samples) const {
    std::vector<std::string> errors;
    if (!eval) {
        errors.push_back("(H1) kappa model has no evaluator");
        return errors;
    }
    if (!(c0 > 0.0) || !(alpha0 > 0.0) || !(knee > 0.0)) {
        errors.push_back("(H1) kappa constants c0, alpha0, knee must be > 0");
        return errors;
    }
    if (eval(0.0) != 0.0) errors.push_back("(H1) kappa(0) = 0 violated");
    bool positive = true, lower_bound = true;
    for (int i = 1; i <= samples; ++i) {
        const double s = knee * static_cast<double>(i) / samples;
        const double v = eval(s);
        if (!(v > 0.0)) positive = false;
        if (s < knee && v < c0 * std::pow(s, alpha0) * (1.0 - 1e-12)) lower_bound = false;
    }
    // a few samples beyond the knee as well
    for (int i = 1; i <= 8; ++i) {
        if (!(eval(knee * (1.0 + i)) > 0.0)) positive = false;
    }
    if (!positive) errors.push_back("(H1) kappa(s) > 0 for s > 0 violated");
    if (!lower_bound) errors.push_back("(H1) kappa(s) >= c0 s^alpha0 on [0, knee) violated");
    // sampled modulus of continuity
    double max_jump = 0.0;
    const double h = knee / samples;
    for (int i = 0; i < samples; ++i) {
        const double a = eval(i * h), b = eval((i + 1) * h);
        max_jump = std::max(max_jump, std::abs(b - a));
    }
    const double scale = std::max(1.0, std::abs(eval(knee)));
    if (max_jump > 0.25 * scale)
        errors.push_back("(H1) kappa continuity check failed (large jump on sampling grid)");
    return errors;
}

double kappa_tau(const KappaModel& model, double s, double tau) {
    require_unit_interval_tau(tau);
    return model.eval(std::max(s, 0.0) + tau);
}

double PhysParams::sigma(Region r) const {
    return r == Region::anode ? sigma_anode : sigma_cathode;
}

double PhysParams::eps_e(Region r) const {
    switch (r) {
    case Region::anode: return eps_e_anode;
    case Region::separator: return eps_e_separator;
    default: return eps_e_cathode;
    }
}

double PhysParams::D(Region r) const {
    switch (r) {
    case Region::anode: return D_anode;
    case Region::separator: return D_separator;
    default: return D_cathode;
    }
}

double PhysParams::C0(Region r) const {
    switch (r) {
    case Region::anode: return C0_anode;
    case Region::separator: return C0_separator;
    default: return C0_cathode;
    }
}

static Vector expand(const Mesh& mesh, double a, double s, double c) {
    Vector v(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i) {
        switch (mesh.region[i]) {
        case Region::anode: v[i] = a; break;
        case Region::separator: v[i] = s; break;
        case Region::cathode: v[i] = c; break;
        }
    }
    return v;
}

Vector PhysParams::expand_eps_e(const Mesh& mesh) const {
    return expand(mesh, eps_e_anode, eps_e_separator, eps_e_cathode);
}

Vector PhysParams::expand_D(const Mesh& mesh) const {
    return expand(mesh, D_anode, D_separator, D_cathode);
}

Vector PhysParams::expand_C0(const Mesh& mesh) const {
    return expand(mesh, C0_anode, C0_separator, C0_cathode);
}

std::vector<std::string> validate(const PhysParams& p, const DomainLayout& layout) {
    std::vector<std::string> errors;

    auto kappa_errors = p.kappa.check();
    errors.insert(errors.end(), kappa_errors.begin(), kappa_errors.end());

    if (!(p.sigma_anode > 0.0) || !(p.sigma_cathode > 0.0))
        errors.push_back("(H2) ess inf sigma > 0 violated");
    if (!(p.eps_e_anode > 0.0) || !(p.eps_e_separator > 0.0) || !(p.eps_e_cathode > 0.0))
        errors.push_back("(H2) ess inf eps_e > 0 violated");
    if (!(p.D_anode > 0.0) || !(p.D_separator > 0.0) || !(p.D_cathode > 0.0))
        errors.push_back("(H2) ess inf D > 0 violated");

    if (!(p.alpha1 > 0.0) || !(p.alpha2 > 0.0) || !(p.alpha3 > 0.0) || !(p.alpha4 > 0.0))
        errors.push_back("(H4) alpha_i > 0 violated");

    if (std::abs(p.d - p.alpha1 * p.alpha2) > 1e-12 * std::max(1.0, std::abs(p.d)))
        errors.push_back("consistency: d must equal alpha1 * alpha2");

    if (!(p.K >= 1.0)) errors.push_back("(hb) K >= 1 violated");
    if (!std::isfinite(p.U)) errors.push_back("U must be finite");

    if (!(p.C0_anode > 0.0) || !(p.C0_separator > 0.0) || !(p.C0_cathode > 0.0))
        errors.push_back("(H7) min C0 > 0 violated");

    if (p.require_positivity && !(p.d > 0.5))
        errors.push_back("(H8) d > 1/2 violated");

    auto layout_errors = layout.check();
    errors.insert(errors.end(), layout_errors.begin(), layout_errors.end());
    return errors;
}

void validate_or_throw(const PhysParams& params, const DomainLayout& layout) {
    auto errors = validate(params, layout);
    if (!errors.empty()) throw ConfigError(errors);
}

static void check_h_bound(const Mesh& mesh, const Vector& h, double K) {
    for (int i = 0; i < mesh.n_cells(); ++i) {
        if (!is_electrode(mesh.region[i])) continue;
        if (!(h[i] >= 1.0 / K) || !(h[i] <= K)) {
            std::ostringstream os;
            os << "(hb) 1/K <= h <= K violated at cell " << i << " (x = " << mesh.center_x[i]
               << "): h = " << h[i] << ", K = " << K;
            throw ConfigError(os.str());
        }
    }
}

HField HField::constant(const Mesh& mesh, double h, double K) {
    HField f;
    f.value = Vector::Constant(mesh.n_cells(), h);
    check_h_bound(mesh, f.value, K);
    return f;
}

HField HField::per_region(const Mesh& mesh, double h_anode, double h_cathode, double K) {
    HField f;
    f.value.resize(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i) {
        switch (mesh.region[i]) {
        case Region::anode: f.value[i] = h_anode; break;
        case Region::separator: f.value[i] = 1.0; break;
        case Region::cathode: f.value[i] = h_cathode; break;
        }
    }
    check_h_bound(mesh, f.value, K);
    return f;
}

HField HField::from_potential(const Mesh& mesh, const Vector& phi, double U, double alpha2,
                              double K) {
    if (phi.size() != mesh.volume.size())
        throw ConfigError("h_from_potential: phi length does not match cell count");
    HField f;
    f.value.resize(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i) {
        if (!std::isfinite(phi[i])) throw ConfigError("h_from_potential: phi must be finite");
        f.value[i] = is_electrode(mesh.region[i]) ? std::exp(alpha2 * (phi[i] - U)) : 1.0;
    }
    check_h_bound(mesh, f.value, K);
    return f;
}

BoundaryCurrent BoundaryCurrent::zero(const Mesh& mesh) {
    BoundaryCurrent b;
    b.value.assign(mesh.current_face.size(), 0.0);
    return b;
}

BoundaryCurrent BoundaryCurrent::per_label(const Mesh& mesh, double gamma_a,
                                           double interface_anode, double interface_cathode,
                                           double gamma_c) {
    BoundaryCurrent b;
    b.value.resize(mesh.current_face.size());
    for (size_t k = 0; k < mesh.current_face.size(); ++k) {
        switch (mesh.current_face[k].label) {
        case CurrentFaceLabel::gamma_a: b.value[k] = gamma_a; break;
        case CurrentFaceLabel::interface_anode: b.value[k] = interface_anode; break;
        case CurrentFaceLabel::interface_cathode: b.value[k] = interface_cathode; break;
        case CurrentFaceLabel::gamma_c: b.value[k] = gamma_c; break;
        }
    }
    return b;
}

double BoundaryCurrent::external_imbalance(const Mesh& mesh) const {
    if (value.size() != mesh.current_face.size())
        throw ConfigError("boundary current: value count does not match mesh current faces");
    double sum = 0.0, abs_sum = 0.0;
    for (size_t k = 0; k < value.size(); ++k) {
        const auto label = mesh.current_face[k].label;
        if (label == CurrentFaceLabel::gamma_a || label == CurrentFaceLabel::gamma_c) {
            sum += value[k] * mesh.current_face[k].area;
            abs_sum += std::abs(value[k]) * mesh.current_face[k].area;
        }
    }
    return abs_sum > 0.0 ? std::abs(sum) / abs_sum : std::abs(sum);
}

void BoundaryCurrent::check_compatibility(const Mesh& mesh) const {
    if (external_imbalance(mesh) > 1e-12)
        throw ConfigError("compatibility: applied current over the external boundary does not sum to zero");
}

} // namespace cellspan
