#ifndef CELLSPAN_REACTION_HPP
#define CELLSPAN_REACTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace cellspan {

struct KineticsParams {
    double d = 1.0;      // = alpha1 * alpha2
    double alpha2 = 1.0;
    double alpha3 = 1.0;
    double alpha4 = 1.0;
    double tau = 1e-3;   // in (0,1)
};

namespace detail {
inline thread_local std::uint64_t exp_saturation_count = 0;
}

/// Number of clamped exponentials since the last reset (per thread).
inline std::uint64_t saturation_count() { return detail::exp_saturation_count; }
inline void reset_saturation_count() { detail::exp_saturation_count = 0; }

/// exp with the argument clamped to +-700 so sinh-type kinetics saturate
/// instead of producing inf. Every clamp is counted; solvers check the
/// counter and refuse to report a saturated state as converged.
template <typename Scalar>
Scalar exp_clamped(Scalar x) {
    constexpr double limit = 700.0;
    if (x > limit || x < -limit) {
        ++detail::exp_saturation_count;
        x = std::clamp<Scalar>(x, -limit, limit);
    }
    return std::exp(x);
}

template <typename Scalar>
void require_unit_interval_tau(Scalar tau) {
    if (!(tau > 0) || !(tau < 1))
        throw std::invalid_argument("tau must lie in (0,1)");
}

/// G(y1,y2,y3) = y1 y2^-d e^{a2 y3} - y1^-1 y2^d e^{-a2 y3}, y1,y2 > 0.
template <typename Scalar>
Scalar G(Scalar y1, Scalar y2, Scalar y3, Scalar d, Scalar alpha2) {
    if (!(y1 > 0)) throw std::invalid_argument("G: y1 must be > 0");
    if (!(y2 > 0)) throw std::invalid_argument("G: y2 must be > 0");
    const Scalar p = std::pow(y2, -d);
    return y1 * p * exp_clamped(alpha2 * y3) - (Scalar(1) / (y1 * p)) * exp_clamped(-alpha2 * y3);
}

/// dG/dy3 = a2 (y1 y2^-d e^{a2 y3} + y1^-1 y2^d e^{-a2 y3}) >= 2 a2.
template <typename Scalar>
Scalar dG_dy3(Scalar y1, Scalar y2, Scalar y3, Scalar d, Scalar alpha2) {
    if (!(y1 > 0)) throw std::invalid_argument("dG_dy3: y1 must be > 0");
    if (!(y2 > 0)) throw std::invalid_argument("dG_dy3: y2 must be > 0");
    const Scalar p = std::pow(y2, -d);
    return alpha2 * (y1 * p * exp_clamped(alpha2 * y3) + (Scalar(1) / (y1 * p)) * exp_clamped(-alpha2 * y3));
}

/// dG/dy2 = -(d/y2)(y1 y2^-d e^{a2 y3} + y1^-1 y2^d e^{-a2 y3}) <= -2 d / y2.
template <typename Scalar>
Scalar dG_dy2(Scalar y1, Scalar y2, Scalar y3, Scalar d, Scalar alpha2) {
    if (!(y1 > 0)) throw std::invalid_argument("dG_dy2: y1 must be > 0");
    if (!(y2 > 0)) throw std::invalid_argument("dG_dy2: y2 must be > 0");
    const Scalar p = std::pow(y2, -d);
    return -(d / y2) * (y1 * p * exp_clamped(alpha2 * y3) + (Scalar(1) / (y1 * p)) * exp_clamped(-alpha2 * y3));
}

/// Cutoff theta_tau(s) = min(max(s,0), 1/tau).
template <typename Scalar>
Scalar theta_tau(Scalar s, Scalar tau) {
    require_unit_interval_tau(tau);
    return std::clamp<Scalar>(s, Scalar(0), Scalar(1) / tau);
}

/// Regularized kinetics: the second slot goes through theta_tau, the first
/// inverse power is shifted by tau, so the value is finite for every y2.
template <typename Scalar>
Scalar G_tau(Scalar y1, Scalar y2, Scalar y3, Scalar d, Scalar alpha2, Scalar tau) {
    if (!(y1 > 0)) throw std::invalid_argument("G_tau: y1 must be > 0");
    require_unit_interval_tau(tau);
    const Scalar th = theta_tau(y2, tau);
    return y1 * std::pow(th + tau, -d) * exp_clamped(alpha2 * y3)
         - (Scalar(1) / y1) * std::pow(th, d) * exp_clamped(-alpha2 * y3);
}

/// H_tau = sqrt(theta_tau(y2)) G_tau; vanishes whenever y2 <= 0.
template <typename Scalar>
Scalar H_tau(Scalar y1, Scalar y2, Scalar y3, Scalar d, Scalar alpha2, Scalar tau) {
    const Scalar th = theta_tau(y2, tau);
    if (th == Scalar(0)) {
        if (!(y1 > 0)) throw std::invalid_argument("H_tau: y1 must be > 0");
        return Scalar(0);
    }
    return std::sqrt(th) * G_tau(y1, y2, y3, d, alpha2, tau);
}

/// d/dy3 of G_tau (used by the Newton solvers); >= 0 always.
template <typename Scalar>
Scalar dG_tau_dy3(Scalar y1, Scalar y2, Scalar y3, Scalar d, Scalar alpha2, Scalar tau) {
    if (!(y1 > 0)) throw std::invalid_argument("dG_tau_dy3: y1 must be > 0");
    require_unit_interval_tau(tau);
    const Scalar th = theta_tau(y2, tau);
    return alpha2 * (y1 * std::pow(th + tau, -d) * exp_clamped(alpha2 * y3)
                     + (Scalar(1) / y1) * std::pow(th, d) * exp_clamped(-alpha2 * y3));
}

/// d/dy2 of H_tau. Exact away from the cutoff kinks; the 1/sqrt(theta)
/// factor is floored to keep Newton diagonals finite near theta = 0 (the
/// residual stays exact, only the Jacobian is approximated there).
template <typename Scalar>
Scalar dH_tau_dy2(Scalar y1, Scalar y2, Scalar y3, Scalar d, Scalar alpha2, Scalar tau) {
    if (!(y1 > 0)) throw std::invalid_argument("dH_tau_dy2: y1 must be > 0");
    require_unit_interval_tau(tau);
    if (y2 <= Scalar(0) || y2 >= Scalar(1) / tau) return Scalar(0); // theta' = 0
    const Scalar th = y2;
    const Scalar ep = exp_clamped(alpha2 * y3);
    const Scalar em = exp_clamped(-alpha2 * y3);
    const Scalar g = y1 * std::pow(th + tau, -d) * ep - (Scalar(1) / y1) * std::pow(th, d) * em;
    const Scalar dg = -d * y1 * std::pow(th + tau, -d - 1) * ep
                      - (d / y1) * std::pow(th, d - 1) * em;
    const Scalar th_floor = std::max<Scalar>(th, Scalar(1e-8));
    return g / (2 * std::sqrt(th_floor)) + std::sqrt(th) * dg;
}

/// Physical reaction rate S_e = (1/2) a4 sqrt(C) G(h, C, phis - phie) on the
/// electrodes, 0 in the separator.
template <typename Scalar>
Scalar S_e(Scalar C, Scalar phis, Scalar phie, Scalar h, bool electrode, Scalar d, Scalar alpha2,
           Scalar alpha4) {
    if (!electrode) return Scalar(0);
    if (!(C > 0)) throw std::invalid_argument("S_e: C must be > 0 in electrode regions");
    return Scalar(0.5) * alpha4 * std::sqrt(C) * G(h, C, phis - phie, d, alpha2);
}

} // namespace cellspan

#endif
