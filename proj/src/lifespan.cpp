#include "cellspan/lifespan.hpp"

#include "cellspan/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cellspan {

std::vector<std::string> AprioriParams::check() const {
    std::vector<std::string> errors;
    if (N < 2) errors.push_back("(H5) space dimension N >= 2 violated");
    if (!(q > 1.0 + N / 2.0)) errors.push_back("exponent q > 1 + N/2 violated");
    if (!(2.0 * q - N > 0.0)) errors.push_back("exponent 2q - N > 0 violated");
    if (!(d > 0.5)) errors.push_back("(H8) d > 1/2 violated");
    if (!(alpha0 > 0.0)) errors.push_back("alpha0 > 0 violated");
    if (!(c > 0.0)) errors.push_back("calibration constant c > 0 violated");
    if (!(m > 0.0)) errors.push_back("constant m > 0 violated");
    return errors;
}

double degiorgi_threshold(double c, double b, double alpha) {
    if (!(b > 1.0)) throw std::invalid_argument("degiorgi_threshold: b must be > 1");
    if (!(c > 0.0)) throw std::invalid_argument("degiorgi_threshold: c must be > 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("degiorgi_threshold: alpha must be > 0");
    return std::pow(c, -1.0 / alpha) * std::pow(b, -1.0 / (alpha * alpha));
}

std::vector<double> degiorgi_iterate(double y0, double c, double b, double alpha, int n_steps) {
    if (!(b > 1.0)) throw std::invalid_argument("degiorgi_iterate: b must be > 1");
    if (!(c > 0.0) || !(alpha > 0.0) || !(y0 > 0.0))
        throw std::invalid_argument("degiorgi_iterate: y0, c, alpha must be > 0");
    std::vector<double> orbit;
    orbit.reserve(static_cast<size_t>(n_steps) + 1);
    orbit.push_back(y0);
    double y = y0;
    double bn = 1.0;
    for (int n = 0; n < n_steps; ++n) {
        y = c * bn * std::pow(y, 1.0 + alpha);
        bn *= b;
        if (!std::isfinite(y) || y > 1e150)
            throw SolverError("degiorgi_iterate: orbit diverged at step " + std::to_string(n + 1), y);
        orbit.push_back(y);
    }
    return orbit;
}

// Left-hand side of the s0 equation; strictly decreasing on (0, inf).
static double s0_equation(double s, double m, double delta) {
    return 1.0 / (m * (1.0 + delta) * std::pow(s, delta)) - s + m;
}

double solve_s0(double m, double delta) {
    if (!(m > 0.0) || !(delta > 0.0))
        throw std::invalid_argument("solve_s0: m and delta must be > 0");
    const double tiny = 1e-8;
    double lo = tiny;
    double hi = m + 1.0 / (m * (1.0 + delta) * std::pow(tiny, delta));
    if (s0_equation(lo, m, delta) < 0.0) lo = std::numeric_limits<double>::min();
    for (int i = 0; i < 400; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (s0_equation(mid, m, delta) > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-16 * hi) break;
    }
    double s = 0.5 * (lo + hi);
    // safeguarded Newton polish
    for (int i = 0; i < 8; ++i) {
        const double f = s0_equation(s, m, delta);
        const double fp = -delta / (m * (1.0 + delta) * std::pow(s, delta + 1.0)) - 1.0;
        const double step = f / fp;
        const double s_new = s - step;
        if (!(s_new > lo) || !(s_new < hi)) break;
        s = s_new;
        if (std::abs(f) < 1e-15 * std::max(1.0, s)) break;
    }
    return s;
}

// log of m (1+delta) e^{m s^{1+delta}} s^delta; shared verbatim between
// log_epsilon0 and f_eps_prime so the tangency residual cancels exactly
// even when m s^{1+delta} is enormous
static double tangency_exponent(double m, double delta, double s) {
    return m * std::pow(s, 1.0 + delta) + (std::log(m * (1.0 + delta)) + delta * std::log(s));
}

double log_epsilon0(double m, double delta, double s0) {
    return -tangency_exponent(m, delta, s0);
}

double epsilon0(double m, double delta, double s0) {
    return std::exp(log_epsilon0(m, delta, s0));
}

double f_eps(double s, double m, double delta, double log_eps) {
    return std::exp(log_eps + m * std::pow(s, 1.0 + delta)) - s + m;
}

double f_eps_prime(double s, double m, double delta, double log_eps) {
    return std::expm1(log_eps + tangency_exponent(m, delta, s));
}

double gamma_exponent(double q, int N, double d, double alpha0) {
    if (!(2.0 * q - N > 0.0)) throw std::invalid_argument("gamma_exponent: need 2q - N > 0");
    const double gamma = q * N * alpha0 / (2.0 * q - N) + (7.0 * d + 3.0 + 2.0 * alpha0) / 4.0;
    if (!(gamma > d + 0.5))
        throw SolverError("gamma_exponent: gamma > d + 1/2 failed", gamma);
    return gamma;
}

static void check_g_domain(double q, int N, double d) {
    if (!(q > 1.0 + N / 2.0)) throw std::invalid_argument("g_of_T: need q > 1 + N/2");
    if (!(d > 0.5)) throw std::invalid_argument("g_of_T: need d > 1/2");
    if (N < 2) throw std::invalid_argument("g_of_T: need N >= 2");
}

double log_g_of_T(double T, double q, int N, double d) {
    check_g_domain(q, N, d);
    if (!(T > 0.0)) return -std::numeric_limits<double>::infinity();
    const double lt = std::log(T);
    const double l1pt = std::log1p(T);
    const double b1 = (2.0 * N / (N + 2.0)) * l1pt + (2.0 * (2.0 * q - 2.0 - N) / (q * (N + 2.0))) * lt;
    const double b2 = (2.0 * N / ((N + 2.0) * (2.0 * d - 1.0))) * l1pt + (2.0 / (q * (2.0 * d - 1.0))) * lt;
    return std::max(b1, b2);
}

double g_of_T(double T, double q, int N, double d) {
    check_g_domain(q, N, d);
    if (T < 0.0) throw std::invalid_argument("g_of_T: T must be >= 0");
    if (T == 0.0) return 0.0;
    return std::exp(log_g_of_T(T, q, N, d));
}

double solve_Tmax_log(double log_eps0, double c, double q, int N, double d) {
    check_g_domain(q, N, d);
    if (!(c > 0.0)) throw std::invalid_argument("solve_Tmax: c must be > 0");
    if (log_eps0 == -std::numeric_limits<double>::infinity()) return 0.0;
    // solve log c + 2 log g(T) = log eps0 by bisection in u = log T
    const double target = log_eps0 - std::log(c);
    auto f = [&](double u) { return 2.0 * log_g_of_T(std::exp(u), q, N, d) - target; };
    double lo = -745.0, hi = 0.0;
    while (f(hi) < 0.0 && hi < 710.0) hi += 8.0;
    if (f(lo) > 0.0) return 0.0; // below representable T
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15) break;
    }
    return std::exp(0.5 * (lo + hi));
}

double solve_Tmax(double eps0, double c, double q, int N, double d) {
    if (eps0 < 0.0) throw std::invalid_argument("solve_Tmax: eps0 must be >= 0");
    if (eps0 == 0.0) return 0.0; // g(0) = 0 solves exactly
    return solve_Tmax_log(std::log(eps0), c, q, N, d);
}

LifespanReport lifespan_pipeline(const AprioriParams& p) {
    auto errors = p.check();
    if (!errors.empty()) throw ConfigError(errors);

    LifespanReport r;
    r.gamma = gamma_exponent(p.q, p.N, p.d, p.alpha0);
    r.delta = r.gamma - 1.0;
    r.m = p.c;
    r.s0 = solve_s0(r.m, r.delta);
    r.log_eps0 = log_epsilon0(r.m, r.delta, r.s0);
    r.eps0 = std::exp(r.log_eps0);
    r.T_max = solve_Tmax_log(r.log_eps0, p.c, p.q, p.N, p.d);

    r.s0_residual = s0_equation(r.s0, r.m, r.delta);
    r.stationarity_f = f_eps(r.s0, r.m, r.delta, r.log_eps0);
    r.stationarity_fprime = f_eps_prime(r.s0, r.m, r.delta, r.log_eps0);
    if (r.T_max > 0.0) {
        const double lhs = std::log(p.c) + 2.0 * log_g_of_T(r.T_max, p.q, p.N, p.d);
        r.tmax_residual = std::expm1(lhs - r.log_eps0); // (c g^2 - eps0)/eps0
    } else {
        r.tmax_residual = 0.0;
    }
    if (!(r.s0 > r.m))
        throw SolverError("lifespan_pipeline: s0 > m failed", r.s0);
    return r;
}

double upper_bound_estimate(double T, double q, int N, double c, double exp_norm_q,
                            double C0_inf) {
    check_g_domain(q, N, 1.0);
    if (T < 0.0 || exp_norm_q < 0.0 || C0_inf < 0.0 || !(c > 0.0))
        throw std::invalid_argument("upper_bound_estimate: bad inputs");
    const double tpow = std::pow(1.0 + T, 2.0 * N / (N + 2.0))
                        * std::pow(T, 2.0 * (2.0 * q - 2.0 - N) / (q * (N + 2.0)));
    return c * tpow * exp_norm_q * exp_norm_q + 4.0 * C0_inf + 2.0;
}

double lower_bound_estimate(double T, double q, int N, double d, double c, double exp_norm_q,
                            double C0_min) {
    check_g_domain(q, N, d);
    if (T < 0.0 || exp_norm_q < 0.0 || !(C0_min > 0.0) || !(c > 0.0))
        throw std::invalid_argument("lower_bound_estimate: bad inputs");
    // the time dependence beyond (1+T)^... lives in the slab norm passed in;
    // an empty slab (T = 0) comes with norm 0
    const double tpow = std::pow(1.0 + T, 2.0 * N / ((N + 2.0) * (2.0 * d - 1.0)));
    return 1.0 / C0_min + c * tpow * std::pow(exp_norm_q, 2.0 / (2.0 * d - 1.0));
}

std::vector<CertificateEntry> amplitude_certificate(const std::vector<double>& times,
                                                    const std::vector<double>& amplitude,
                                                    const LifespanReport& report) {
    if (times.size() != amplitude.size())
        throw ConfigError("amplitude_certificate: times and amplitude lengths differ");
    std::vector<CertificateEntry> out(times.size());
    for (size_t i = 0; i < times.size(); ++i)
        out[i] = {times[i], amplitude[i], amplitude[i] < report.s0};
    return out;
}

} // namespace cellspan
