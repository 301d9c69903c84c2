#ifndef CELLSPAN_LIFESPAN_HPP
#define CELLSPAN_LIFESPAN_HPP

#include <string>
#include <vector>

namespace cellspan {

/// Inputs of the a-priori lifespan pipeline. The generic constant of the
/// estimates is not computable from first principles; it enters as the
/// calibration input c. m is the additive constant of the amplitude
/// inequality, kept separate so the lemma itself can be exercised; the
/// pipeline identifies m with c.
struct AprioriParams {
    int N = 3;          // space dimension, >= 2
    double q = 4.0;     // integrability exponent, > 1 + N/2
    double d = 1.0;     // > 1/2
    double alpha0 = 1.0;
    double c = 1.0;     // calibration constant
    double m = 1.0;

    std::vector<std::string> check() const;
};

struct LifespanReport {
    double gamma = 0.0;
    double delta = 0.0; // gamma - 1
    double m = 0.0;     // constant actually used (= c)
    double s0 = 0.0;
    double eps0 = 0.0;      // may underflow to 0 for extreme inputs
    double log_eps0 = 0.0;  // always finite
    double T_max = 0.0;
    double s0_residual = 0.0;          // root equation at s0
    double stationarity_f = 0.0;       // f_{eps0}(s0)
    double stationarity_fprime = 0.0;  // f'_{eps0}(s0)
    double tmax_residual = 0.0;        // relative residual of c g^2(T) = eps0
};

/// Smallness threshold of the geometric recursion y_{n+1} <= c b^n y_n^{1+a}:
/// starting at or below c^{-1/a} b^{-1/a^2} forces y_n -> 0.
double degiorgi_threshold(double c, double b, double alpha);

/// Equality-case orbit y_{n+1} = c b^n y_n^{1+alpha}; throws on overflow.
std::vector<double> degiorgi_iterate(double y0, double c, double b, double alpha, int n_steps);

/// Unique positive root of 1/(m (1+delta) s^delta) - s + m = 0.
double solve_s0(double m, double delta);

/// eps0 = 1 / (m (1+delta) e^{m s0^{1+delta}} s0^delta).
double epsilon0(double m, double delta, double s0);
/// log of the same, finite even when eps0 underflows.
double log_epsilon0(double m, double delta, double s0);

/// f_eps(s) = eps e^{m s^{1+delta}} - s + m, evaluated from log(eps) so the
/// tangency residuals stay finite for extreme (m, delta).
double f_eps(double s, double m, double delta, double log_eps);
/// f'_eps(s) = eps m (1+delta) e^{m s^{1+delta}} s^delta - 1.
double f_eps_prime(double s, double m, double delta, double log_eps);

/// gamma = q N alpha0 / (2q - N) + (7d + 3 + 2 alpha0) / 4.
double gamma_exponent(double q, int N, double d, double alpha0);

/// Amplitude growth envelope g(T); g(0) = 0, strictly increasing.
double g_of_T(double T, double q, int N, double d);
double log_g_of_T(double T, double q, int N, double d);

/// Unique T with c g^2(T) = eps0 (log-space bisection; relative residual
/// <= 1e-12). May be passed log_eps0 directly via solve_Tmax_log.
double solve_Tmax(double eps0, double c, double q, int N, double d);
double solve_Tmax_log(double log_eps0, double c, double q, int N, double d);

/// Full chain: gamma -> delta = gamma - 1, m = c -> s0 -> eps0 -> T_max,
/// with every defining-equation residual re-verified.
LifespanReport lifespan_pipeline(const AprioriParams& p);

/// Closed-form a-priori bound on max C (reported for comparison against a
/// measured run).
double upper_bound_estimate(double T, double q, int N, double c, double exp_norm_q,
                            double C0_inf);
/// Closed-form a-priori bound on max 1/C.
double lower_bound_estimate(double T, double q, int N, double d, double c, double exp_norm_q,
                            double C0_min);

struct CertificateEntry {
    double time = 0.0;
    double amplitude = 0.0;
    bool within = true; // amplitude < s0
};

/// Flags every time with a(t) >= s0; all-clear certifies the run against
/// the lifespan bound.
std::vector<CertificateEntry> amplitude_certificate(const std::vector<double>& times,
                                                    const std::vector<double>& amplitude,
                                                    const LifespanReport& report);

} // namespace cellspan

#endif
