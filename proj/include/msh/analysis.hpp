#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "msh/errors.hpp"
#include "msh/homogenization.hpp"
#include "msh/potential.hpp"

namespace msh {

/// Effective / fluctuation / perturbation scale counts at a given observation.
struct ScaleCount {
    int n_ef = 0;
    int n_flu = 0;
    int n_per = 0;
    bool n_per_degenerate = false; // defining condition never met at desk scale
};

/// n_ef(r) = sup{ n >= 0 : R_n <= r }, capped at the stored schedule length.
inline int effective_scales(const ScaleSchedule& schedule, double r) {
    if (!(r >= 1.0)) throw argument_error("effective_scales: requires r >= 1");
    int n = 0;
    while (n + 1 <= schedule.levels() && schedule.radius(n + 1) <= r) ++n;
    return n;
}

/// n_flu(t) = sup{ n : R_n^2 <= t }.
inline int fluctuation_scales(const ScaleSchedule& schedule, double t) {
    if (!(t >= 1.0)) throw argument_error("fluctuation_scales: requires t >= 1");
    int n = 0;
    while (n + 1 <= schedule.levels() &&
           schedule.radius(n + 1) * schedule.radius(n + 1) <= t)
        ++n;
    return n;
}

struct ExitPrediction {
    double prediction = 0.0; // r^2 / D(V_0^{n_ef})
    double factor = 4.0;     // C_tau = 4 e^{6(K0 + K1/(rho_min - 1))}
    int n_ef = 0;
};

/// Exit-time prediction with its two-sided stability factor.  The true mean
/// lies in [prediction/factor, prediction*factor] under the separation
/// hypotheses.  n_ef is clamped at n_max: scales beyond the truncation are
/// zero and do not change D.
inline ExitPrediction predict_exit(const MultiScalePotential& msp, double r) {
    ExitPrediction out;
    out.n_ef = effective_scales(msp.schedule(), r);
    const int n = std::min(out.n_ef, msp.n_max());
    out.prediction = r * r / multiscale_diffusivity(msp, n).value;
    const ModelConstants c = model_constants(msp);
    out.factor = 4.0 * std::exp(6.0 * (c.k0 + c.k1 / (msp.schedule().rho_min() - 1.0)));
    return out;
}

/// Two-sided bracket for the exit-time anomaly exponent nu_1.  The paper's
/// C_1 has no numeric value; it is a configuration parameter whose default
/// 6(K0+K1) is a documented heuristic.
inline std::pair<double, double> exponent_bounds_nu1(const ModelConstants& c,
                                                     const ScaleSchedule& schedule,
                                                     double c1 = -1.0) {
    if (c1 < 0.0) c1 = 6.0 * (c.k0 + c.k1);
    const double lo =
        -std::log(c.lambda_max) / std::log(schedule.rho_max()) -
        c1 / (schedule.rho_min() * std::log(schedule.rho_max()));
    const double hi =
        -std::log(c.lambda_min) / std::log(schedule.rho_min()) +
        c1 / (schedule.rho_min() * std::log(schedule.rho_min()));
    return {lo, hi};
}

/// Pointwise and regression exponents of (x_i, y_i) data in log-log space,
/// relative to a baseline power (2 for exit times, 0 for raw laws).
struct ExponentFit {
    std::vector<double> abscissae;
    std::vector<double> ordinates;
    std::vector<double> pointwise; // ln(y)/ln(x) - baseline
    double slope = 0.0;            // OLS slope of ln y on ln x, minus baseline
    double slope_std_error = 0.0;
    double baseline = 0.0;
};

inline ExponentFit fit_exponents(const std::vector<double>& xs, const std::vector<double>& ys,
                                 double baseline = 0.0) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw argument_error("fit_exponents: need >= 2 matching points");
    ExponentFit fit;
    fit.abscissae = xs;
    fit.ordinates = ys;
    fit.baseline = baseline;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const auto n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw argument_error("fit_exponents: data must be positive");
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        fit.pointwise.push_back(lx != 0.0 ? ly / lx - baseline : 0.0);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double det = n * sxx - sx * sx;
    if (det <= 0.0) throw argument_error("fit_exponents: degenerate abscissae");
    const double slope = (n * sxy - sx * sy) / det;
    fit.slope = slope - baseline;
    if (xs.size() > 2) {
        const double intercept = (sy - slope * sx) / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double resid = std::log(ys[i]) - intercept - slope * std::log(xs[i]);
            ss += resid * resid;
        }
        fit.slope_std_error = std::sqrt(ss / (n - 2.0) * n / det);
    }
    return fit;
}

struct MsdEnvelope {
    double lower = 0.0; // (1/24) e^{-8 n_per K0} D(V_0^{n_flu}) t
    double upper = 0.0; // 500 e^{+8 n_per K0} D(V_0^{n_flu}) t
    ScaleCount scales;
    double diffusivity = 1.0;
};

/// Mean-squared-displacement envelope with the proof constants 24 and 500.
/// n_per's defining condition R^2_{n_flu-n} e^{14 n K0} 1e4 <= t D(V_0^{n_flu})
/// needs an astronomically large rho_min to ever hold; when no n in
/// [0, n_flu] satisfies it the envelope is flagged degenerate and n_per
/// falls back to n_flu (the widest value the proof structure allows).
inline MsdEnvelope msd_envelope(const MultiScalePotential& msp, double t) {
    const auto& sched = msp.schedule();
    if (!(t >= sched.radius(1) * sched.radius(1)))
        throw argument_error("msd_envelope: requires t >= R_1^2");
    MsdEnvelope env;
    env.scales.n_flu = fluctuation_scales(sched, t);
    env.scales.n_ef = effective_scales(sched, std::sqrt(t));
    const int n = std::min(env.scales.n_flu, msp.n_max());
    env.diffusivity = multiscale_diffusivity(msp, n).value;
    const ModelConstants c = model_constants(msp);

    env.scales.n_per_degenerate = true;
    for (int k = 0; k <= env.scales.n_flu; ++k) {
        const double rad = sched.radius(env.scales.n_flu - k);
        if (rad * rad * std::exp(14.0 * k * c.k0) * 1e4 <= t * env.diffusivity) {
            env.scales.n_per = k;
            env.scales.n_per_degenerate = false;
            break;
        }
    }
    if (env.scales.n_per_degenerate) env.scales.n_per = env.scales.n_flu;

    const double swell = std::exp(8.0 * env.scales.n_per * c.k0);
    env.lower = env.diffusivity * t / (24.0 * swell);
    env.upper = 500.0 * swell * env.diffusivity * t;
    return env;
}

/// nu_ef(t) = ln(1/lambda_ef)/ln(rho_ef) with rho_ef^{n_ef} = R_{n_ef} and
/// lambda_ef^{n_ef+1} = D(V_0^{n_ef}) — the geometric-mean construction,
/// including its off-by-one between the two roots.
inline double predict_nu_ef(const MultiScalePotential& msp, double t) {
    const int n_ef = fluctuation_scales(msp.schedule(), t);
    if (n_ef < 1) throw argument_error("predict_nu_ef: undefined for n_ef = 0");
    const int n = std::min(n_ef, msp.n_max());
    const double d = multiscale_diffusivity(msp, n).value;
    const double lambda_ef = std::pow(d, 1.0 / (n_ef + 1.0));
    const double rho_ef = std::pow(msp.schedule().radius(n_ef), 1.0 / n_ef);
    return std::log(1.0 / lambda_ef) / std::log(rho_ef);
}

struct WalkDimensions {
    double d_w1 = 2.0; // from E[y_t^2]
    double d_w2 = 2.0; // from E[tau(0,r)]
    double d_w3 = 2.0; // from ln P[y_t >= h]
};

/// The self-similar summary-table walk dimensions; equal to first order in
/// 1/ln(rho).
inline WalkDimensions walk_dimensions(double lambda, double rho) {
    if (!(lambda > 0.0 && lambda < 1.0) || !(rho >= 2.0))
        throw argument_error("walk_dimensions: need 0 < lambda < 1 and rho >= 2");
    const double ll = std::log(lambda), lr = std::log(rho);
    WalkDimensions d;
    d.d_w1 = 2.0 / (1.0 + ll / (2.0 * lr));
    d.d_w2 = 2.0 - ll / lr;
    d.d_w3 = 1.0 + 1.0 / (1.0 + ll / (lr - 0.5 * ll));
    return d;
}

struct TailPrediction {
    double log_prob_bound = 0.0; // -C6 h^2/t (t/h)^{nu3}
    double nu3 = 0.0;
    int n_ef = 0;      // effective scales at ratio t/h
    bool in_window = true;
};

/// Theorem 2.3 tail bound in its first-order self-similar form, with the
/// window condition t/h >= C5 evaluated and reported.
inline TailPrediction tail_prediction(double lambda, double rho, double t, double h, double c6,
                                      const ScaleSchedule& schedule, double c5 = 8.0) {
    if (!(lambda > 0.0 && lambda < 1.0) || !(rho >= 2.0) || !(t > 0.0) || !(h > 0.0))
        throw argument_error("tail_prediction: bad parameters");
    TailPrediction out;
    out.nu3 = -std::log(lambda) / std::log(rho);
    out.log_prob_bound = -c6 * h * h / t * std::pow(t / h, out.nu3);
    out.in_window = (t / h >= c5);
    out.n_ef = (t / h >= 1.0) ? effective_scales(schedule, t / h) : 0;
    return out;
}

struct WeakAnomaly {
    double f_t = 0.0; // MSD:  E[y_t^2] ~ t e^{-f(t)}
    double g_r = 0.0; // exit: E[tau]   ~ r^2 e^{g(r)}
    double k_x = 0.0; // tail rate factor
};

/// Fast-separation (R_n = R_{n-1}[rho^{n^alpha}/R_{n-1}]) weak-anomaly laws.
inline WeakAnomaly weak_anomaly_predict(double rho, double alpha, double lambda, double t) {
    if (!(alpha > 1.0)) throw argument_error("weak_anomaly_predict: requires alpha > 1");
    if (!(lambda > 0.0 && lambda < 1.0) || !(rho > 1.0) || !(t > 1.0))
        throw argument_error("weak_anomaly_predict: bad parameters");
    WeakAnomaly w;
    const double l1l = std::log(1.0 / lambda);
    w.f_t = std::pow(std::log(t), 1.0 / alpha) * l1l * std::pow(2.0 * std::log(rho), -1.0 / alpha);
    w.g_r = std::pow(std::log(t), 1.0 / alpha) * l1l * std::pow(std::log(rho), -1.0 / alpha);
    w.k_x = std::pow(lambda, -std::pow(t / std::log(rho), 1.0 / alpha));
    return w;
}

} // namespace msh
