#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "msh/errors.hpp"
#include "msh/potential.hpp"
#include "msh/quadrature.hpp"
#include "msh/rng.hpp"

namespace msh {

namespace detail {

/// Birkhoff sums S(x) = sum_{k<n} U(R^k x) evaluated on the fixed-point
/// lattice x = j * 2^-64.  Multiplication wraps mod 2^64, which IS reduction
/// mod 1 of the phase, so R^k x mod 1 stays exact even when R^k overflows the
/// 53-bit double mantissa (R=81, n=10 needs this).
class LatticeBirkhoff {
  public:
    LatticeBirkhoff(const PeriodicPotential& u, std::uint64_t ratio, int n) {
        std::uint64_t rk = 1;
        for (int k = 0; k < n; ++k) {
            for (const auto& h : u.harmonics()) {
                terms_.push_back({rk * static_cast<std::uint64_t>(h.k), h.a, h.b});
            }
            rk *= ratio;
        }
        offset_ = n * u.offset();
    }

    double operator()(std::uint64_t j) const {
        double s = offset_;
        for (const auto& t : terms_) {
            const double angle =
                2.0 * M_PI * (static_cast<double>((t.freq * j) >> 11) * 0x1.0p-53);
            s += t.a * std::cos(angle) + t.b * std::sin(angle);
        }
        return s;
    }

  private:
    struct Term {
        std::uint64_t freq;
        double a, b;
    };
    std::vector<Term> terms_;
    double offset_ = 0.0;
};

} // namespace detail

struct PressurePoint {
    int n = 0;
    double p = 0.0;         // (1/n) ln int exp(sum_{k<n} U(R^k x)) dx
    double std_error = 0.0; // 0 for the deterministic path
    bool monte_carlo = false;
};

struct PressureOptions {
    std::uint64_t mc_samples = 2'000'000;
    std::uint64_t mc_seed = 20011;
};

/// Finite-n Birkhoff pressure of U under the shift x -> Rx.  Deterministic
/// quadrature resolving frequency R^{n-1} k_max when that fits the panel
/// budget; otherwise an unbiased lattice Monte Carlo estimate with reported
/// standard error.  exp overflow is mitigated by max-subtraction.
inline PressurePoint birkhoff_pressure(const PeriodicPotential& u, int ratio, int n,
                                       const PressureOptions& opts = {}) {
    if (ratio < 2) throw argument_error("birkhoff_pressure: ratio must be >= 2");
    if (n < 1) throw argument_error("birkhoff_pressure: n must be >= 1");
    PressurePoint out;
    out.n = n;
    if (u.is_zero()) return out;

    // coarse lattice scan for the max of the Birkhoff sum (log-sum-exp shift)
    const detail::LatticeBirkhoff lattice(u, static_cast<std::uint64_t>(ratio), n);
    double shift = -HUGE_VAL;
    const std::uint64_t coarse = 4096;
    for (std::uint64_t i = 0; i < coarse; ++i)
        shift = std::max(shift, lattice(i * (UINT64_MAX / coarse)));

    double integrand_freq = static_cast<double>(u.max_frequency());
    for (int k = 0; k + 1 < n; ++k) integrand_freq *= ratio;
    const double panels_needed = 64.0 * integrand_freq;

    if (panels_needed * 8.0 <= static_cast<double>(kPanelEvalBudget) && n <= 12) {
        double rk = 1.0;
        std::vector<double> scales;
        for (int k = 0; k < n; ++k) {
            scales.push_back(rk);
            rk *= ratio;
        }
        auto birkhoff = [&](double x) {
            double s = 0.0;
            for (double sc : scales) s += u.value(sc * x);
            return s;
        };
        const double integral = integrate_composite(
            [&](double x) { return std::exp(birkhoff(x) - shift); }, 0.0, 1.0,
            static_cast<std::uint64_t>(panels_needed));
        out.p = (std::log(integral) + shift) / n;
        return out;
    }

    // Monte Carlo on the exact 2^-64 lattice
    out.monte_carlo = true;
    CounterRng rng(opts.mc_seed, static_cast<std::uint64_t>(ratio) * 1000 + static_cast<std::uint64_t>(n));
    double sum = 0.0, sumsq = 0.0;
    const auto n_samples = opts.mc_samples;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        const double v = std::exp(lattice(rng.next_u64()) - shift);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(n_samples);
    const double var = std::max(0.0, sumsq / static_cast<double>(n_samples) - mean * mean);
    out.p = (std::log(mean) + shift) / n;
    out.std_error = std::sqrt(var / static_cast<double>(n_samples)) / mean / n;
    return out;
}

/// Lower bound of || (1/n) sum_{k<n} (U(R^k x) - int U) ||_inf from a dense
/// exact-lattice grid plus random restarts.  Always a lower bound of the true
/// sup; `resolved` reports whether the grid resolved the top frequency.
struct SupDefect {
    double value = 0.0;
    bool resolved = false;
};

inline SupDefect sup_defect(const PeriodicPotential& u, int ratio, int n,
                            std::uint64_t grid_cap = (1ULL << 21)) {
    if (ratio < 2) throw argument_error("sup_defect: ratio must be >= 2");
    if (n < 1) throw argument_error("sup_defect: n must be >= 1");
    SupDefect out;
    if (u.is_zero()) {
        out.resolved = true;
        return out;
    }
    const detail::LatticeBirkhoff lattice(u, static_cast<std::uint64_t>(ratio), n);
    const double mean_term = u.offset(); // int U = offset (harmonics average to 0)
    double top_freq = static_cast<double>(u.max_frequency());
    for (int k = 0; k + 1 < n; ++k) top_freq *= ratio;
    out.resolved = 8.0 * top_freq <= static_cast<double>(grid_cap);
    const std::uint64_t grid =
        out.resolved ? std::max<std::uint64_t>(4096, static_cast<std::uint64_t>(8.0 * top_freq))
                     : grid_cap;

    double best = 0.0;
    const std::uint64_t stride = UINT64_MAX / grid;
    for (std::uint64_t i = 0; i < grid; ++i)
        best = std::max(best, std::abs(lattice(i * stride) / n - mean_term));
    // random restarts with local lattice hill climbing
    CounterRng rng(97, static_cast<std::uint64_t>(ratio) * 31 + static_cast<std::uint64_t>(n));
    for (int restart = 0; restart < 64; ++restart) {
        std::uint64_t j = rng.next_u64();
        double v = std::abs(lattice(j) / n - mean_term);
        for (std::uint64_t step = stride / 2; step > 0; step /= 2) {
            const double vl = std::abs(lattice(j - step) / n - mean_term);
            const double vr = std::abs(lattice(j + step) / n - mean_term);
            if (vl > v && vl >= vr) {
                v = vl;
                j -= step;
            } else if (vr > v) {
                v = vr;
                j += step;
            }
        }
        best = std::max(best, v);
    }
    out.value = best;
    return out;
}

enum class Anomaly { Normal, Anomalous, Inconclusive };

inline std::string to_string(Anomaly a) {
    switch (a) {
        case Anomaly::Normal: return "Normal";
        case Anomaly::Anomalous: return "Anomalous";
        default: return "Inconclusive";
    }
}

struct PressureEstimate {
    int ratio = 2;
    std::vector<PressurePoint> points;
    double extrapolated = 0.0; // least-squares fit of p_n = P + a/n, three largest n
    double residual = 0.0;     // max |fit - data| plus MC error over the fitted points
};

namespace detail {

inline void extrapolate_in_1_over_n(PressureEstimate& est) {
    const std::size_t m = est.points.size();
    if (m == 0) return;
    if (m == 1) {
        est.extrapolated = est.points[0].p;
        est.residual = std::max(est.points[0].std_error, 0.5 * std::abs(est.points[0].p));
        return;
    }
    const std::size_t use = std::min<std::size_t>(3, m);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, max_se = 0.0;
    for (std::size_t i = m - use; i < m; ++i) {
        const double x = 1.0 / est.points[i].n, y = est.points[i].p;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        max_se = std::max(max_se, est.points[i].std_error);
    }
    const auto k = static_cast<double>(use);
    const double det = k * sxx - sx * sx;
    const double a = (k * sxy - sx * sy) / det;
    est.extrapolated = (sy - a * sx) / k;
    double max_resid = 0.0;
    for (std::size_t i = m - use; i < m; ++i) {
        const double fit = est.extrapolated + a / est.points[i].n;
        max_resid = std::max(max_resid, std::abs(fit - est.points[i].p));
    }
    est.residual = max_resid + max_se;
}

} // namespace detail

/// Per-n pressure values of U with 1/n extrapolation.
inline PressureEstimate pressure_estimate(const PeriodicPotential& u, int ratio, int n_max,
                                          const PressureOptions& opts = {}) {
    if (n_max < 1) throw argument_error("pressure_estimate: n_max must be >= 1");
    PressureEstimate est;
    est.ratio = ratio;
    for (int n = 1; n <= n_max; ++n) est.points.push_back(birkhoff_pressure(u, ratio, n, opts));
    detail::extrapolate_in_1_over_n(est);
    return est;
}

struct AnomalyReport {
    int ratio = 2;
    double index = 0.0;    // extrapolated P_R(2U) + P_R(-2U)
    double residual = 0.0; // extrapolation residual of the index series
    std::vector<PressurePoint> index_points; // per-n index values
    std::vector<double> sup_defects;         // d_n, n = 1..n_max
    bool defects_resolved = true;
    Anomaly classification = Anomaly::Inconclusive;
    double tol_index = 0.02;
};

/// Normal/anomalous classification from the symmetrized pressure index and
/// the sup-defect trend.  Conservative: Inconclusive is allowed.
inline AnomalyReport anomaly_index(const PeriodicPotential& u, int ratio, int n_max,
                                   const PressureOptions& opts = {}, double tol_index = 0.02) {
    if (ratio < 2) throw argument_error("anomaly_index: ratio must be >= 2");
    if (n_max < 2) throw argument_error("anomaly_index: n_max must be >= 2");
    AnomalyReport rep;
    rep.ratio = ratio;
    rep.tol_index = tol_index;

    const PeriodicPotential u2 = u.scaled(2.0);
    const PeriodicPotential um2 = u.scaled(-2.0);
    PressureEstimate index_series;
    index_series.ratio = ratio;
    for (int n = 1; n <= n_max; ++n) {
        const PressurePoint a = birkhoff_pressure(u2, ratio, n, opts);
        const PressurePoint b = birkhoff_pressure(um2, ratio, n, opts);
        PressurePoint pt;
        pt.n = n;
        pt.p = a.p + b.p;
        pt.std_error = a.std_error + b.std_error;
        pt.monte_carlo = a.monte_carlo || b.monte_carlo;
        index_series.points.push_back(pt);
        const SupDefect d = sup_defect(u, ratio, n);
        rep.sup_defects.push_back(d.value);
        rep.defects_resolved = rep.defects_resolved && d.resolved;
    }
    detail::extrapolate_in_1_over_n(index_series);
    // each index_n is >= 0 (Cauchy-Schwarz), and so is the limit; a slightly
    // negative extrapolation is pure fit noise
    rep.index = std::max(0.0, index_series.extrapolated);
    rep.residual = index_series.residual;
    rep.index_points = index_series.points;

    const double margin = 2.0 * rep.residual;
    const double d_last = rep.sup_defects.back();
    const double d_mid = rep.sup_defects[static_cast<std::size_t>(std::max(0, n_max / 2 - 1))];
    const bool defect_to_zero = d_last <= 0.7 * d_mid || d_last < 1e-9;
    if (rep.index > tol_index && rep.index > margin)
        rep.classification = Anomaly::Anomalous;
    else if (rep.index < tol_index && defect_to_zero)
        rep.classification = Anomaly::Normal;
    else
        rep.classification = Anomaly::Inconclusive;
    return rep;
}

} // namespace msh
