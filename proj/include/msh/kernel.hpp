#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "msh/errors.hpp"
#include "msh/homogenization.hpp"
#include "msh/potential.hpp"
#include "msh/quadrature.hpp"

namespace msh {

/// Heat-kernel profile p(t, x0, .) with respect to the invariant measure
/// m_U(dy) = e^{-2U(y)} dy / int_T e^{-2U}.
struct KernelProfile {
    double x0 = 0.0;
    double t = 0.0;
    std::vector<double> y;
    std::vector<double> p;       // density w.r.t. m_U
    std::vector<double> q;       // Lebesgue density
    double mass = 1.0;           // int q dy at the final time
    double inv_normalizer = 1.0; // int_T e^{-2U}
    double init_width = 0.0;     // std dev of the initial Gaussian
    double t_effective = 0.0;    // t + init_width^2

    /// Linear interpolation of p at an off-grid target.
    double p_at(double target) const {
        if (target <= y.front() || target >= y.back())
            throw argument_error("KernelProfile: target outside the solved domain");
        const double h = y[1] - y[0];
        const auto i = static_cast<std::size_t>((target - y.front()) / h);
        const double f = (target - y[i]) / h;
        return p[i] + f * (p[i + 1] - p[i]);
    }
};

struct SolverParams {
    double domain_halfwidth = 0.0; // 0 = auto: |x0| + 6 sqrt(t) + 2
    double dx = 0.0;               // 0 = auto: finest oscillation / 20
    double dt_pde = 0.0;           // 0 = auto: dx
    double leak_budget = 1e-3;
};

/// Conservative Crank-Nicolson integration of the Fokker-Planck equation
/// dq/dt = d/dy(0.5 dq/dy + U' q) from a narrow Gaussian (width 2 dx) at x0,
/// absorbing ends.  The Lebesgue density is converted to the m_U density via
/// p = q e^{2U} int_T e^{-2U}.
inline KernelProfile solve_forward(const PeriodicPotential& u, double x0, double t,
                                   SolverParams params = {}) {
    if (!(t > 0.0)) throw argument_error("solve_forward: t must be positive");
    const int kmax = std::max(1, u.max_frequency());
    double L = params.domain_halfwidth > 0.0 ? params.domain_halfwidth
                                             : std::abs(x0) + 6.0 * std::sqrt(t) + 2.0;
    double dx = params.dx > 0.0 ? params.dx : 1.0 / (20.0 * kmax);
    if (dx > 1.0 / (20.0 * kmax)) dx = 1.0 / (20.0 * kmax);
    const auto n_cells = static_cast<std::size_t>(std::ceil(2.0 * L / dx));
    dx = 2.0 * L / static_cast<double>(n_cells);
    const double dt = params.dt_pde > 0.0 ? params.dt_pde : dx;
    const auto n_steps = std::max<std::int64_t>(1, std::llround(t / dt));
    const double dt_eff = t / static_cast<double>(n_steps);

    const std::size_t n = n_cells + 1;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x0 - L + dx * static_cast<double>(i);

    // drift U' at cell midpoints
    std::vector<double> b(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) b[i] = u.derivative(0.5 * (y[i] + y[i + 1]));

    // flux-form tridiagonal operator A (interior rows 1..n-2)
    const double inv_dx = 1.0 / dx;
    std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double bl = b[i - 1], br = b[i];
        sub[i] = (0.5 * inv_dx - 0.5 * bl) * inv_dx;
        diag[i] = (-inv_dx + 0.5 * (br - bl)) * inv_dx;
        sup[i] = (0.5 * inv_dx + 0.5 * br) * inv_dx;
    }

    // narrow Gaussian initial condition, width 2 dx
    const double sigma0 = 2.0 * dx;
    std::vector<double> q(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i)
        q[i] = std::exp(-0.5 * (y[i] - x0) * (y[i] - x0) / (sigma0 * sigma0));
    double mass0 = 0.0;
    for (double v : q) mass0 += v * dx;
    for (auto& v : q) v /= mass0;

    // Crank-Nicolson: (I - dt/2 A) q+ = (I + dt/2 A) q, Thomas solves
    const double half = 0.5 * dt_eff;
    std::vector<double> al(n), ad(n), au(n), rhs(n), cp(n), dp(n);
    for (std::size_t i = 0; i < n; ++i) {
        al[i] = -half * sub[i];
        ad[i] = 1.0 - half * diag[i];
        au[i] = -half * sup[i];
    }
    ad[0] = ad[n - 1] = 1.0;
    au[0] = al[n - 1] = 0.0;

    double log_scale = 0.0; // running-maximum rescaling keeps deep tails meaningful
    for (std::int64_t s = 0; s < n_steps; ++s) {
        rhs[0] = rhs[n - 1] = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i)
            rhs[i] = q[i] + half * (sub[i] * q[i - 1] + diag[i] * q[i] + sup[i] * q[i + 1]);
        // Thomas
        cp[0] = au[0] / ad[0];
        dp[0] = rhs[0] / ad[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double m = ad[i] - al[i] * cp[i - 1];
            cp[i] = au[i] / m;
            dp[i] = (rhs[i] - al[i] * dp[i - 1]) / m;
        }
        q[n - 1] = dp[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) q[i] = dp[i] - cp[i] * q[i + 1];
        const double peak = *std::max_element(q.begin(), q.end());
        if (peak > 0.0 && peak < 1e-100) {
            log_scale += std::log(peak);
            for (auto& v : q) v /= peak;
        }
    }
    if (log_scale != 0.0) {
        const double scale = std::exp(log_scale);
        for (auto& v : q) v *= scale;
    }

    KernelProfile prof;
    prof.x0 = x0;
    prof.t = t;
    prof.init_width = sigma0;
    prof.t_effective = t + sigma0 * sigma0;
    prof.y = std::move(y);
    prof.mass = 0.0;
    for (double v : q) prof.mass += v * dx;
    if (prof.mass < 1.0 - params.leak_budget)
        throw resource_error("solve_forward: boundary leak " + std::to_string(1.0 - prof.mass) +
                             " exceeds budget; enlarge domain_halfwidth");
    prof.inv_normalizer =
        u.is_zero() ? 1.0
                    : integrate_composite([&](double z) { return std::exp(-2.0 * u.value(z)); },
                                          0.0, 1.0, panels_for_frequency(kmax, 1.0));
    prof.p.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        prof.p[i] = q[i] * std::exp(2.0 * u.value(prof.y[i])) * prof.inv_normalizer;
    prof.q = std::move(q);
    return prof;
}

enum class Regime { LargeDeviation, Homogenization, Diagonal };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::LargeDeviation: return "LargeDeviation";
        case Regime::Homogenization: return "Homogenization";
        default: return "Diagonal";
    }
}

struct EnvelopeResult {
    double lower = 0.0; // Gaussian envelope with exponent (1+E)
    double upper = 0.0; // Gaussian envelope with exponent (1-E)
    double e_term = 0.0;
    Regime regime = Regime::Homogenization;
    bool binding = true; // false when the (t, |x-y|) point is out of window
};

/// Two-sided homogenized envelope for p(t,x,y) in d=1 with the error term
/// E = C2 (|x-y|/t + sqrt(t)/|x-y|).  The window constants have no paper
/// values; the caller supplies C (window) and C2 (error amplitude).
inline EnvelopeResult homogenized_envelope(const PeriodicPotential& u, double t, double x, double y,
                                           double c_window, double c2) {
    if (!(t > 0.0) || !(std::abs(x - y) > 0.0))
        throw argument_error("homogenized_envelope: need t > 0 and x != y");
    const double dist = std::abs(x - y);
    EnvelopeResult res;
    res.e_term = c2 * (dist / t + std::sqrt(t) / dist);
    const double d = effective_diffusivity(u).value;
    const double base = 1.0 / std::sqrt(2.0 * M_PI * t * d);
    const double expo = dist * dist / (2.0 * d * t);
    res.upper = base * std::exp(-(1.0 - res.e_term) * expo);
    res.lower = base * std::exp(-(1.0 + res.e_term) * expo);
    if (!(c_window * dist < t)) {
        res.regime = Regime::LargeDeviation;
        res.binding = false;
    } else if (!(c_window * std::sqrt(t) < dist)) {
        res.regime = Regime::Diagonal;
        res.binding = false;
    } else {
        res.regime = Regime::Homogenization;
        res.binding = res.e_term <= 0.1;
    }
    return res;
}

struct DaviesPoint {
    double t = 0.0;
    double t_effective = 0.0; // t + initial-width correction
    double offset = 0.0;
    double p_fd = 0.0;
    double ratio = 0.0;        // ln p_FD / (-offset^2 D^{-1} / (2 t)), prefactor folded in
    double exponent_gap = 0.0; // |ratio - 1| after normalizing the exact Gaussian
                               // prefactor: the E the theorem actually bounds
    double c2_needed = 0.0;    // smallest C2 making both envelope bounds hold here
    Regime regime = Regime::Homogenization;
    bool in_window = true;
};

struct DaviesReport {
    std::vector<DaviesPoint> points;
    double fitted_c2 = 0.0; // max of c2_needed over in-window points
    double diffusivity = 1.0;
    // exponent_gap decreasing along the schedule.  The raw ratio is not a
    // monotone convergence measure at desk scale: its prefactor term
    // (positive) and envelope term (negative) partially cancel.
    bool ratios_converging = true;
};

/// Finite-difference verification of the homogenized-envelope theorem along a
/// schedule of (t, offset) windows.
inline DaviesReport davies_check(const PeriodicPotential& u,
                                 const std::vector<std::pair<double, double>>& schedule,
                                 double c_window = 1.0, SolverParams params = {}) {
    if (schedule.empty()) throw argument_error("davies_check: empty schedule");
    DaviesReport rep;
    rep.diffusivity = effective_diffusivity(u).value;
    const double d = rep.diffusivity;
    double prev_dev = HUGE_VAL;
    for (const auto& [t, offset] : schedule) {
        SolverParams p = params;
        if (p.domain_halfwidth <= 0.0) p.domain_halfwidth = std::abs(offset) + 6.0 * std::sqrt(t) + 2.0;
        const KernelProfile prof = solve_forward(u, 0.0, t, p);
        DaviesPoint pt;
        pt.t = t;
        pt.t_effective = prof.t_effective;
        pt.offset = offset;
        pt.p_fd = prof.p_at(offset);
        const double te = prof.t_effective;
        const double expo = offset * offset / (2.0 * d * te);
        pt.ratio = std::log(pt.p_fd) / (-expo);
        // smallest C2 with p <= prefactor * exp(-(1-E) expo) and the (1+E) twin
        const double prefactor = 1.0 / std::sqrt(2.0 * M_PI * te * d);
        pt.exponent_gap = std::abs(1.0 + (std::log(pt.p_fd) - std::log(prefactor)) / expo);
        pt.c2_needed = pt.exponent_gap / (offset / te + std::sqrt(te) / offset);
        if (!(c_window * offset < t)) {
            pt.regime = Regime::LargeDeviation;
            pt.in_window = false;
        } else if (!(c_window * std::sqrt(t) < offset)) {
            pt.regime = Regime::Diagonal;
            pt.in_window = false;
        }
        if (pt.in_window) {
            rep.fitted_c2 = std::max(rep.fitted_c2, pt.c2_needed);
            if (pt.exponent_gap > prev_dev) rep.ratios_converging = false;
            prev_dev = pt.exponent_gap;
        }
        rep.points.push_back(pt);
    }
    return rep;
}

} // namespace msh
