#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "msh/errors.hpp"
#include "msh/potential.hpp"
#include "msh/quadrature.hpp"

namespace msh {

/// Effective diffusivity D(U) = (int e^{2U} * int e^{-2U})^{-1} over one period.
struct Diffusivity {
    double value = 1.0;
    double error_estimate = 0.0;
};

inline std::uint64_t panels_for_frequency(int max_frequency, double length) {
    const double per_unit = 64.0 * std::max(1, max_frequency);
    return static_cast<std::uint64_t>(std::ceil(per_unit * length));
}

inline Diffusivity effective_diffusivity(const PeriodicPotential& u) {
    if (u.is_zero()) return {1.0, 0.0};
    const std::uint64_t panels = panels_for_frequency(u.max_frequency(), 1.0);
    auto [ip, ep] = integrate_with_error([&](double x) { return std::exp(2.0 * u.value(x)); }, 0.0, 1.0, panels);
    auto [im, em] = integrate_with_error([&](double x) { return std::exp(-2.0 * u.value(x)); }, 0.0, 1.0, panels);
    Diffusivity d;
    d.value = 1.0 / (ip * im);
    d.error_estimate = d.value * (ep / ip + em / im);
    return d;
}

/// D(V_0^n) over one period [0, R_n] of the truncated multi-scale potential.
/// Panel density resolves the finest scale; deterministic pairwise summation.
inline Diffusivity multiscale_diffusivity(const MultiScalePotential& msp, int n) {
    if (n < 0 || n > msp.n_max())
        throw argument_error("multiscale_diffusivity: n out of range [0, n_max]");
    if (msp.is_zero()) return {1.0, 0.0};
    const double period = msp.schedule().radius(n);
    const std::uint64_t panels = panels_for_frequency(msp.max_frequency(), period);
    if (panels * 8 * 2 > kPanelEvalBudget)
        throw resource_error("multiscale_diffusivity: quadrature over R_n=" + std::to_string(period) +
                             " would exceed the 1e8 evaluation budget; lower n");
    auto v = [&](double x) { return eval_potential(msp, x, 0, n); };
    auto [ip, ep] = integrate_with_error([&](double x) { return std::exp(2.0 * v(x)); }, 0.0, period, panels / 2);
    auto [im, em] = integrate_with_error([&](double x) { return std::exp(-2.0 * v(x)); }, 0.0, period, panels / 2);
    const double ap = ip / period, am = im / period; // period averages
    Diffusivity d;
    d.value = 1.0 / (ap * am);
    d.error_estimate = d.value * (ep / ip + em / im);
    return d;
}

/// Two-sided bracket (lambda_min e^{-4K1/rho_min})^n <= D(V_0^{n-1}) <=
/// (lambda_max e^{4K1/rho_min})^n, upper bound clamped at 1.
inline std::pair<double, double> diffusivity_bounds(int n, const ModelConstants& c,
                                                    const ScaleSchedule& schedule) {
    if (n < 1) throw argument_error("diffusivity_bounds: n must be >= 1");
    const double rho = schedule.rho_min();
    const double lo = std::pow(c.lambda_min * std::exp(-4.0 * c.k1 / rho), n);
    const double hi = std::min(1.0, std::pow(c.lambda_max * std::exp(4.0 * c.k1 / rho), n));
    return {lo, hi};
}

/// Full model constants: K0/K1 from grid sups, lambda bounds from the
/// per-scale effective diffusivities of the distinct potentials in the cycle.
inline ModelConstants model_constants(const MultiScalePotential& msp, int grid_points = 4096) {
    ModelConstants c = potential_constants(msp, grid_points);
    c.lambda_min = 1.0;
    c.lambda_max = 0.0;
    for (const auto& u : msp.potentials()) {
        const double d = effective_diffusivity(u).value;
        c.lambda_min = std::min(c.lambda_min, d);
        c.lambda_max = std::max(c.lambda_max, d);
    }
    return c;
}

/// Harmonic coordinate F^P(x) = R * int_0^x e^{2P(y/R)} dy / int_0^R e^{2P(y/R)} dy
/// for a potential P stretched to period R.  Stored as a cumulative table with
/// monotone-cubic (Fritsch-Carlson) interpolation so F stays strictly increasing.
class Corrector {
  public:
    Corrector(const PeriodicPotential& p, double period, int cells_per_period = 0)
        : p_(p), period_(period) {
        if (!(period > 0.0)) throw argument_error("Corrector: period must be positive");
        int cells = cells_per_period > 0 ? cells_per_period : 256 * std::max(1, p.max_frequency());
        cells = std::max(cells, 64);
        x_.resize(static_cast<std::size_t>(cells) + 1);
        cum_.resize(x_.size());
        cum_[0] = 0.0;
        const double h = period / cells;
        for (int i = 0; i < cells; ++i) {
            x_[static_cast<std::size_t>(i)] = h * i;
            const double a = h * i, b = h * (i + 1);
            cum_[static_cast<std::size_t>(i) + 1] =
                cum_[static_cast<std::size_t>(i)] +
                integrate_composite([&](double y) { return weight(y); }, a, b, 8);
        }
        x_.back() = period;
        total_ = cum_.back();
        build_slopes();
    }

    double period() const { return period_; }
    double total_mass() const { return total_; }

    /// F(x) on [0, period]; F(0)=0, F(period)=period.
    double value(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= period_) return period_;
        const auto i = static_cast<std::size_t>(std::min(
            static_cast<double>(x_.size() - 2), std::floor(x / period_ * (x_.size() - 1))));
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double y0 = cum_[i], y1 = cum_[i + 1];
        const double m0 = slope_[i] * h, m1 = slope_[i + 1] * h;
        const double t2 = t * t, t3 = t2 * t;
        const double cum = y0 * (2 * t3 - 3 * t2 + 1) + m0 * (t3 - 2 * t2 + t) +
                           y1 * (-2 * t3 + 3 * t2) + m1 * (t3 - t2);
        return period_ * cum / total_;
    }

    /// F'(x) from the exact integrand (no interpolation).
    double derivative(double x) const { return period_ * weight(x) / total_; }

    /// chi(x) = x - F(x), the periodic corrector.
    double chi(double x) const { return x - value(x); }

  private:
    double weight(double y) const { return std::exp(2.0 * p_.value(y / period_)); }

    void build_slopes() {
        // Fritsch-Carlson limited slopes over the cumulative table
        const std::size_t n = x_.size();
        slope_.assign(n, 0.0);
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (cum_[i + 1] - cum_[i]) / (x_[i + 1] - x_[i]);
        slope_[0] = d[0];
        slope_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0)
                slope_[i] = 0.0;
            else
                slope_[i] = 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]); // harmonic mean
        }
    }

    PeriodicPotential p_;
    double period_ = 1.0;
    double total_ = 1.0;
    std::vector<double> x_, cum_, slope_;
};

inline Corrector corrector(const PeriodicPotential& p, double period) { return Corrector(p, period); }

struct MixingDefect {
    double defect = 0.0; // | int g f(R.) - int g int f |
    double bound = 0.0;  // ||g'||_inf / R * int |f|
};

/// Quantitative mixing of separated scales on the torus.
inline MixingDefect mixing_defect(const PeriodicPotential& g, const PeriodicPotential& f, int big_r) {
    if (big_r < 1) throw argument_error("mixing_defect: R must be a positive integer");
    auto gv = [&](double x) { return g.value(x); };
    auto fv = [&](double x) { return f.value(x); };
    const std::uint64_t pg = panels_for_frequency(std::max(g.max_frequency(), f.max_frequency() * big_r), 1.0);
    const double cross = integrate_composite([&](double x) { return gv(x) * fv(big_r * x); }, 0.0, 1.0, pg);
    const double ig = integrate_composite(gv, 0.0, 1.0, panels_for_frequency(g.max_frequency(), 1.0));
    const double iff = integrate_composite(fv, 0.0, 1.0, panels_for_frequency(f.max_frequency(), 1.0));
    const double iabs =
        integrate_composite([&](double x) { return std::abs(fv(x)); }, 0.0, 1.0,
                            panels_for_frequency(f.max_frequency(), 1.0) * 4);
    MixingDefect out;
    out.defect = std::abs(cross - ig * iff);
    out.bound = lipschitz(g, 4096) / big_r * iabs;
    return out;
}

} // namespace msh
