#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "msh/errors.hpp"

namespace msh {

/// One harmonic a*cos(2*pi*k*x) + b*sin(2*pi*k*x) of a 1-periodic potential.
/// Frequencies are integers so periodicity is exact in floating point.
struct Harmonic {
    int k = 1;
    double a = 0.0; // cosine coefficient
    double b = 0.0; // sine coefficient
};

/// Smooth 1-periodic potential given by a finite trigonometric series.
/// The constant offset is fixed at construction so that the value at 0 is 0.
class PeriodicPotential {
  public:
    PeriodicPotential() = default;

    explicit PeriodicPotential(std::vector<Harmonic> harmonics)
        : harmonics_(std::move(harmonics)) {
        for (const auto& h : harmonics_) {
            if (h.k < 1) throw argument_error("PeriodicPotential: harmonic frequency must be >= 1");
            offset_ -= h.a; // cos(0)=1, sin(0)=0
        }
    }

    static PeriodicPotential zero() { return PeriodicPotential{}; }

    /// sin(2*pi*k*x) with unit amplitude.
    static PeriodicPotential sine(int k = 1, double amplitude = 1.0) {
        return PeriodicPotential({Harmonic{k, 0.0, amplitude}});
    }

    static PeriodicPotential cosine(int k = 1, double amplitude = 1.0) {
        return PeriodicPotential({Harmonic{k, amplitude, 0.0}});
    }

    double value(double x) const {
        double s = offset_;
        for (const auto& h : harmonics_) {
            const double t = 2.0 * M_PI * h.k * x;
            s += h.a * std::cos(t) + h.b * std::sin(t);
        }
        return s;
    }

    double derivative(double x) const {
        double s = 0.0;
        for (const auto& h : harmonics_) {
            const double w = 2.0 * M_PI * h.k;
            const double t = w * x;
            s += w * (-h.a * std::sin(t) + h.b * std::cos(t));
        }
        return s;
    }

    const std::vector<Harmonic>& harmonics() const { return harmonics_; }
    double offset() const { return offset_; }

    int max_frequency() const {
        int m = 0;
        for (const auto& h : harmonics_) m = std::max(m, h.k);
        return m;
    }

    bool is_zero() const { return harmonics_.empty(); }

    /// 2 * sum |coefficients|; an a-priori bound on Osc(U).
    double coefficient_bound() const {
        double s = 0.0;
        for (const auto& h : harmonics_) s += std::abs(h.a) + std::abs(h.b);
        return 2.0 * s;
    }

    /// Potential scaled by a constant factor (used for the 2U / -2U pressures).
    PeriodicPotential scaled(double factor) const {
        std::vector<Harmonic> hs = harmonics_;
        for (auto& h : hs) {
            h.a *= factor;
            h.b *= factor;
        }
        return PeriodicPotential(std::move(hs));
    }

    /// Translated potential U(. + s), re-offset so the value at 0 is 0 again.
    PeriodicPotential translated(double shift) const {
        std::vector<Harmonic> hs;
        hs.reserve(harmonics_.size());
        for (const auto& h : harmonics_) {
            const double t = 2.0 * M_PI * h.k * shift;
            // a cos(w(x+s)) + b sin(w(x+s)) = (a cos ws + b sin ws) cos wx + (b cos ws - a sin ws) sin wx
            hs.push_back(Harmonic{h.k, h.a * std::cos(t) + h.b * std::sin(t),
                                  h.b * std::cos(t) - h.a * std::sin(t)});
        }
        return PeriodicPotential(std::move(hs));
    }

  private:
    std::vector<Harmonic> harmonics_;
    double offset_ = 0.0;
};

/// Grid sup of a scalar function over [0,1), refined by golden-section search
/// around the best grid cells.  Exact enough for band-limited trig series.
template <typename F>
double refined_sup(F&& f, int grid_points) {
    if (grid_points < 8) grid_points = 8;
    double best = -HUGE_VAL;
    int best_i = 0;
    for (int i = 0; i < grid_points; ++i) {
        const double v = f(static_cast<double>(i) / grid_points);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    // golden-section polish on the bracketing cells
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = (best_i - 1.0) / grid_points, hi = (best_i + 1.0) / grid_points;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80; ++it) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f(d);
        }
    }
    return std::max(best, std::max(fc, fd));
}

/// Oscillation sup U - inf U over one period.
inline double oscillation(const PeriodicPotential& u, int grid_points) {
    if (u.is_zero()) return 0.0;
    const int n = std::max(grid_points, 1024 * std::max(1, u.max_frequency()));
    const double hi = refined_sup([&](double x) { return u.value(x); }, n);
    const double lo = -refined_sup([&](double x) { return -u.value(x); }, n);
    return hi - lo;
}

/// sup |U'| over one period (the Lipschitz constant of U on the torus).
inline double lipschitz(const PeriodicPotential& u, int grid_points) {
    if (u.is_zero()) return 0.0;
    const int n = std::max(grid_points, 1024 * std::max(1, u.max_frequency()));
    return refined_sup([&](double x) { return std::abs(u.derivative(x)); }, n);
}

enum class ScheduleKind { Explicit, Geometric, Stretched };

/// Integer scale schedule: radii R_0=1, R_k = prod_{j<=k} r_j with r_j >= 2.
class ScaleSchedule {
  public:
    ScaleSchedule() = default;

    static ScaleSchedule explicit_ratios(std::vector<std::int64_t> ratios) {
        ScaleSchedule s;
        s.kind_ = ScheduleKind::Explicit;
        s.ratios_ = std::move(ratios);
        s.validate_and_fill();
        return s;
    }

    static ScaleSchedule geometric(std::int64_t rho, int levels) {
        ScaleSchedule s;
        s.kind_ = ScheduleKind::Geometric;
        s.rho_ = static_cast<double>(rho);
        s.ratios_.assign(static_cast<std::size_t>(levels), rho);
        s.validate_and_fill();
        return s;
    }

    /// Fast-separation schedule R_n = R_{n-1} * round(rho^{n^alpha} / R_{n-1}).
    static ScaleSchedule stretched(double rho, double alpha, int levels) {
        if (alpha <= 1.0) throw argument_error("ScaleSchedule: stretched schedule needs alpha > 1");
        ScaleSchedule s;
        s.kind_ = ScheduleKind::Stretched;
        s.rho_ = rho;
        s.alpha_ = alpha;
        double r_prev = 1.0;
        for (int n = 1; n <= levels; ++n) {
            const double target = std::pow(rho, std::pow(static_cast<double>(n), alpha));
            const auto ratio = static_cast<std::int64_t>(std::llround(target / r_prev));
            s.ratios_.push_back(std::max<std::int64_t>(ratio, 2));
            r_prev *= static_cast<double>(s.ratios_.back());
        }
        s.validate_and_fill();
        return s;
    }

    ScheduleKind kind() const { return kind_; }
    double rho() const { return rho_; }
    double alpha() const { return alpha_; }

    /// Number of ratios the schedule carries (radii exist for 0..levels()).
    int levels() const { return static_cast<int>(ratios_.size()); }

    std::int64_t ratio(int k) const { // r_k, k >= 1
        if (k < 1 || k > levels()) throw argument_error("ScaleSchedule: ratio index out of range");
        return ratios_[static_cast<std::size_t>(k - 1)];
    }

    double radius(int k) const { // R_k
        if (k < 0 || k > levels()) throw argument_error("ScaleSchedule: radius index out of range");
        return radii_[static_cast<std::size_t>(k)];
    }

    double rho_min() const { return rho_min_; }
    double rho_max() const { return rho_max_; }
    const std::vector<std::int64_t>& ratios() const { return ratios_; }

  private:
    void validate_and_fill() {
        if (ratios_.empty()) throw argument_error("ScaleSchedule: at least one ratio required");
        radii_.assign(1, 1.0);
        rho_min_ = HUGE_VAL;
        rho_max_ = 0.0;
        for (std::int64_t r : ratios_) {
            if (r < 2) throw argument_error("ScaleSchedule: every ratio must be an integer >= 2");
            rho_min_ = std::min(rho_min_, static_cast<double>(r));
            rho_max_ = std::max(rho_max_, static_cast<double>(r));
            radii_.push_back(radii_.back() * static_cast<double>(r));
        }
    }

    ScheduleKind kind_ = ScheduleKind::Explicit;
    std::vector<std::int64_t> ratios_;
    std::vector<double> radii_{1.0};
    double rho_ = 0.0, alpha_ = 0.0;
    double rho_min_ = HUGE_VAL, rho_max_ = 0.0;
};

/// Model constants of the multi-scale potential.  K0/K1 are tight grid
/// estimates (golden-section polished); the lambda bounds come from the
/// per-scale effective diffusivities and are filled by `model_constants`.
struct ModelConstants {
    double k0 = 0.0;         // sup_k Osc(U_k)
    double k1 = 0.0;         // sup_k sup |U_k'|
    double lambda_min = 1.0; // inf_k D(U_k)
    double lambda_max = 1.0; // sup_k D(U_k)
};

/// V(x) = sum_{k=0}^{n_max} U_k(x / R_k).  The potentials list is cycled when
/// shorter than n_max+1.  Immutable after construction.
class MultiScalePotential {
  public:
    MultiScalePotential(std::vector<PeriodicPotential> potentials, ScaleSchedule schedule, int n_max)
        : potentials_(std::move(potentials)), schedule_(std::move(schedule)), n_max_(n_max) {
        if (potentials_.empty()) throw argument_error("MultiScalePotential: needs at least one potential");
        if (n_max_ < 0) throw argument_error("MultiScalePotential: n_max must be >= 0");
        if (n_max_ > schedule_.levels())
            throw argument_error("MultiScalePotential: schedule too short for n_max");
    }

    /// Self-similar helper: the same U at every scale, r_k = rho.
    static MultiScalePotential self_similar(const PeriodicPotential& u, std::int64_t rho, int n_max) {
        return MultiScalePotential({u}, ScaleSchedule::geometric(rho, std::max(1, n_max)), n_max);
    }

    const PeriodicPotential& scale_potential(int k) const {
        return potentials_[static_cast<std::size_t>(k) % potentials_.size()];
    }

    const ScaleSchedule& schedule() const { return schedule_; }
    int n_max() const { return n_max_; }
    const std::vector<PeriodicPotential>& potentials() const { return potentials_; }

    int max_frequency() const {
        int m = 1;
        for (const auto& u : potentials_) m = std::max(m, u.max_frequency());
        return m;
    }

    bool is_zero() const {
        for (const auto& u : potentials_) {
            if (!u.is_zero()) return false;
        }
        return true;
    }

  private:
    std::vector<PeriodicPotential> potentials_;
    ScaleSchedule schedule_;
    int n_max_;
};

/// Finite slice V_{n_lo}^{n_hi}(x) = sum_{k=n_lo}^{n_hi} U_k(x/R_k).
/// Exact trigonometric evaluation, no interpolation.
inline double eval_potential(const MultiScalePotential& msp, double x, int n_lo, int n_hi) {
    if (n_lo < 0 || n_lo > n_hi || n_hi > msp.n_max())
        throw argument_error("eval_potential: slice indices must satisfy 0 <= n_lo <= n_hi <= n_max");
    double s = 0.0;
    for (int k = n_lo; k <= n_hi; ++k)
        s += msp.scale_potential(k).value(x / msp.schedule().radius(k));
    return s;
}

inline double eval_potential(const MultiScalePotential& msp, double x) {
    return eval_potential(msp, x, 0, msp.n_max());
}

/// Term-wise derivative of the slice; each term picks up a 1/R_k factor.
inline double eval_gradient(const MultiScalePotential& msp, double x, int n_lo, int n_hi) {
    if (n_lo < 0 || n_lo > n_hi || n_hi > msp.n_max())
        throw argument_error("eval_gradient: slice indices must satisfy 0 <= n_lo <= n_hi <= n_max");
    double s = 0.0;
    for (int k = n_lo; k <= n_hi; ++k) {
        const double r = msp.schedule().radius(k);
        s += msp.scale_potential(k).derivative(x / r) / r;
    }
    return s;
}

inline double eval_gradient(const MultiScalePotential& msp, double x) {
    return eval_gradient(msp, x, 0, msp.n_max());
}

/// V_0^n rescaled to the unit torus: V_0^n(R_n x) is itself a finite trig
/// series because every R_k divides R_n, so frequencies k_h R_n/R_k stay
/// integral.
inline PeriodicPotential unit_torus_slice(const MultiScalePotential& msp, int n) {
    if (n < 0 || n > msp.n_max()) throw argument_error("unit_torus_slice: n out of range");
    std::vector<Harmonic> hs;
    for (int k = 0; k <= n; ++k) {
        const double mult = msp.schedule().radius(n) / msp.schedule().radius(k);
        for (const auto& h : msp.scale_potential(k).harmonics()) {
            const double freq = h.k * mult;
            if (freq > 2.0e9) throw resource_error("unit_torus_slice: frequency overflow");
            hs.push_back(Harmonic{static_cast<int>(freq), h.a, h.b});
        }
    }
    return PeriodicPotential(std::move(hs));
}

/// K0 and K1 over the distinct potentials of the cycle.  Lambda bounds are
/// left at 1 here; `model_constants` in homogenization.hpp fills them in.
inline ModelConstants potential_constants(const MultiScalePotential& msp, int grid_points = 4096) {
    if (grid_points < 1024) throw argument_error("potential_constants: grid_points must be >= 1024");
    ModelConstants c;
    for (const auto& u : msp.potentials()) {
        c.k0 = std::max(c.k0, oscillation(u, grid_points));
        c.k1 = std::max(c.k1, lipschitz(u, grid_points));
    }
    return c;
}

struct TailOscillationBound {
    double value = 0.0;         // Osc(U_{n+1}) + r * sum_{k>=n+2} K1/R_k
    double uniform_bound = 0.0; // K0 + K1/(rho_min - 1)
};

/// Oscillation over B(0,r) of the tail V_{n+1}^infty: the scale n+1 enters
/// through its full oscillation and the scales >= n+2 through their gradient
/// sums.  Requires r < R_{n+1} so the tail really is a perturbation.
inline TailOscillationBound tail_oscillation_bound(const MultiScalePotential& msp, double r, int n,
                                                   int grid_points = 4096) {
    const auto& sched = msp.schedule();
    if (n + 1 > sched.levels() || !(sched.radius(n + 1) > r))
        throw argument_error("tail_oscillation_bound: requires R_{n+1} > r");
    const ModelConstants c = potential_constants(msp, grid_points);

    TailOscillationBound out;
    out.uniform_bound = c.k0 + c.k1 / (sched.rho_min() - 1.0);
    if (msp.is_zero()) return out;

    double osc_next = (n + 1 <= msp.n_max()) ? oscillation(msp.scale_potential(n + 1), grid_points) : 0.0;
    double grad_sum = 0.0;
    for (int k = n + 2; k <= msp.n_max(); ++k) grad_sum += c.k1 / sched.radius(k);
    out.value = osc_next + r * grad_sum;
    return out;
}

/// Truncation error bound of dropping V_{n_max+1}^infty over |x| <= box:
/// K1 * box / R_{n_max+1} * rho_min/(rho_min - 1).  When the schedule stores
/// no ratio past n_max, the first omitted radius is extrapolated with rho_min.
inline double tail_truncation_bound(const MultiScalePotential& msp, double box, int grid_points = 4096) {
    const ModelConstants c = potential_constants(msp, grid_points);
    const auto& sched = msp.schedule();
    const double rho = sched.rho_min();
    const double r_next = (msp.n_max() + 1 <= sched.levels()) ? sched.radius(msp.n_max() + 1)
                                                              : sched.radius(msp.n_max()) * rho;
    return c.k1 * box / r_next * rho / (rho - 1.0);
}

} // namespace msh
