#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "msh/errors.hpp"
#include "msh/potential.hpp"

namespace msh {

/// Strictly positive coefficient lambda on [0,1], held as piecewise-constant
/// cells with its cumulative resistance m(x) = int_0^x dz/lambda(z).  Trig
/// representations are reduced to >= 2^14 cells (midpoint values) with the
/// reduction error reported, which keeps every Green-function integral exact
/// per cell.
class Coefficient {
  public:
    static Coefficient constant(double value) {
        if (!(value > 0.0)) throw argument_error("Coefficient: lambda must be strictly positive");
        Coefficient c;
        c.cells_.assign(1, value);
        c.reduction_error_ = 0.0;
        c.build();
        return c;
    }

    static Coefficient piecewise(std::vector<double> cells) {
        if (cells.empty()) throw argument_error("Coefficient: empty cell list");
        for (double v : cells)
            if (!(v > 0.0)) throw argument_error("Coefficient: lambda must be strictly positive");
        Coefficient c;
        c.cells_ = std::move(cells);
        c.reduction_error_ = 0.0;
        c.build();
        return c;
    }

    /// lambda(x) = base + U(x); grid-checked positivity.
    static Coefficient from_trig(const PeriodicPotential& u, double base, int cells = 1 << 14) {
        cells = std::max(cells, 1 << 14);
        Coefficient c;
        c.cells_.resize(static_cast<std::size_t>(cells));
        double err = 0.0;
        for (int i = 0; i < cells; ++i) {
            const double lo = static_cast<double>(i) / cells;
            const double hi = static_cast<double>(i + 1) / cells;
            const double vm = base + u.value(0.5 * (lo + hi));
            const double vl = base + u.value(lo);
            const double vh = base + u.value(hi);
            if (!(vl > 0.0 && vm > 0.0 && vh > 0.0))
                throw argument_error("Coefficient: lambda must stay strictly positive on [0,1]");
            c.cells_[static_cast<std::size_t>(i)] = vm;
            err = std::max(err, std::max(std::abs(vl - vm), std::abs(vh - vm)));
        }
        c.reduction_error_ = err;
        c.build();
        return c;
    }

    std::size_t cell_count() const { return cells_.size(); }
    double reduction_error() const { return reduction_error_; }
    double total_resistance() const { return m_.back(); }

    double value(double x) const { return cells_[cell_index(x)]; }

    /// m(x) = int_0^x dz / lambda(z); strictly increasing, m(0) = 0.
    double resistance(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return m_.back();
        const std::size_t i = cell_index(x);
        const double cell_lo = static_cast<double>(i) / static_cast<double>(cells_.size());
        return m_[i] + (x - cell_lo) / cells_[i];
    }

    double min_value() const { return *std::min_element(cells_.begin(), cells_.end()); }
    double max_value() const { return *std::max_element(cells_.begin(), cells_.end()); }

  private:
    void build() {
        m_.assign(cells_.size() + 1, 0.0);
        const double h = 1.0 / static_cast<double>(cells_.size());
        for (std::size_t i = 0; i < cells_.size(); ++i) m_[i + 1] = m_[i] + h / cells_[i];
    }

    std::size_t cell_index(double x) const {
        const auto n = static_cast<double>(cells_.size());
        auto i = static_cast<std::int64_t>(std::floor(x * n));
        i = std::clamp<std::int64_t>(i, 0, static_cast<std::int64_t>(cells_.size()) - 1);
        return static_cast<std::size_t>(i);
    }

    std::vector<double> cells_;
    std::vector<double> m_;
    double reduction_error_ = 0.0;
};

/// Green function of -d/dx(lambda d/dx) on (0,1), Dirichlet ends:
/// G(x,y) = m(x^y) (m(1) - m(x v y)) / m(1).
inline double green_value(const Coefficient& lambda, double x, double y) {
    if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0))
        throw argument_error("green_value: arguments must be interior to (0,1)");
    const double s = lambda.resistance(std::min(x, y));
    const double u = lambda.resistance(std::max(x, y));
    const double m1 = lambda.total_resistance();
    return s * (m1 - u) / m1;
}

/// int lambda |G'(x,.) G'(y,.)| / int lambda G'(x,.) G'(y,.).
/// lambda G'(x,.) is piecewise constant with a single jump at x, so both
/// integrals reduce to the closed form; the ratio equals
/// 1 + 2 (m(x v y) - m(x ^ y))/m(1) and never exceeds 3.
inline double tiger_ratio(const Coefficient& lambda, double x, double y) {
    if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0))
        throw argument_error("tiger_ratio: arguments must be interior to (0,1)");
    if (x == y) throw argument_error("tiger_ratio: x and y must differ");
    const double m1 = lambda.total_resistance();
    const double s = lambda.resistance(std::min(x, y)) / m1;
    const double u = lambda.resistance(std::max(x, y)) / m1;
    // flux constants: lambda G'(x,z) = (1-s) for z < x, -s for z > x (normalized)
    const double core = (1.0 - s) * (1.0 - u) * s; // (0, x^y)
    const double mid = s * (1.0 - u) * (u - s);    // (x^y, x v y), negative sign pattern
    const double outer = s * u * (1.0 - u);        // (x v y, 1)
    const double denom = core - mid + outer;
    const double num = core + mid + outer;
    return num / denom;
}

struct StabilityReport {
    double s = 1.0;            // sup max(mu/lambda, lambda/mu)
    double worst_margin = 0.0; // min over pairs of slack in the exponent-3 bracket (log scale)
    bool violated = false;
    double worst_ratio = 1.0;
};

/// Checks S^{-3} <= G_mu/G_lambda <= S^3 on the sampled pairs.
inline StabilityReport stability_ratio(const Coefficient& lambda, const Coefficient& mu,
                                       const std::vector<std::pair<double, double>>& pairs) {
    StabilityReport rep;
    const std::size_t cells = std::max(lambda.cell_count(), mu.cell_count());
    double s = 1.0;
    for (std::size_t i = 0; i < cells; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(cells);
        const double a = lambda.value(x), b = mu.value(x);
        s = std::max(s, std::max(a / b, b / a));
    }
    rep.s = s;
    const double cap = 3.0 * std::log(s);
    rep.worst_margin = HUGE_VAL;
    for (const auto& [x, y] : pairs) {
        const double g = std::log(green_value(mu, x, y) / green_value(lambda, x, y));
        const double margin = cap - std::abs(g);
        if (margin < rep.worst_margin) {
            rep.worst_margin = margin;
            rep.worst_ratio = std::exp(g);
        }
        if (margin < 0.0) rep.violated = true;
    }
    return rep;
}

} // namespace msh
