#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "msh/errors.hpp"

namespace msh {

/// Deterministic pairwise (binary-counter) summation.  Values are merged in
/// a fixed tree order independent of how the caller schedules work, so the
/// result depends only on the sequence of pushed values.
class PairwiseAccumulator {
  public:
    void push(double v) {
        std::uint64_t c = count_++;
        for (; c & 1U; c >>= 1) {
            v += stack_.back();
            stack_.pop_back();
        }
        stack_.push_back(v);
    }

    double total() const {
        double s = 0.0;
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) s += *it;
        return s;
    }

    std::uint64_t count() const { return count_; }

  private:
    std::vector<double> stack_;
    std::uint64_t count_ = 0;
};

namespace detail {

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
template <int Order>
struct GaussLegendre {
    std::array<double, Order> node{};
    std::array<double, Order> weight{};

    GaussLegendre() {
        const int n = Order;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (x * p0 - p1) / (x * x - 1.0);
                double dx = p0 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            node[i] = -x;
            node[n - 1 - i] = x;
            weight[i] = 2.0 / ((1.0 - x * x) * pp * pp);
            weight[n - 1 - i] = weight[i];
        }
    }
};

inline const GaussLegendre<8>& gl8() {
    static const GaussLegendre<8> tab;
    return tab;
}

} // namespace detail

/// Budget guard for composite rules: 1e8 integrand evaluations per call.
inline constexpr std::uint64_t kPanelEvalBudget = 100'000'000;

/// Composite 8-point Gauss-Legendre over [a,b] with `panels` equal panels.
/// Panel sums are combined with the deterministic pairwise tree.
template <typename F>
double integrate_composite(F&& f, double a, double b, std::uint64_t panels) {
    if (panels == 0) throw argument_error("integrate_composite: zero panels");
    if (panels * 8 > kPanelEvalBudget)
        throw resource_error("integrate_composite: panel budget exceeded (" +
                             std::to_string(panels * 8) + " evaluations > 1e8); reduce the scale index or grid density");
    const auto& gl = detail::gl8();
    const double h = (b - a) / static_cast<double>(panels);
    PairwiseAccumulator acc;
    for (std::uint64_t p = 0; p < panels; ++p) {
        const double lo = a + h * static_cast<double>(p);
        const double mid = lo + 0.5 * h;
        double s = 0.0;
        for (int i = 0; i < 8; ++i) s += gl.weight[i] * f(mid + 0.5 * h * gl.node[i]);
        acc.push(0.5 * h * s);
    }
    return acc.total();
}

/// Same rule evaluated twice (panels and 2*panels); the difference is a
/// practical error estimate for smooth integrands.
template <typename F>
std::pair<double, double> integrate_with_error(F&& f, double a, double b, std::uint64_t panels) {
    const double coarse = integrate_composite(f, a, b, panels);
    const double fine = integrate_composite(f, a, b, 2 * panels);
    return {fine, std::abs(fine - coarse)};
}

} // namespace msh
