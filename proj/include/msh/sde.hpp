#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "msh/errors.hpp"
#include "msh/homogenization.hpp"
#include "msh/potential.hpp"
#include "msh/rng.hpp"

namespace msh {

/// Monte Carlo configuration for dy_t = dw_t - V'(y_t) dt, y_0 = 0.
struct SimulationPlan {
    double dt = 1e-3;
    std::int64_t n_paths = 1000;
    std::uint64_t master_seed = 0;
    double horizon = 0.0; // 0 = no explicit horizon (exit-time runs)
    bool bridge_correction = true;
    int threads = 1;
};

struct ExitTimeSummary {
    double radius = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_exited = 0;
    std::int64_t n_truncated = 0;
    bool validity_warning = false; // truncated fraction > 1%
};

struct MsdPoint {
    double t = 0.0;
    double msd = 0.0;       // estimate of E[y_t^2]
    double std_error = 0.0; // standard error of the estimate
    double mean = 0.0;      // estimate of E[y_t] (symmetry diagnostics)
    double mean_std_error = 0.0;
};

struct MsdSeries {
    std::vector<MsdPoint> points;
};

struct TailPoint {
    double h = 0.0;
    double p = 0.0; // P(|y_t| >= h)
    double lo = 0.0, hi = 0.0;
    std::int64_t exceedances = 0;
    bool widened = false; // fewer than 10 exceedances
};

struct TailEstimate {
    double t = 0.0;
    std::vector<TailPoint> points;
};

namespace detail {

/// Drift -V'(y) evaluator.  The full potential is periodic with period
/// R_{n_max}, so a uniform lookup table with linear interpolation covers the
/// whole line; oversized tables fall back to exact evaluation.  The table
/// path is division free.
class DriftField {
  public:
    enum class Kind { Zero, Direct, Table };

    explicit DriftField(const MultiScalePotential& msp) : msp_(&msp) {
        if (msp.is_zero()) {
            kind_ = Kind::Zero;
            return;
        }
        period_ = msp.schedule().radius(msp.n_max());
        inv_period_ = 1.0 / period_;
        const std::int64_t per_unit = 1024LL * msp.max_frequency();
        const auto nodes = static_cast<std::int64_t>(period_ * static_cast<double>(per_unit));
        if (nodes > (1LL << 23)) {
            kind_ = Kind::Direct;
            return;
        }
        kind_ = Kind::Table;
        table_.resize(static_cast<std::size_t>(nodes) + 1);
        last_cell_ = static_cast<std::size_t>(nodes) - 1;
        inv_h_ = static_cast<double>(nodes) / period_;
        const double h = period_ / static_cast<double>(nodes);
        for (std::int64_t i = 0; i <= nodes; ++i)
            table_[static_cast<std::size_t>(i)] =
                -eval_gradient(*msp_, static_cast<double>(i) * h);
    }

    bool is_zero() const { return kind_ == Kind::Zero; }
    Kind kind() const { return kind_; }

    double operator()(double y) const {
        switch (kind_) {
            case Kind::Zero: return 0.0;
            case Kind::Direct: return -eval_gradient(*msp_, y);
            case Kind::Table: return table_lookup(y);
        }
        return 0.0;
    }

    double table_lookup(double y) const {
        double u = (y - period_ * std::floor(y * inv_period_)) * inv_h_;
        auto i = static_cast<std::size_t>(u);
        if (i > last_cell_) i = last_cell_;
        const double f = u - static_cast<double>(i);
        return table_[i] + f * (table_[i + 1] - table_[i]);
    }

    double direct(double y) const { return -eval_gradient(*msp_, y); }

  private:
    Kind kind_ = Kind::Zero;
    const MultiScalePotential* msp_;
    double period_ = 1.0;
    double inv_period_ = 1.0;
    double inv_h_ = 1.0;
    std::size_t last_cell_ = 0;
    std::vector<double> table_;
};

/// Dispatches a generic callable with a zero-overhead drift functor matching
/// the field's kind, so hot loops inline the drift evaluation.
template <typename Body>
void with_drift(const DriftField& field, Body&& body) {
    switch (field.kind()) {
        case DriftField::Kind::Zero:
            body([](double) { return 0.0; });
            return;
        case DriftField::Kind::Table:
            body([&field](double y) { return field.table_lookup(y); });
            return;
        case DriftField::Kind::Direct:
            body([&field](double y) { return field.direct(y); });
            return;
    }
}

/// Finest spatial wavelength of the potential: min_k R_k / maxfreq(U_k).
inline double finest_period(const MultiScalePotential& msp) {
    double finest = HUGE_VAL;
    for (int k = 0; k <= msp.n_max(); ++k) {
        const auto& u = msp.scale_potential(k);
        if (u.is_zero()) continue;
        finest = std::min(finest, msp.schedule().radius(k) / static_cast<double>(u.max_frequency()));
    }
    return finest;
}

inline void validate_plan(const MultiScalePotential& msp, const SimulationPlan& plan) {
    if (!(plan.dt > 0.0)) throw argument_error("SimulationPlan: dt must be positive");
    if (plan.n_paths < 1) throw argument_error("SimulationPlan: n_paths must be >= 1");
    const double fp = finest_period(msp);
    if (std::isfinite(fp) && plan.dt > fp * fp / 100.0 * (1.0 + 1e-12))
        throw argument_error("SimulationPlan: dt must be <= (finest period)^2/100 = " +
                             std::to_string(fp * fp / 100.0));
}

/// Runs chunk indices [0, n_chunks) on `threads` workers.  Work stealing via
/// an atomic counter; each chunk writes only its own slot, so results are
/// independent of the schedule.
template <typename Fn>
void run_chunks(std::int64_t n_chunks, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || n_chunks <= 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::int64_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            fn(c);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

/// Paths per chunk: a pure function of n_paths (never of the worker count),
/// so the fixed-order chunk reduction gives identical results for any
/// thread count.  Small runs get one-path chunks to spread long paths.
inline std::int64_t chunk_paths(std::int64_t n_paths) {
    return std::clamp<std::int64_t>(n_paths / 64, 1, 256);
}

struct PathOutcome {
    double time = 0.0;
    bool exited = false;
};

/// One Euler-Maruyama path until exit from (-r, r), with optional
/// Brownian-bridge sub-step crossing detection.
template <typename Drift>
PathOutcome run_exit_path(CounterRng& rng, const Drift& drift, double r, double dt, bool bridge,
                          double max_time) {
    const double sqdt = std::sqrt(dt);
    const double guard = 8.0 * sqdt; // bridge probability is negligible farther out
    const double inv_dt = 1.0 / dt;
    const auto max_steps =
        static_cast<std::int64_t>(std::min(max_time * inv_dt, 4.0e18)) + 1;
    double y = 0.0;
    for (std::int64_t step = 1; step <= max_steps; ++step) {
        const double ynew = y + drift(y) * dt + sqdt * rng.next_gaussian();
        if (ynew >= r || ynew <= -r) return {static_cast<double>(step) * dt, true};
        if (bridge) {
            double p = 0.0;
            if (r - std::max(y, ynew) < guard)
                p += std::exp(-2.0 * (r - y) * (r - ynew) * inv_dt);
            if (std::min(y, ynew) + r < guard)
                p += std::exp(-2.0 * (r + y) * (r + ynew) * inv_dt);
            if (p > 0.0 && rng.next_uniform() < p) return {static_cast<double>(step) * dt, true};
        }
        y = ynew;
    }
    return {static_cast<double>(max_steps) * dt, false};
}

} // namespace detail

/// Mean exit time from B(0,r) for each radius.  Per-path RNG streams are
/// derived from (master_seed, path_index); chunk partials are reduced in a
/// fixed order, so the output is independent of the worker count.
inline std::vector<ExitTimeSummary> sample_exit_times(const MultiScalePotential& msp,
                                                      const SimulationPlan& plan,
                                                      const std::vector<double>& radii) {
    detail::validate_plan(msp, plan);
    for (double r : radii)
        if (!(r > 0.0)) throw argument_error("sample_exit_times: radii must be positive");

    const detail::DriftField drift(msp);
    // truncation policy: 1e4 * r^2 / D_lower simulated time units
    double d_lower = 1.0;
    if (!msp.is_zero()) {
        const ModelConstants c = model_constants(msp);
        d_lower = diffusivity_bounds(msp.n_max() + 1, c, msp.schedule()).first;
    }

    std::vector<ExitTimeSummary> out;
    const std::int64_t per_chunk = detail::chunk_paths(plan.n_paths);
    const std::int64_t n_chunks = (plan.n_paths + per_chunk - 1) / per_chunk;

    std::uint64_t radius_index = 0;
    for (double r : radii) {
        double cap = 1e4 * r * r / std::max(d_lower, 1e-300);
        if (plan.horizon > 0.0) cap = std::min(cap, plan.horizon);

        struct Partial {
            double sum = 0.0, sumsq = 0.0;
            std::int64_t exited = 0, truncated = 0;
        };
        std::vector<Partial> partials(static_cast<std::size_t>(n_chunks));

        detail::with_drift(drift, [&](auto drift_fn) {
            detail::run_chunks(n_chunks, plan.threads, [&](std::int64_t chunk) {
                Partial p;
                const std::int64_t lo = chunk * per_chunk;
                const std::int64_t hi = std::min(plan.n_paths, lo + per_chunk);
                for (std::int64_t i = lo; i < hi; ++i) {
                    // distinct radii use disjoint stream indices
                    CounterRng rng(plan.master_seed,
                                   static_cast<std::uint64_t>(i) + (radius_index << 40));
                    const auto res = detail::run_exit_path(rng, drift_fn, r, plan.dt,
                                                           plan.bridge_correction, cap);
                    if (res.exited) {
                        p.sum += res.time;
                        p.sumsq += res.time * res.time;
                        p.exited++;
                    } else {
                        p.truncated++;
                    }
                }
                partials[static_cast<std::size_t>(chunk)] = p;
            });
        });

        ExitTimeSummary s;
        s.radius = r;
        double sum = 0.0, sumsq = 0.0;
        for (const auto& p : partials) {
            sum += p.sum;
            sumsq += p.sumsq;
            s.n_exited += p.exited;
            s.n_truncated += p.truncated;
        }
        if (s.n_exited > 0) {
            s.mean = sum / static_cast<double>(s.n_exited);
            if (s.n_exited > 1) {
                const double var = std::max(
                    0.0, (sumsq - sum * sum / static_cast<double>(s.n_exited)) /
                             static_cast<double>(s.n_exited - 1));
                s.std_error = std::sqrt(var / static_cast<double>(s.n_exited));
            }
        }
        s.validity_warning =
            s.n_truncated * 100 > plan.n_paths; // > 1%
        out.push_back(s);
        radius_index++;
    }
    return out;
}

/// E[y_t^2] recorded at the given checkpoints (all <= plan.horizon).
inline MsdSeries simulate_msd(const MultiScalePotential& msp, const SimulationPlan& plan,
                              const std::vector<double>& checkpoints) {
    detail::validate_plan(msp, plan);
    if (!(plan.horizon > 0.0)) throw argument_error("simulate_msd: plan.horizon must be positive");
    if (checkpoints.empty()) throw argument_error("simulate_msd: no checkpoints");
    std::vector<std::int64_t> steps;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const double t = checkpoints[i];
        if (t > plan.horizon * (1.0 + 1e-12))
            throw argument_error("simulate_msd: checkpoint beyond horizon");
        if (i > 0 && !(t > checkpoints[i - 1]))
            throw argument_error("simulate_msd: checkpoints must be strictly increasing");
        steps.push_back(std::max<std::int64_t>(1, std::llround(t / plan.dt)));
    }
    const std::int64_t total_steps = steps.back();
    const detail::DriftField drift(msp);
    const std::size_t nc = checkpoints.size();

    struct Partial {
        std::vector<double> s2, s4, s1;
        explicit Partial(std::size_t n) : s2(n, 0.0), s4(n, 0.0), s1(n, 0.0) {}
    };
    const std::int64_t per_chunk = detail::chunk_paths(plan.n_paths);
    const std::int64_t n_chunks = (plan.n_paths + per_chunk - 1) / per_chunk;
    std::vector<Partial> partials(static_cast<std::size_t>(n_chunks), Partial(nc));

    detail::with_drift(drift, [&](auto drift_fn) {
        detail::run_chunks(n_chunks, plan.threads, [&](std::int64_t chunk) {
            Partial& p = partials[static_cast<std::size_t>(chunk)];
            const std::int64_t lo = chunk * per_chunk;
            const std::int64_t hi = std::min(plan.n_paths, lo + per_chunk);
            const double sqdt = std::sqrt(plan.dt);
            for (std::int64_t i = lo; i < hi; ++i) {
                CounterRng rng(plan.master_seed, static_cast<std::uint64_t>(i));
                double y = 0.0;
                std::size_t next_cp = 0;
                for (std::int64_t step = 1; step <= total_steps && next_cp < nc; ++step) {
                    y += drift_fn(y) * plan.dt + sqdt * rng.next_gaussian();
                    while (next_cp < nc && steps[next_cp] == step) {
                        const double y2 = y * y;
                        p.s2[next_cp] += y2;
                        p.s4[next_cp] += y2 * y2;
                        p.s1[next_cp] += y;
                        next_cp++;
                    }
                }
            }
        });
    });

    MsdSeries series;
    const auto n = static_cast<double>(plan.n_paths);
    for (std::size_t c = 0; c < nc; ++c) {
        double s2 = 0.0, s4 = 0.0, s1 = 0.0;
        for (const auto& p : partials) {
            s2 += p.s2[c];
            s4 += p.s4[c];
            s1 += p.s1[c];
        }
        MsdPoint pt;
        pt.t = checkpoints[c];
        pt.msd = s2 / n;
        pt.std_error = std::sqrt(std::max(0.0, s4 / n - pt.msd * pt.msd) / n);
        pt.mean = s1 / n;
        pt.mean_std_error = std::sqrt(std::max(0.0, s2 / n - pt.mean * pt.mean) / n);
        series.points.push_back(pt);
    }
    return series;
}

/// Empirical survival function P(|y_t| >= h) with Wilson intervals.
inline TailEstimate estimate_tail(const MultiScalePotential& msp, const SimulationPlan& plan,
                                  double t, const std::vector<double>& h_grid) {
    detail::validate_plan(msp, plan);
    if (!(t > 0.0)) throw argument_error("estimate_tail: t must be positive");
    std::vector<double> hs = h_grid;
    std::sort(hs.begin(), hs.end());
    const auto total_steps = std::max<std::int64_t>(1, std::llround(t / plan.dt));
    const detail::DriftField drift(msp);

    const std::int64_t per_chunk = detail::chunk_paths(plan.n_paths);
    const std::int64_t n_chunks = (plan.n_paths + per_chunk - 1) / per_chunk;
    std::vector<std::vector<std::int64_t>> partials(static_cast<std::size_t>(n_chunks),
                                                    std::vector<std::int64_t>(hs.size(), 0));

    detail::with_drift(drift, [&](auto drift_fn) {
        detail::run_chunks(n_chunks, plan.threads, [&](std::int64_t chunk) {
            auto& counts = partials[static_cast<std::size_t>(chunk)];
            const std::int64_t lo = chunk * per_chunk;
            const std::int64_t hi = std::min(plan.n_paths, lo + per_chunk);
            const double sqdt = std::sqrt(plan.dt);
            for (std::int64_t i = lo; i < hi; ++i) {
                CounterRng rng(plan.master_seed, static_cast<std::uint64_t>(i));
                double y = 0.0;
                for (std::int64_t step = 0; step < total_steps; ++step)
                    y += drift_fn(y) * plan.dt + sqdt * rng.next_gaussian();
                const double a = std::abs(y);
                for (std::size_t k = 0; k < hs.size(); ++k) {
                    if (a >= hs[k])
                        counts[k]++;
                    else
                        break;
                }
            }
        });
    });

    TailEstimate est;
    est.t = t;
    const auto n = static_cast<double>(plan.n_paths);
    for (std::size_t k = 0; k < hs.size(); ++k) {
        std::int64_t c = 0;
        for (const auto& p : partials) c += p[k];
        TailPoint pt;
        pt.h = hs[k];
        pt.exceedances = c;
        pt.p = static_cast<double>(c) / n;
        pt.widened = c < 10;
        const double z = pt.widened ? 3.0 : 1.96; // widened interval when sparse
        const double z2 = z * z;
        const double denom = 1.0 + z2 / n;
        const double center = (pt.p + z2 / (2.0 * n)) / denom;
        const double half =
            z / denom * std::sqrt(pt.p * (1.0 - pt.p) / n + z2 / (4.0 * n * n));
        pt.lo = std::max(0.0, center - half);
        pt.hi = std::min(1.0, center + half);
        est.points.push_back(pt);
    }
    return est;
}

} // namespace msh
