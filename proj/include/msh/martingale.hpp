#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "msh/errors.hpp"
#include "msh/homogenization.hpp"
#include "msh/potential.hpp"
#include "msh/rng.hpp"
#include "msh/sde.hpp"

namespace msh {

/// Two-level bracket envelope: the conditional quadratic-variation rate is
/// f1 before t0 and f2 after.  The equality case f1 = f2 is a separate flag
/// rather than a division by zero in g(lambda).
struct BracketEnvelope {
    double f1 = 1.0;
    double f2 = 1.0;
    double t0 = 1.0;
    bool degenerate = false; // f1 == f2

    BracketEnvelope(double f1_, double f2_, double t0_)
        : f1(f1_), f2(f2_), t0(t0_), degenerate(f1_ == f2_) {
        if (!(f2 > 0.0) || f1 < f2 || !(t0 > 0.0))
            throw argument_error("BracketEnvelope: need 0 < f2 <= f1 and t0 > 0");
    }

    /// Largest admissible |lambda| for the Laplace bound; +inf when degenerate.
    double lambda_sup() const {
        return degenerate ? HUGE_VAL : 1.0 / std::sqrt(2.0 * M_E * (f1 - f2) * t0);
    }

    /// Largest admissible nu for the bracket bound.
    double nu_sup() const { return degenerate ? HUGE_VAL : 1.0 / (2.0 * M_E * (f1 - f2) * t0); }
};

/// E[exp(lambda M_t)] <= e^{3(1 - 1/g)} exp(g/2 lambda^2 f2 t) with
/// g = 1/(1 - lambda^2 (f1-f2) t0 e), valid for 0 < |lambda| < lambda_sup.
inline double laplace_bound(const BracketEnvelope& env, double lambda, double t) {
    if (env.degenerate) return std::exp(0.5 * lambda * lambda * env.f2 * t);
    const double sup = env.lambda_sup();
    if (!(std::abs(lambda) > 0.0) || !(std::abs(lambda) < sup))
        throw domain_error("laplace_bound: |lambda| must lie in (0, " + std::to_string(sup) + ")");
    const double g = 1.0 / (1.0 - lambda * lambda * (env.f1 - env.f2) * env.t0 * M_E);
    return std::exp(3.0 * (1.0 - 1.0 / g)) * std::exp(0.5 * g * lambda * lambda * env.f2 * t);
}

inline double laplace_g(const BracketEnvelope& env, double lambda) {
    if (env.degenerate) return 1.0;
    return 1.0 / (1.0 - lambda * lambda * (env.f1 - env.f2) * env.t0 * M_E);
}

/// E[exp(nu <M,M>_t)] <= exp(nu f2 t) exp(nu t0 (f1-f2)) / ((f1-f2) nu t0)^2.
inline double bracket_exp_bound(const BracketEnvelope& env, double nu, double t) {
    if (env.degenerate)
        throw domain_error("bracket_exp_bound: undefined for the degenerate envelope f1 = f2");
    if (!(nu > 0.0) || !(nu < env.nu_sup()))
        throw domain_error("bracket_exp_bound: nu must lie in (0, " + std::to_string(env.nu_sup()) + ")");
    const double dft = (env.f1 - env.f2) * env.t0;
    return std::exp(nu * env.f2 * t) * std::exp(nu * dft) / ((dft * nu) * (dft * nu));
}

/// P(M_t >= x) <= e^{3/2 r^2} exp(-(1-r^2) x^2/(2 f2 t)) with
/// r = C1 x / t and C1 = sqrt(2e (f1-f2) t0)/f2.
inline double tail_bound(const BracketEnvelope& env, double x, double t) {
    if (x < 0.0 || !(t > 0.0)) throw argument_error("tail_bound: need x >= 0 and t > 0");
    const double c1 = env.degenerate ? 0.0 : std::sqrt(2.0 * M_E * (env.f1 - env.f2) * env.t0) / env.f2;
    const double r = c1 * x / t;
    if (!(r < 1.0)) throw domain_error("tail_bound: r = C1 x/t must be < 1");
    return std::exp(1.5 * r * r) * std::exp(-(1.0 - r * r) * x * x / (2.0 * env.f2 * t));
}

struct LemmaSeries {
    double lhs = 0.0; // sum_{0<=m<=[mu]} ([mu]-m)^m y^m / m!
    double rhs = 0.0; // exp(y [mu]) / y^2
};

/// The combinatorial series lemma, -1/e < y < 0.  The direct alternating sum
/// loses ~60 decimal digits to cancellation for large mu, so the lhs is
/// evaluated through the generating-function recurrence
/// I_N = sum_{j<N} I_{N-1-j} y^j / j!  (all I_n >= 0), which keeps the
/// relative error near machine precision; Kahan compensation on each sum.
inline LemmaSeries lemma_series(double y, double mu) {
    if (!(y > -1.0 / M_E) || !(y < 0.0))
        throw domain_error("lemma_series: y must lie in (-1/e, 0)");
    if (mu < 0.0) throw argument_error("lemma_series: mu must be >= 0");
    const auto n = static_cast<std::int64_t>(std::floor(mu));
    std::vector<double> pow_fact(static_cast<std::size_t>(n) + 1);
    pow_fact[0] = 1.0; // y^j / j!
    for (std::int64_t j = 1; j <= n; ++j)
        pow_fact[static_cast<std::size_t>(j)] =
            pow_fact[static_cast<std::size_t>(j - 1)] * y / static_cast<double>(j);

    std::vector<double> i_seq(static_cast<std::size_t>(n) + 1);
    i_seq[0] = 1.0;
    for (std::int64_t k = 1; k <= n; ++k) {
        double s = 0.0, comp = 0.0;
        for (std::int64_t j = 0; j < k; ++j) {
            const double term =
                i_seq[static_cast<std::size_t>(k - 1 - j)] * pow_fact[static_cast<std::size_t>(j)];
            const double t = s + term;
            if (std::abs(s) >= std::abs(term))
                comp += (s - t) + term;
            else
                comp += (term - t) + s;
            s = t;
        }
        i_seq[static_cast<std::size_t>(k)] = s + comp;
    }
    LemmaSeries out;
    out.lhs = i_seq[static_cast<std::size_t>(n)];
    out.rhs = std::exp(y * static_cast<double>(n)) / (y * y);
    return out;
}

/// Direct Kahan-compensated evaluation of the lemma's sum.  Accurate only
/// while the alternating terms stay within the double dynamic range of the
/// result (roughly mu <= 30); used as the cross-check oracle.
inline double lemma_series_direct(double y, double mu) {
    const auto n = static_cast<std::int64_t>(std::floor(mu));
    double s = 0.0, comp = 0.0, coef = 1.0; // coef = y^m / m!
    for (std::int64_t m = 0; m <= n; ++m) {
        const double term = std::pow(static_cast<double>(n - m), static_cast<double>(m)) * coef;
        const double t = s + term;
        if (std::abs(s) >= std::abs(term))
            comp += (s - t) + term;
        else
            comp += (term - t) + s;
        s = t;
        coef *= y / static_cast<double>(m + 1);
    }
    return s + comp;
}

struct MartingaleCheckRow {
    double lambda = 0.0;
    double empirical = 0.0; // MC estimate of E[exp(lambda M_t)]
    double ci_half = 0.0;
    double bound = 0.0;
    bool ok = false;           // empirical - ci <= bound
    bool inconclusive = false; // CI overlaps the bound
};

struct MartingaleCheckReport {
    BracketEnvelope envelope{1.0, 1.0, 1.0};
    double t = 0.0;
    double diffusivity = 1.0;
    std::vector<MartingaleCheckRow> rows;
    bool any_inconclusive = false;
};

/// Simulates M_t = F_W(y_t) through the corrector of the full (periodic)
/// potential and checks the empirical Laplace transform against the bound.
/// f1 = sup |F_W'|^2, f2 = D(W), t0 fitted from the measured bracket
/// relaxation.  Statistical overlap is reported as inconclusive, never as a
/// hard failure.
inline MartingaleCheckReport verify_on_sde_martingale(const MultiScalePotential& msp,
                                                      const SimulationPlan& plan,
                                                      const std::vector<double>& lambda_grid,
                                                      double t_final = 0.0) {
    detail::validate_plan(msp, plan);
    if (t_final <= 0.0) t_final = plan.horizon;
    if (!(t_final > 0.0)) throw argument_error("verify_on_sde_martingale: needs a positive horizon");

    const int n = msp.n_max();
    const double period = msp.schedule().radius(n);
    const PeriodicPotential slice = unit_torus_slice(msp, n);
    const Corrector corr(slice, period);
    const double f2 = multiscale_diffusivity(msp, n).value;
    const double sup_fp =
        refined_sup([&](double x) { return corr.derivative(x * period); }, 4096 * std::max(1, slice.max_frequency()));
    double f1 = sup_fp * sup_fp;
    if (f1 <= f2) f1 = f2; // constant potential: degenerate envelope

    const detail::DriftField drift(msp);
    const auto steps = std::max<std::int64_t>(1, std::llround(t_final / plan.dt));
    const int n_probe = 16; // bracket relaxation grid
    const std::int64_t probe_every = std::max<std::int64_t>(1, steps / n_probe);

    struct Partial {
        std::vector<double> exp_sum, exp_sumsq; // per lambda
        std::vector<double> bracket_sum;        // per probe time
        explicit Partial(std::size_t nl, std::size_t np)
            : exp_sum(nl, 0.0), exp_sumsq(nl, 0.0), bracket_sum(np, 0.0) {}
    };
    const std::int64_t per_chunk = detail::chunk_paths(plan.n_paths);
    const std::int64_t n_chunks = (plan.n_paths + per_chunk - 1) / per_chunk;
    std::vector<std::int64_t> probe_steps;
    for (std::int64_t s = probe_every; s <= steps; s += probe_every) probe_steps.push_back(s);
    std::vector<Partial> partials(static_cast<std::size_t>(n_chunks),
                                  Partial(lambda_grid.size(), probe_steps.size()));

    detail::run_chunks(n_chunks, plan.threads, [&](std::int64_t chunk) {
        Partial& p = partials[static_cast<std::size_t>(chunk)];
        const std::int64_t lo = chunk * per_chunk;
        const std::int64_t hi = std::min(plan.n_paths, lo + per_chunk);
        const double sqdt = std::sqrt(plan.dt);
        for (std::int64_t i = lo; i < hi; ++i) {
            CounterRng rng(plan.master_seed, static_cast<std::uint64_t>(i));
            double y = 0.0, bracket = 0.0;
            std::size_t probe = 0;
            for (std::int64_t s = 1; s <= steps; ++s) {
                const double fp = corr.derivative(y - period * std::floor(y / period));
                bracket += fp * fp * plan.dt;
                y += drift(y) * plan.dt + sqdt * rng.next_gaussian();
                if (probe < probe_steps.size() && probe_steps[probe] == s) {
                    p.bracket_sum[probe] += bracket;
                    probe++;
                }
            }
            const double m = period * std::floor(y / period) + corr.value(y - period * std::floor(y / period));
            for (std::size_t l = 0; l < lambda_grid.size(); ++l) {
                const double v = std::exp(lambda_grid[l] * m);
                p.exp_sum[l] += v;
                p.exp_sumsq[l] += v * v;
            }
        }
    });

    // fit t0: smallest t0 for which f1 min(t,t0) + f2 (t-t0)^+ dominates the
    // measured bracket at every probe time
    double t0 = plan.dt;
    const auto n_paths = static_cast<double>(plan.n_paths);
    for (std::size_t k = 0; k < probe_steps.size(); ++k) {
        double b = 0.0;
        for (const auto& p : partials) b += p.bracket_sum[k];
        b /= n_paths;
        const double tk = static_cast<double>(probe_steps[k]) * plan.dt;
        if (f1 > f2) t0 = std::max(t0, (b - f2 * tk) / (f1 - f2));
    }

    MartingaleCheckReport rep{BracketEnvelope(f1, f2, t0), t_final, f2, {}, false};
    for (std::size_t l = 0; l < lambda_grid.size(); ++l) {
        double sum = 0.0, sumsq = 0.0;
        for (const auto& p : partials) {
            sum += p.exp_sum[l];
            sumsq += p.exp_sumsq[l];
        }
        MartingaleCheckRow row;
        row.lambda = lambda_grid[l];
        row.empirical = sum / n_paths;
        const double var = std::max(0.0, sumsq / n_paths - row.empirical * row.empirical);
        row.ci_half = 2.0 * std::sqrt(var / n_paths);
        if (std::abs(row.lambda) < rep.envelope.lambda_sup() && row.lambda != 0.0) {
            row.bound = laplace_bound(rep.envelope, row.lambda, t_final);
            row.ok = row.empirical - row.ci_half <= row.bound;
            row.inconclusive = row.ok && row.empirical + row.ci_half > row.bound;
        } else {
            row.bound = HUGE_VAL;
            row.ok = true;
        }
        rep.any_inconclusive = rep.any_inconclusive || row.inconclusive || !row.ok;
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace msh
