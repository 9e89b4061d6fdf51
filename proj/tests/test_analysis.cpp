#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "msh/analysis.hpp"
#include "oracles.hpp"

using namespace msh;

TEST_CASE("effective scale counting", "[analysis]") {
    const auto s = ScaleSchedule::explicit_ratios({4, 4});
    REQUIRE(effective_scales(s, 20.0) == 2); // R = (1,4,16)
    REQUIRE(effective_scales(s, 1.0) == 0);
    REQUIRE(effective_scales(s, 4.0) == 1);  // boundary R_n <= r
    REQUIRE(effective_scales(s, 16.0) == 2);
    REQUIRE_THROWS_AS(effective_scales(s, 0.5), argument_error);

    const auto g = ScaleSchedule::geometric(8, 4);
    REQUIRE(fluctuation_scales(g, 64.0) == 1);
    REQUIRE(fluctuation_scales(g, 64.0 * 64.0) == 2); // n_flu(R_2^2) = 2
}

TEST_CASE("predict_exit", "[analysis]") {
    SECTION("flat: prediction r^2, factor 4") {
        const auto z = MultiScalePotential({PeriodicPotential::zero()},
                                           ScaleSchedule::geometric(8, 3), 0);
        const auto p = predict_exit(z, 5.0);
        REQUIRE(p.prediction == Catch::Approx(25.0).margin(1e-9));
        REQUIRE(p.factor == Catch::Approx(4.0).margin(1e-9));
    }
    SECTION("C_tau arithmetic: 4 e^{6(K0 + K1/(rho-1))}") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 1);
        const auto p = predict_exit(m, 8.0);
        const double expected = 4.0 * std::exp(6.0 * (2.0 + 2.0 * M_PI / 7.0));
        REQUIRE(p.factor == Catch::Approx(expected).epsilon(1e-3));
    }
    SECTION("r = R_2 uses D(V_0^2)") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 2);
        const double r = m.schedule().radius(2);
        const auto p = predict_exit(m, r);
        REQUIRE(p.n_ef == 2);
        REQUIRE(p.prediction ==
                Catch::Approx(r * r / multiscale_diffusivity(m, 2).value).epsilon(1e-12));
    }
}

TEST_CASE("nu1 exponent bounds", "[analysis]") {
    const auto sched = ScaleSchedule::geometric(8, 3);
    ModelConstants c;
    c.lambda_min = c.lambda_max = 0.5;
    SECTION("degenerate bracket at C1 = 0") {
        const auto [lo, hi] = exponent_bounds_nu1(c, sched, 0.0);
        REQUIRE(lo == Catch::Approx(-std::log(0.5) / std::log(8.0)).margin(1e-12));
        REQUIRE(hi == Catch::Approx(lo).margin(1e-12));
    }
    SECTION("arithmetic: lambda = 0.19244, rho = 8") {
        c.lambda_min = c.lambda_max = 0.19244;
        const auto [lo, hi] = exponent_bounds_nu1(c, sched, 0.0);
        REQUIRE(lo == Catch::Approx(0.7925).margin(5e-4));
    }
    SECTION("bracket widens as rho_min decreases") {
        c.lambda_min = c.lambda_max = 0.3;
        const auto wide = exponent_bounds_nu1(c, ScaleSchedule::geometric(2, 3), 1.0);
        const auto narrow = exponent_bounds_nu1(c, ScaleSchedule::geometric(16, 3), 1.0);
        REQUIRE(wide.second - wide.first > narrow.second - narrow.first);
    }
}

TEST_CASE("fit_exponents", "[analysis]") {
    SECTION("exact power laws") {
        std::vector<double> rs{1.5, 2.0, 4.0, 8.0, 32.0};
        std::vector<double> t2, t25;
        for (double r : rs) {
            t2.push_back(r * r);
            t25.push_back(std::pow(r, 2.5));
        }
        const auto f2 = fit_exponents(rs, t2, 2.0);
        for (double v : f2.pointwise) REQUIRE(std::abs(v) < 1e-12);
        REQUIRE(std::abs(f2.slope) < 1e-12);
        const auto f25 = fit_exponents(rs, t25, 2.0);
        for (double v : f25.pointwise) REQUIRE(v == Catch::Approx(0.5).margin(1e-12));
        REQUIRE(f25.slope == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("errors") {
        REQUIRE_THROWS_AS(fit_exponents({1.0}, {1.0}), argument_error);
        REQUIRE_THROWS_AS(fit_exponents({2.0, 3.0}, {1.0, -1.0}), argument_error);
    }
}

TEST_CASE("msd envelope", "[analysis]") {
    SECTION("flat potential: (t/24, 500 t) with K0 = 0") {
        const auto z = MultiScalePotential({PeriodicPotential::zero()},
                                           ScaleSchedule::geometric(8, 4), 0);
        const auto env = msd_envelope(z, 100.0);
        REQUIRE(env.lower == Catch::Approx(100.0 / 24.0).margin(1e-9));
        REQUIRE(env.upper == Catch::Approx(500.0 * 100.0).margin(1e-6));
        REQUIRE(100.0 >= env.lower); // E[y_t^2] = t sits inside
        REQUIRE(100.0 <= env.upper);
    }
    SECTION("degenerate n_per is flagged and falls back to n_flu") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 2);
        const auto env = msd_envelope(m, 64.0 * 64.0);
        REQUIRE(env.scales.n_flu == 2);
        REQUIRE(env.scales.n_per_degenerate);
        REQUIRE(env.scales.n_per == env.scales.n_flu);
        REQUIRE(env.lower < env.upper);
    }
    SECTION("precondition t >= R_1^2") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 2);
        REQUIRE_THROWS_AS(msd_envelope(m, 10.0), argument_error);
    }
}

TEST_CASE("predict_nu_ef", "[analysis]") {
    SECTION("matches the defining arithmetic") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 2);
        const double t = 64.0 * 64.0; // n_ef(t) = 2 in fluctuation scales
        const double nu = predict_nu_ef(m, t);
        const double d = multiscale_diffusivity(m, 2).value;
        const double expected = -(2.0 * std::log(d)) / (3.0 * std::log(64.0));
        REQUIRE(nu == Catch::Approx(expected).margin(1e-12));
        // first-order value ln(1/lambda)/ln(rho), within the mixing allowance
        const double lambda = effective_diffusivity(PeriodicPotential::sine()).value;
        const double first_order = std::log(1.0 / lambda) / std::log(8.0);
        REQUIRE(std::abs(nu - first_order) <
                4.0 * 2.0 * M_PI / (8.0 * std::log(8.0)) + 0.25 * first_order);
        REQUIRE(nu > 0.0);
    }
    SECTION("flat limit: lambda_ef -> 1 gives nu_ef -> 0") {
        const auto z = MultiScalePotential({PeriodicPotential::zero()},
                                           ScaleSchedule::geometric(8, 3), 1);
        REQUIRE(predict_nu_ef(z, 64.0) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("degenerate n_ef = 0") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 2);
        REQUIRE_THROWS_AS(predict_nu_ef(m, 2.0), argument_error);
    }
}

TEST_CASE("walk dimensions", "[analysis]") {
    SECTION("normal-diffusion limit") {
        const auto d = walk_dimensions(1.0 - 1e-9, 8.0);
        REQUIRE(d.d_w1 == Catch::Approx(2.0).margin(1e-6));
        REQUIRE(d.d_w2 == Catch::Approx(2.0).margin(1e-6));
        REQUIRE(d.d_w3 == Catch::Approx(2.0).margin(1e-6));
    }
    SECTION("d_w2 = 3 at lambda = 0.25, rho = 4") {
        REQUIRE(walk_dimensions(0.25, 4.0).d_w2 == Catch::Approx(3.0).margin(1e-12));
    }
    SECTION("all exceed 2 for lambda < 1") {
        for (double rho : {4.0, 8.0, 64.0}) {
            const auto d = walk_dimensions(0.3, rho);
            REQUIRE(d.d_w1 > 2.0);
            REQUIRE(d.d_w2 > 2.0);
            REQUIRE(d.d_w3 > 2.0);
        }
    }
    SECTION("pairwise differences are O(1/ln(rho)^2)") {
        const double lambda = 0.3;
        double prev_scaled = -1.0;
        for (double rho : {16.0, 64.0, 256.0, 1024.0, 4096.0}) {
            const auto d = walk_dimensions(lambda, rho);
            const double spread = std::max({std::abs(d.d_w1 - d.d_w2), std::abs(d.d_w1 - d.d_w3),
                                            std::abs(d.d_w2 - d.d_w3)});
            const double scaled = spread * std::pow(std::log(rho), 2);
            if (prev_scaled > 0.0) REQUIRE(scaled < prev_scaled * 2.0); // stays bounded
            prev_scaled = scaled;
        }
    }
}

TEST_CASE("tail prediction", "[analysis]") {
    const auto sched = ScaleSchedule::geometric(8, 6);
    SECTION("Gaussian limit as lambda -> 1") {
        const auto p = tail_prediction(1.0 - 1e-12, 8.0, 100.0, 5.0, 0.5, sched);
        REQUIRE(p.nu3 == Catch::Approx(0.0).margin(1e-9));
        REQUIRE(p.log_prob_bound == Catch::Approx(-0.5 * 25.0 / 100.0).margin(1e-6));
    }
    SECTION("nu3 arithmetic") {
        const auto p = tail_prediction(0.19244, 8.0, 100.0, 5.0, 0.5, sched);
        REQUIRE(p.nu3 == Catch::Approx(0.7925).margin(5e-4));
        REQUIRE(p.n_ef == effective_scales(sched, 20.0));
    }
    SECTION("monotone decreasing in h at fixed t") {
        double prev = 0.0;
        for (double h : {1.0, 2.0, 4.0, 8.0}) {
            const auto p = tail_prediction(0.3, 8.0, 100.0, h, 0.5, sched);
            REQUIRE(p.log_prob_bound < prev);
            prev = p.log_prob_bound;
        }
    }
    SECTION("window flag") {
        REQUIRE_FALSE(tail_prediction(0.3, 8.0, 10.0, 5.0, 0.5, sched).in_window);
        REQUIRE(tail_prediction(0.3, 8.0, 100.0, 5.0, 0.5, sched).in_window);
    }
}

TEST_CASE("weak anomaly prediction", "[analysis]") {
    SECTION("arithmetic: lambda = e^-1, rho = e, alpha = 2, t = e^4 -> sqrt(2)") {
        const auto w = weak_anomaly_predict(M_E, 2.0, std::exp(-1.0), std::exp(4.0));
        REQUIRE(w.f_t == Catch::Approx(std::sqrt(2.0)).margin(1e-9));
    }
    SECTION("f increasing in t") {
        double prev = 0.0;
        for (double t : {10.0, 100.0, 1000.0}) {
            const auto w = weak_anomaly_predict(4.0, 1.5, 0.3, t);
            REQUIRE(w.f_t > prev);
            prev = w.f_t;
        }
    }
    SECTION("domain") {
        REQUIRE_THROWS_AS(weak_anomaly_predict(4.0, 1.0, 0.3, 10.0), argument_error);
    }
}
