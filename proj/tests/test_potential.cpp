#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "msh/potential.hpp"
#include "oracles.hpp"

using namespace msh;

TEST_CASE("periodic potential basics", "[potential]") {
    const PeriodicPotential u({{1, 0.4, 1.0}, {3, -0.2, 0.5}});
    REQUIRE(std::abs(u.value(0.0)) < 1e-12);
    // period 1 exactly for integer frequencies
    for (double x : {0.13, 0.77, 2.4, -5.3})
        REQUIRE(std::abs(u.value(x + 1.0) - u.value(x)) < 1e-12);
    REQUIRE(u.max_frequency() == 3);
    REQUIRE_THROWS_AS(PeriodicPotential({{0, 1.0, 0.0}}), argument_error);
}

TEST_CASE("scale schedule invariants", "[potential]") {
    const auto s = ScaleSchedule::explicit_ratios({4, 4});
    REQUIRE(s.radius(0) == 1.0);
    REQUIRE(s.radius(1) == 4.0);
    REQUIRE(s.radius(2) == 16.0);
    REQUIRE(s.rho_min() == 4.0);
    for (int k = 1; k <= s.levels(); ++k)
        REQUIRE(s.radius(k) / s.radius(k - 1) == static_cast<double>(s.ratio(k)));
    REQUIRE_THROWS_AS(ScaleSchedule::explicit_ratios({1}), argument_error);

    const auto g = ScaleSchedule::geometric(8, 5);
    REQUIRE(g.radius(3) == 512.0);

    // stretched: R_n = R_{n-1} round(rho^{n^alpha} / R_{n-1})
    const auto st = ScaleSchedule::stretched(2.0, 1.5, 4);
    double r_prev = 1.0;
    for (int n = 1; n <= 4; ++n) {
        const double target = std::pow(2.0, std::pow(n, 1.5));
        const double expected = std::max(2.0, std::round(target / r_prev));
        REQUIRE(st.radius(n) == r_prev * expected);
        r_prev = st.radius(n);
    }
    for (int n = 1; n <= 4; ++n) REQUIRE(st.radius(n) > st.radius(n - 1));
}

TEST_CASE("eval_potential slices", "[potential]") {
    SECTION("zero potential") {
        const auto z = MultiScalePotential({PeriodicPotential::zero()},
                                           ScaleSchedule::geometric(4, 3), 2);
        for (double x : {0.0, 0.7, 13.9}) REQUIRE(eval_potential(z, x) == 0.0);
    }
    SECTION("vanishes at 0") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 3);
        REQUIRE(std::abs(eval_potential(m, 0.0)) < 1e-12);
        REQUIRE(std::abs(eval_potential(m, 0.0, 1, 2)) < 1e-12);
    }
    SECTION("one term vanishes by periodicity") {
        // U_0 = U_1 = sin(2 pi x), R = (1,4): at x=1 the coarse term is
        // sin(2 pi / 4) = 1 and the fine term vanishes
        const auto m = MultiScalePotential({PeriodicPotential::sine()},
                                           ScaleSchedule::explicit_ratios({4}), 1);
        REQUIRE(eval_potential(m, 1.0) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("slice additivity is exact") {
        const auto m = MultiScalePotential(
            {PeriodicPotential({{1, 0.3, 0.8}}), PeriodicPotential({{2, -0.1, 0.4}})},
            ScaleSchedule::geometric(8, 4), 3);
        for (double x : {0.21, 3.77, -9.5, 100.0}) {
            for (int mid = 0; mid < 3; ++mid) {
                const double whole = eval_potential(m, x, 0, 3);
                const double split =
                    eval_potential(m, x, 0, mid) + eval_potential(m, x, mid + 1, 3);
                REQUIRE(whole == Catch::Approx(split).margin(1e-13));
            }
        }
    }
    SECTION("index errors") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 2);
        REQUIRE_THROWS_AS(eval_potential(m, 0.5, 0, 3), argument_error);
        REQUIRE_THROWS_AS(eval_potential(m, 0.5, 2, 1), argument_error);
    }
}

TEST_CASE("eval_gradient matches central differences", "[potential]") {
    const auto m = MultiScalePotential(
        {PeriodicPotential({{1, 0.3, 0.8}, {2, 0.0, -0.3}}), PeriodicPotential({{3, 0.2, 0.1}})},
        ScaleSchedule::geometric(4, 3), 2);
    REQUIRE(eval_gradient(m, 0.0, 0, 0) ==
            Catch::Approx(2.0 * M_PI * 0.8 - 0.3 * 4.0 * M_PI).margin(1e-10));

    // single scale sine: derivative 2 pi at 0
    const auto s = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 0);
    REQUIRE(eval_gradient(s, 0.0) == Catch::Approx(2.0 * M_PI).margin(1e-12));

    // second-order convergence on a fixed sample
    auto f = [&](double x) { return eval_potential(m, x); };
    std::uint64_t state = 12345;
    for (int i = 0; i < 100; ++i) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        const double x = static_cast<double>(state >> 11) * 0x1.0p-53 * 20.0 - 10.0;
        const double g = eval_gradient(m, x);
        const double e1 = std::abs(oracle::central_diff(f, x, 1e-3) - g);
        const double e2 = std::abs(oracle::central_diff(f, x, 5e-4) - g);
        REQUIRE(e1 < 5e-4);
        if (e1 > 1e-9) REQUIRE(e2 < 0.3 * e1); // ~4x drop per halving
    }
}

TEST_CASE("model constants K0 and K1", "[potential]") {
    const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 1);
    const ModelConstants c = potential_constants(m, 4096);
    REQUIRE(c.k0 == Catch::Approx(2.0).margin(1e-6));       // max - min of sine
    REQUIRE(c.k1 == Catch::Approx(2.0 * M_PI).margin(1e-4)); // sup |2 pi cos|

    // adding a zero scale changes nothing
    const auto m2 = MultiScalePotential({PeriodicPotential::sine(), PeriodicPotential::zero()},
                                        ScaleSchedule::geometric(8, 2), 1);
    const ModelConstants c2 = potential_constants(m2, 4096);
    REQUIRE(c2.k0 == c.k0);
    REQUIRE(c2.k1 == c.k1);

    // K0 never exceeds 2 sum |coefficients|
    const PeriodicPotential mixed({{1, 0.3, 0.4}, {5, -0.2, 0.1}});
    REQUIRE(oscillation(mixed, 4096) <= mixed.coefficient_bound());

    REQUIRE_THROWS_AS(potential_constants(m, 512), argument_error);
}

TEST_CASE("tail oscillation bound", "[potential]") {
    SECTION("all zero") {
        const auto z = MultiScalePotential({PeriodicPotential::zero()},
                                           ScaleSchedule::geometric(8, 3), 2);
        const auto b = tail_oscillation_bound(z, 2.0, 0);
        REQUIRE(b.value == 0.0);
        REQUIRE(b.uniform_bound == 0.0);
    }
    SECTION("uniform bound arithmetic: K0 + K1/(rho_min - 1)") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 3);
        const auto b = tail_oscillation_bound(m, 4.0, 0);
        const ModelConstants c = potential_constants(m);
        REQUIRE(b.uniform_bound == Catch::Approx(c.k0 + c.k1 / 7.0).margin(1e-9));
        REQUIRE(b.uniform_bound == Catch::Approx(2.0 + 2.0 * M_PI / 7.0).margin(1e-3));
        REQUIRE(b.value <= b.uniform_bound + 1e-12);
    }
    SECTION("monotone nondecreasing in r") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 3);
        double prev = -1.0;
        for (double r : {1.0, 2.0, 4.0, 7.9}) {
            const auto b = tail_oscillation_bound(m, r, 0);
            REQUIRE(b.value >= prev);
            prev = b.value;
        }
    }
    SECTION("precondition r < R_{n+1}") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 3);
        REQUIRE_THROWS_AS(tail_oscillation_bound(m, 8.0, 0), argument_error);
    }
}

TEST_CASE("unit torus slice reproduces the rescaled sum", "[potential]") {
    const auto m = MultiScalePotential(
        {PeriodicPotential({{1, 0.2, 0.7}}), PeriodicPotential({{2, 0.0, 0.4}})},
        ScaleSchedule::geometric(8, 3), 2);
    const PeriodicPotential slice = unit_torus_slice(m, 2);
    const double period = m.schedule().radius(2);
    for (double x : {0.03, 0.41, 0.88})
        REQUIRE(slice.value(x) == Catch::Approx(eval_potential(m, x * period)).margin(1e-11));
}
