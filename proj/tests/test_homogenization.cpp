#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "msh/homogenization.hpp"
#include "oracles.hpp"

using namespace msh;

TEST_CASE("effective diffusivity against the Bessel oracle", "[homogenization]") {
    REQUIRE(effective_diffusivity(PeriodicPotential::zero()).value == 1.0);

    // int_0^1 e^{c sin(2 pi x)} dx = I0(c), so D(sin) = I0(2)^{-2}
    const double expected = 1.0 / std::pow(oracle::bessel_i0(2.0), 2);
    const Diffusivity d = effective_diffusivity(PeriodicPotential::sine());
    REQUIRE(d.value == Catch::Approx(expected).margin(1e-8));
    REQUIRE(d.value == Catch::Approx(0.19244).margin(1e-4));
    REQUIRE(d.value < 0.999); // strictly < 1 for a nonzero harmonic

    // amplitude -> 0 emulates the constant potential
    REQUIRE(effective_diffusivity(PeriodicPotential::sine(1, 1e-9)).value ==
            Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("effective diffusivity invariances", "[homogenization]") {
    const PeriodicPotential u({{1, 0.4, 0.9}, {3, -0.2, 0.1}});
    const double base = effective_diffusivity(u).value;
    for (double s : {0.1, 0.37, 0.82})
        REQUIRE(effective_diffusivity(u.translated(s)).value == Catch::Approx(base).margin(1e-10));
    REQUIRE(base <= 1.0);
}

TEST_CASE("multiscale diffusivity", "[homogenization]") {
    SECTION("n=0 reduces to the single-scale value") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 8, 2);
        REQUIRE(multiscale_diffusivity(m, 0).value ==
                Catch::Approx(effective_diffusivity(PeriodicPotential::sine()).value).margin(1e-10));
    }
    SECTION("zero potential") {
        const auto z = MultiScalePotential({PeriodicPotential::zero()},
                                           ScaleSchedule::geometric(8, 3), 2);
        REQUIRE(multiscale_diffusivity(z, 2).value == 1.0);
    }
    SECTION("two-scale value vs independent adaptive quadrature") {
        const auto m = MultiScalePotential({PeriodicPotential::sine()},
                                           ScaleSchedule::explicit_ratios({8}), 1);
        auto v = [&](double x) { return eval_potential(m, x, 0, 1); };
        const double ip = oracle::adaptive_simpson([&](double x) { return std::exp(2.0 * v(x)); },
                                                   0.0, 8.0, 1e-11) / 8.0;
        const double im = oracle::adaptive_simpson([&](double x) { return std::exp(-2.0 * v(x)); },
                                                   0.0, 8.0, 1e-11) / 8.0;
        const double expected = 1.0 / (ip * im);
        const Diffusivity d = multiscale_diffusivity(m, 1);
        REQUIRE(d.value == Catch::Approx(expected).margin(1e-6));

        const double lambda = effective_diffusivity(PeriodicPotential::sine()).value;
        const double k1 = 2.0 * M_PI;
        REQUIRE(d.value >= lambda * lambda * std::exp(-8.0 * k1 / 8.0));
        REQUIRE(d.value <= lambda * lambda * std::exp(8.0 * k1 / 8.0));
    }
    SECTION("resource error on oversized periods") {
        const auto m = MultiScalePotential::self_similar(PeriodicPotential::sine(), 64, 4);
        REQUIRE_THROWS_AS(multiscale_diffusivity(m, 4), resource_error);
    }
}

TEST_CASE("diffusivity bounds", "[homogenization]") {
    ModelConstants c;
    c.lambda_min = c.lambda_max = 0.5;
    c.k1 = 0.0;
    const auto sched = ScaleSchedule::geometric(8, 4);
    const auto [lo1, hi1] = diffusivity_bounds(1, c, sched);
    REQUIRE(lo1 == Catch::Approx(0.5));
    REQUIRE(hi1 == Catch::Approx(0.5));

    c.k1 = 1.0;
    double prev = 1.0;
    for (int n = 1; n <= 5; ++n) {
        const auto [lo, hi] = diffusivity_bounds(n, c, sched);
        REQUIRE(lo < prev); // lower bound decreasing in n
        REQUIRE(hi <= 1.0);
        prev = lo;
    }
    REQUIRE_THROWS_AS(diffusivity_bounds(0, c, sched), argument_error);
}

TEST_CASE("brackets contain the multiscale diffusivity on generated instances", "[homogenization]") {
    // deterministic LCG-driven instance generator
    std::uint64_t state = 99;
    auto next = [&] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    for (int inst = 0; inst < 20; ++inst) {
        const double amp = 0.1 + 0.5 * next();
        const int freq = 1 + static_cast<int>(2.9 * next());
        const auto rho = static_cast<std::int64_t>(8 + 8.0 * next());
        const int n = 1 + static_cast<int>(1.9 * next());
        const auto m = MultiScalePotential::self_similar(
            PeriodicPotential({{freq, 0.0, amp}}), rho, n);
        const ModelConstants c = model_constants(m);
        const double d = multiscale_diffusivity(m, n).value;
        const auto [lo, hi] = diffusivity_bounds(n + 1, c, m.schedule());
        REQUIRE(d >= lo);
        REQUIRE(d <= hi);
    }
}

TEST_CASE("corrector", "[homogenization]") {
    SECTION("identity for the flat potential") {
        const Corrector f(PeriodicPotential::zero(), 4.0);
        for (double x : {0.0, 0.4, 1.9, 3.999, 4.0})
            REQUIRE(f.value(x) == Catch::Approx(x).margin(1e-12));
    }
    SECTION("endpoint pinning and monotonicity") {
        const Corrector f(PeriodicPotential::sine(), 8.0);
        REQUIRE(f.value(0.0) == 0.0);
        REQUIRE(f.value(8.0) == 8.0);
        double prev = -1e-9;
        for (int i = 0; i <= 10000; ++i) {
            const double v = f.value(8.0 * i / 10000.0);
            REQUIRE(v >= prev);
            prev = v;
        }
    }
    SECTION("Osc bounds on F(x)") {
        const PeriodicPotential p = PeriodicPotential::sine();
        const double osc = 2.0;
        const Corrector f(p, 8.0);
        for (int i = 1; i < 10000; ++i) {
            const double x = 8.0 * i / 10000.0;
            const double v = f.value(x);
            REQUIRE(v >= std::exp(-2.0 * osc) * x - 1e-9);
            REQUIRE(v <= std::exp(2.0 * osc) * x + 1e-9);
        }
    }
    SECTION("value vs adaptive quadrature of the defining ratio") {
        const PeriodicPotential p({{1, 0.3, 0.6}});
        const double period = 5.0;
        const Corrector f(p, period);
        const double x = 0.3 * period;
        auto w = [&](double y) { return std::exp(2.0 * p.value(y / period)); };
        const double num = oracle::adaptive_simpson(w, 0.0, x, 1e-12);
        const double den = oracle::adaptive_simpson(w, 0.0, period, 1e-12);
        REQUIRE(f.value(x) == Catch::Approx(period * num / den).margin(1e-9));
        REQUIRE(f.chi(x) == Catch::Approx(x - period * num / den).margin(1e-9));
    }
}

TEST_CASE("mixing defect", "[homogenization]") {
    SECTION("constant g has zero defect") {
        const auto d = mixing_defect(PeriodicPotential::zero(), PeriodicPotential::sine(), 3);
        REQUIRE(d.defect < 1e-12);
    }
    SECTION("R=1 autocovariance of sine: int sin^2 = 1/2") {
        const auto d = mixing_defect(PeriodicPotential::sine(), PeriodicPotential::sine(), 1);
        REQUIRE(d.defect == Catch::Approx(0.5).margin(1e-10));
        REQUIRE(d.defect <= d.bound + 1e-9);
    }
    SECTION("R=2 orthogonal frequencies") {
        const auto d = mixing_defect(PeriodicPotential::sine(), PeriodicPotential::sine(), 2);
        REQUIRE(d.defect < 1e-10);
        REQUIRE(d.bound == Catch::Approx(2.0 * M_PI / 2.0 * (2.0 / M_PI)).margin(1e-6));
    }
    SECTION("bound holds on a mixed example") {
        const PeriodicPotential g({{1, 0.5, 0.2}});
        const PeriodicPotential f({{1, 0.1, 0.9}, {2, 0.3, 0.0}});
        for (int r : {1, 2, 5, 16}) {
            const auto d = mixing_defect(g, f, r);
            REQUIRE(d.defect <= d.bound + 1e-9);
        }
    }
}
