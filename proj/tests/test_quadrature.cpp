#include "doctest.h"

#include "helpers.hpp"
#include "margex/error.hpp"
#include "margex/quadrature.hpp"

#include <cmath>

using namespace margex;

TEST_SUITE("quadrature") {

TEST_CASE("density normalizes to one") {
    const QuadratureConfig qcfg;
    for (const auto& dist : {ProductivityDistribution::log_normal(0.0, 1.0),
                             ProductivityDistribution::exponential(0.7)}) {
        const double v = integrate_dF(dist, [](double) { return 1.0; }, qcfg);
        CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
    }
    const auto disc = ProductivityDistribution::discrete({1.0, 2.0}, {0.5, 0.5});
    CHECK(integrate_dF(disc, [](double) { return 1.0; }, qcfg) == 1.0);
}

TEST_CASE("moments against closed forms") {
    const QuadratureConfig qcfg;
    const auto expo = ProductivityDistribution::exponential(1.0);
    CHECK(integrate_dF(expo, [](double t) { return t; }, qcfg) ==
          doctest::Approx(1.0).epsilon(1e-8));
    // second moment compared with its truncated closed form:
    // int_0^T t^2 e^-t dt = 2 - (T^2 + 2T + 2) e^-T
    const double top = support_upper_bound(expo, qcfg.truncation_quantile);
    const double trunc_m2 = 2.0 - (top * top + 2.0 * top + 2.0) * std::exp(-top);
    CHECK(integrate_dF(expo, [](double t) { return t * t; }, qcfg) ==
          doctest::Approx(trunc_m2).epsilon(1e-9));

    // lognormal tails keep a little polynomial mass past the truncation point
    const auto logn = ProductivityDistribution::log_normal(0.0, 1.0);
    CHECK(integrate_dF(logn, [](double t) { return t; }, qcfg) ==
          doctest::Approx(1.6487212707001282).epsilon(1e-6));
}

TEST_CASE("discrete integration is exact summation") {
    const auto spec = testutil::two_type();
    const QuadratureConfig qcfg;
    const double n0 = integrate_dF(spec.distribution,
                                   [&](double t) { return spec.p0(t); }, qcfg);
    CHECK(n0 == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("breakpoints make step integrands exact") {
    const QuadratureConfig qcfg;
    const auto expo = ProductivityDistribution::exponential(1.0);
    const auto pw = HiringFunction::piecewise({0.0, 1.0, 3.0}, {0.1, 0.4, 0.9});
    const double got =
        integrate_dF(expo, [&](double t) { return pw(t); }, qcfg, pw.knots());
    const double want = 0.1 * (expo.cdf(1.0) - 0.0) +
                        0.4 * (expo.cdf(3.0) - expo.cdf(1.0)) +
                        0.9 * (1.0 - expo.cdf(3.0));
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("range integration") {
    const QuadratureConfig qcfg;
    const auto expo = ProductivityDistribution::exponential(2.0);
    const double got = integrate_dF_range(expo, [](double) { return 1.0; }, 0.5, 1.5,
                                          qcfg);
    CHECK(got == doctest::Approx(expo.cdf(1.5) - expo.cdf(0.5)).epsilon(1e-9));

    // discrete ranges are (lo, hi]
    const auto disc =
        ProductivityDistribution::discrete({1.0, 2.0, 3.0}, {0.2, 0.3, 0.5});
    CHECK(integrate_dF_range(disc, [](double) { return 1.0; }, 1.0, 2.0, qcfg) == 0.3);
    CHECK(integrate_dF_range(disc, [](double) { return 1.0; }, 0.0, 2.0, qcfg) == 0.5);
    CHECK(integrate_dF_range(disc, [](double t) { return t; }, 1.0, 3.0, qcfg) ==
          doctest::Approx(0.3 * 2.0 + 0.5 * 3.0).epsilon(1e-15));
}

TEST_CASE("subdivision budget exhaustion carries the best estimate") {
    QuadratureConfig tight;
    tight.abs_tol = 1e-13;
    tight.max_subdivisions = 16;
    const auto f = [](double t) { return std::sin(50.0 / (t + 0.01)); };
    bool threw = false;
    try {
        integrate_interval(f, 0.0, 5.0, tight);
    } catch (const NonConvergenceError& e) {
        threw = true;
        CHECK(std::isfinite(e.best_estimate()));
    }
    CHECK(threw);
}

TEST_CASE("configuration is validated") {
    QuadratureConfig bad;
    bad.abs_tol = 0.0;
    CHECK_THROWS_AS(integrate_interval([](double) { return 1.0; }, 0.0, 1.0, bad),
                    Error);
    QuadratureConfig few;
    few.max_subdivisions = 4;
    CHECK_THROWS_AS(integrate_interval([](double) { return 1.0; }, 0.0, 1.0, few),
                    Error);
}

TEST_CASE("empty interval integrates to zero") {
    const QuadratureConfig qcfg;
    CHECK(integrate_interval([](double t) { return t; }, 2.0, 2.0, qcfg) == 0.0);
}

} // TEST_SUITE
