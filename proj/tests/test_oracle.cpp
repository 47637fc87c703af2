#include "doctest.h"

#include "helpers.hpp"
#include "margex/error.hpp"
#include "margex/oracle.hpp"

#include <cmath>

using namespace margex;
using namespace testutil;

namespace {

DGPSpec with_hiring(HiringFunction p0, HiringFunction p1) {
    return DGPSpec(ProductivityDistribution::exponential(1.0), std::move(p0),
                   std::move(p1), OutcomeFunction(1.0, 0.5, 0.0),
                   OutcomeFunction(1.2, 0.6, 0.0), CovariateModel::identity());
}

} // namespace

TEST_SUITE("oracle") {

TEST_CASE("two-type estimands match the independent enumeration") {
    const auto e = enumerate_discrete({0.5, 0.5}, {0.2, 0.6}, {0.5, 0.8}, {10.0, 20.0},
                                      {12.0, 23.0});
    // the enumeration itself reproduces the frozen constants
    CHECK(close(e.n0, twotype::n0, 1e-15));
    CHECK(close(e.n1, twotype::n1, 1e-15));
    CHECK(close(e.pate, twotype::pate, 1e-15));
    CHECK(close(e.tau_q0, twotype::tau_q0, 1e-15));
    CHECK(close(e.tau_q1, twotype::tau_q1, 1e-15));
    CHECK(close(e.tau_dp, twotype::tau_dp, 1e-15));
    CHECK(close(e.ybar0, twotype::ybar0, 1e-15));
    CHECK(close(e.ybar1, twotype::ybar1, 1e-14));
    CHECK(close(e.omd, twotype::omd, 1e-14));
    CHECK(close(e.post_sel, twotype::post_sel, 1e-14));
    CHECK(close(e.post_rew, twotype::post_rew, 1e-14));
    CHECK(close(e.pre_sel, twotype::pre_sel, 1e-14));
    CHECK(close(e.pre_rew, twotype::pre_rew, 1e-14));

    const auto spec = two_type();
    CHECK(close(mass_entrants(spec, 0), twotype::n0, 1e-12));
    CHECK(close(mass_entrants(spec, 1), twotype::n1, 1e-12));
    CHECK(close(observed_mean(spec, 0), twotype::ybar0, 1e-12));
    CHECK(close(observed_mean(spec, 1), twotype::ybar1, 1e-12));
    CHECK(close(pate(spec), twotype::pate, 1e-12));
    CHECK(close(weighted_ate(spec, WeightingScheme::pre_regime()), twotype::tau_q0,
                1e-12));
    CHECK(close(weighted_ate(spec, WeightingScheme::post_regime()), twotype::tau_q1,
                1e-12));
    CHECK(close(weighted_ate(spec, WeightingScheme::marginality()), twotype::tau_dp,
                1e-12));
    CHECK(close(omd(spec), twotype::omd, 1e-12));

    const auto post = omd_decomposition(spec, Anchor::Post);
    CHECK(close(post.ate_term, twotype::post_ate, 1e-12));
    CHECK(close(post.selection_bias, twotype::post_sel, 1e-12));
    CHECK(close(post.reweight_bias, twotype::post_rew, 1e-12));
    CHECK(close(post.sum(), twotype::omd, 1e-12));

    const auto pre = omd_decomposition(spec, Anchor::Pre);
    CHECK(close(pre.ate_term, twotype::pre_ate, 1e-12));
    CHECK(close(pre.selection_bias, twotype::pre_sel, 1e-12));
    CHECK(close(pre.reweight_bias, twotype::pre_rew, 1e-12));
    CHECK(close(pre.sum(), twotype::omd, 1e-12));
}

TEST_CASE("constant participation mass") {
    const auto spec = with_hiring(HiringFunction::piecewise({0.0}, {0.3}),
                                  HiringFunction::piecewise({0.0}, {0.3}));
    CHECK(mass_entrants(spec, 0) == doctest::Approx(0.3).epsilon(1e-9));
    const auto logi = with_hiring(HiringFunction::logistic(0.0, 0.0),
                                  HiringFunction::logistic(0.0, 0.0));
    CHECK(mass_entrants(logi, 1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("zero participation raises degenerate-regime") {
    const auto spec = with_hiring(HiringFunction::piecewise({0.0}, {0.0}),
                                  HiringFunction::piecewise({0.0}, {0.5}));
    CHECK_THROWS_AS(mass_entrants(spec, 0), Error);
    try {
        mass_entrants(spec, 0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateRegime);
    }
}

TEST_CASE("importance density") {
    // constant p: weights cancel and q equals f
    const auto flat = with_hiring(HiringFunction::piecewise({0.0}, {0.4}),
                                  HiringFunction::piecewise({0.0}, {0.4}));
    for (double theta : {0.1, 0.5, 2.0})
        CHECK(importance_density(flat, 0, theta) ==
              doctest::Approx(flat.distribution.density(theta)).epsilon(1e-8));

    const auto spec = two_type();
    CHECK(importance_density(spec, 0, 2.0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(importance_density(spec, 1, 1.0) ==
          doctest::Approx(0.5 * 0.5 / 0.65).epsilon(1e-12));

    // q^s is itself a density in theta: it integrates (or sums) to one
    SpecGen gen(17);
    for (int rep = 0; rep < 8; ++rep) {
        const DGPSpec s = gen.next();
        for (int regime = 0; regime < 2; ++regime) {
            double total;
            if (s.distribution.is_discrete()) {
                total = 0.0;
                for (double t : s.distribution.support())
                    total += importance_density(s, regime, t);
            } else {
                const double top = support_upper_bound(s.distribution, 1.0 - 1e-10);
                std::vector<double> seeds;
                for (int k = 1; k < 64; ++k)
                    seeds.push_back(s.distribution.quantile(k / 64.0));
                total = integrate_interval(
                    [&](double t) { return importance_density(s, regime, t); }, 0.0,
                    top, QuadratureConfig{}, seeds);
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("observed means") {
    const auto spec = two_type();
    CHECK(observed_mean(spec, 0) == doctest::Approx(17.5).epsilon(1e-12));
    CHECK(observed_mean(spec, 1) == doctest::Approx(twotype::ybar1).epsilon(1e-12));

    const auto constant = DGPSpec(ProductivityDistribution::exponential(1.0),
                                  HiringFunction::ratio_shift(0.0),
                                  HiringFunction::ratio_shift(1.0),
                                  OutcomeFunction(7.0, 0.0, 0.0),
                                  OutcomeFunction(7.0, 0.0, 0.0),
                                  CovariateModel::identity());
    CHECK(observed_mean(constant, 0) == doctest::Approx(7.0).epsilon(1e-9));
    CHECK(observed_mean(constant, 1) == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("pate") {
    const auto constant = DGPSpec(ProductivityDistribution::log_normal(0.0, 0.5),
                                  HiringFunction::ratio_shift(0.0),
                                  HiringFunction::ratio_shift(1.0),
                                  OutcomeFunction(1.0, 0.0, 0.0),
                                  OutcomeFunction(1.3, 0.0, 0.0),
                                  CovariateModel::identity());
    CHECK(pate(constant) == doctest::Approx(0.3).epsilon(1e-8));

    // linear outcomes under Exponential(1): tau = 0.2 + 0.1 theta, E theta = 1
    const auto lin = with_hiring(HiringFunction::ratio_shift(0.0),
                                 HiringFunction::ratio_shift(1.0));
    CHECK(pate(lin) == doctest::Approx(0.3).epsilon(1e-8));

    CHECK(pate(two_type()) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("weighted ate special cases") {
    const auto spec = two_type();
    CHECK(weighted_ate(spec, WeightingScheme::population()) ==
          doctest::Approx(pate(spec)).epsilon(1e-12));

    // constant effect collapses every admissible scheme to the constant
    const auto constant = DGPSpec(ProductivityDistribution::exponential(1.0),
                                  HiringFunction::logistic(-1.0, 0.5),
                                  HiringFunction::logistic(-0.2, 0.5),
                                  OutcomeFunction(2.0, 1.0, 0.1),
                                  OutcomeFunction(3.5, 1.0, 0.1),
                                  CovariateModel::identity());
    const auto custom = WeightingScheme::custom_grid({0.0, 1.0, 4.0}, {0.2, 1.0, 0.1});
    for (const auto& scheme :
         {WeightingScheme::population(), WeightingScheme::pre_regime(),
          WeightingScheme::post_regime(), WeightingScheme::marginality(), custom})
        CHECK(weighted_ate(constant, scheme) == doctest::Approx(1.5).epsilon(1e-8));
}

TEST_CASE("marginality weights reject p1 equal to p0") {
    const auto spec = with_hiring(HiringFunction::ratio_shift(0.5),
                                  HiringFunction::ratio_shift(0.5));
    CHECK_THROWS_AS(weighted_ate(spec, WeightingScheme::marginality()), Error);
    try {
        weighted_ate(spec, WeightingScheme::marginality());
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateWeights);
    }
}

TEST_CASE("custom weights validate") {
    CHECK_THROWS_AS(WeightingScheme::custom_grid({0.0, 1.0}, {0.5, -0.1}), Error);
    CHECK_THROWS_AS(WeightingScheme::custom_grid({1.0, 0.5}, {0.5, 0.1}), Error);
    CHECK_THROWS_AS(WeightingScheme::custom_grid({1.0}, {0.5}), Error);
}

TEST_CASE("weighted ate is invariant to the scale of custom weights") {
    SpecGen gen(88);
    const DGPSpec spec = gen.next();
    const std::vector<double> grid = {0.0, 0.5, 1.5, 4.0};
    const std::vector<double> base = {0.3, 1.0, 0.7, 0.05};
    const double ref =
        weighted_ate(spec, WeightingScheme::custom_grid(grid, base));
    for (double k : {1e-6, 0.5, 1000.0}) {
        std::vector<double> scaled = base;
        for (double& v : scaled) v *= k;
        const double got =
            weighted_ate(spec, WeightingScheme::custom_grid(grid, scaled));
        CHECK(close(got, ref, 1e-10));
    }
}

TEST_CASE("omd cases") {
    CHECK(close(omd(two_type()), twotype::omd, 1e-12));

    const auto same = with_hiring(HiringFunction::ratio_shift(0.7),
                                  HiringFunction::ratio_shift(0.7));
    const auto same_outcomes = DGPSpec(same.distribution, same.p0, same.p1,
                                       OutcomeFunction(5.0, 1.0, 0.0),
                                       OutcomeFunction(5.0, 1.0, 0.0),
                                       CovariateModel::identity());
    CHECK(omd(same_outcomes) == doctest::Approx(0.0).epsilon(1e-9));

    // identical potentials, shifted participation: OMD is pure composition
    const auto shifted = DGPSpec(ProductivityDistribution::exponential(1.0),
                                 HiringFunction::logistic(-2.0, 1.0),
                                 HiringFunction::logistic(0.0, 1.0),
                                 OutcomeFunction(5.0, 2.0, 0.0),
                                 OutcomeFunction(5.0, 2.0, 0.0),
                                 CovariateModel::identity());
    const double gap = omd(shifted);
    const double n0 = mass_entrants(shifted, 0);
    const double n1 = mass_entrants(shifted, 1);
    const double eq1 =
        integrate(shifted, [&](double t) { return shifted.y0(t) * shifted.p1(t); }) / n1;
    const double eq0 =
        integrate(shifted, [&](double t) { return shifted.y0(t) * shifted.p0(t); }) / n0;
    CHECK(gap == doctest::Approx(eq1 - eq0).epsilon(1e-9));
    CHECK(std::fabs(gap) > 0.01);
}

TEST_CASE("decomposition identities over random specs") {
    SpecGen gen(424242);
    for (int rep = 0; rep < 120; ++rep) {
        const DGPSpec spec = gen.next();
        const double total = omd(spec);
        const double n0 = mass_entrants(spec, 0);
        const double n1 = mass_entrants(spec, 1);

        const auto post = omd_decomposition(spec, Anchor::Post);
        CHECK(close(post.sum(), total, 1e-8));
        const double gap_y0 =
            integrate(spec, [&](double t) { return spec.y0(t) * spec.p1(t); }) / n1 -
            integrate(spec, [&](double t) { return spec.y0(t) * spec.p0(t); }) / n0;
        CHECK(close(post.selection_bias + post.reweight_bias, gap_y0, 1e-8));

        const auto pre = omd_decomposition(spec, Anchor::Pre);
        CHECK(close(pre.sum(), total, 1e-8));
        const double gap_y1 =
            integrate(spec, [&](double t) { return spec.y1(t) * spec.p1(t); }) / n1 -
            integrate(spec, [&](double t) { return spec.y1(t) * spec.p0(t); }) / n0;
        CHECK(close(pre.selection_bias + pre.reweight_bias, gap_y1, 1e-8));
    }
}

TEST_CASE("equal regimes collapse the decomposition") {
    const auto spec = DGPSpec(ProductivityDistribution::log_normal(0.0, 0.6),
                              HiringFunction::logistic(-1.0, 0.8),
                              HiringFunction::logistic(-1.0, 0.8),
                              OutcomeFunction(4.0, 1.5, 0.0),
                              OutcomeFunction(5.0, 1.8, 0.0),
                              CovariateModel::identity());
    const auto rep = compute_report(spec);
    CHECK(close(rep.tau_q0, rep.tau_q1, 1e-8));
    CHECK(std::fabs(rep.post.selection_bias) <= 1e-8);
    CHECK(std::fabs(rep.post.reweight_bias) <= 1e-8);
    CHECK(std::fabs(rep.pre.selection_bias) <= 1e-8);
    CHECK(std::fabs(rep.pre.reweight_bias) <= 1e-8);
    CHECK_FALSE(rep.tau_dp.has_value());
    CHECK(close(rep.omd, rep.post.ate_term, 1e-8));
}

TEST_CASE("constant participation collapses weighted ates to the pate") {
    const auto spec = DGPSpec(ProductivityDistribution::exponential(0.8),
                              HiringFunction::logistic(-0.4, 0.0),
                              HiringFunction::logistic(0.3, 0.0),
                              OutcomeFunction(2.0, 3.0, -0.05),
                              OutcomeFunction(1.0, 3.6, 0.0),
                              CovariateModel::identity());
    const double p = pate(spec);
    CHECK(close(weighted_ate(spec, WeightingScheme::pre_regime()), p, 1e-8));
    CHECK(close(weighted_ate(spec, WeightingScheme::post_regime()), p, 1e-8));
}

TEST_CASE("report is internally consistent") {
    const auto rep = compute_report(two_type());
    CHECK(rep.omd == rep.ybar1 - rep.ybar0);
    REQUIRE(rep.tau_dp.has_value());
    CHECK(close(*rep.tau_dp, twotype::tau_dp, 1e-12));
}

TEST_CASE("dichotomy thresholds solve to known roots") {
    const auto spec = with_hiring(HiringFunction::ratio_shift(0.0),
                                  HiringFunction::ratio_shift(1.0));
    const auto rep = dichotomy_analysis(spec, 0.5);
    CHECK(close(rep.theta_bar, 1.0, 1e-10));
    CHECK(close(rep.theta_bbar, 0.0, 1e-10));
    CHECK(rep.theta_bbar <= rep.theta_bar);
    CHECK(rep.counterfactual_flag);
}

TEST_CASE("constant effect makes both conditional effects the constant") {
    const auto spec = DGPSpec(ProductivityDistribution::exponential(1.0),
                              HiringFunction::ratio_shift(0.0),
                              HiringFunction::ratio_shift(1.0),
                              OutcomeFunction(1.0, 0.5, 0.0),
                              OutcomeFunction(3.2, 0.5, 0.0),
                              CovariateModel::identity());
    const auto rep = dichotomy_analysis(spec, 0.6);
    CHECK(close(rep.tau_infra, 2.2, 1e-8));
    CHECK(close(rep.tau_mar, 2.2, 1e-8));
}

TEST_CASE("dichotomy ordering holds across random thresholds and specs") {
    SpecGen gen(777);
    int solved = 0;
    for (int rep = 0; solved < 60 && rep < 200; ++rep) {
        const DGPSpec spec = gen.next();
        const double hi = support_upper_bound(spec.distribution, 1.0 - 1e-10);
        const double lo_bound = std::max(spec.p0(0.0), spec.p1(0.0));
        const double hi_bound = std::min(spec.p0(hi), spec.p1(hi));
        if (hi_bound - lo_bound < 1e-3) continue;
        const double threshold =
            lo_bound + (hi_bound - lo_bound) * gen.uniform(0.05, 0.95);
        try {
            const auto d = dichotomy_analysis(spec, threshold);
            CHECK(d.theta_bbar <= d.theta_bar);
            ++solved;
        } catch (const Error& e) {
            // piecewise p can jump across the threshold; strata can be thin
            const bool expected = e.kind() == ErrorKind::ThresholdUnattainable ||
                                  e.kind() == ErrorKind::EmptyStratum;
            CHECK(expected);
        }
    }
    CHECK(solved >= 60);
}

TEST_CASE("unattainable thresholds are rejected") {
    const auto spec = with_hiring(HiringFunction::ratio_shift(0.0),
                                  HiringFunction::ratio_shift(1.0));
    CHECK_THROWS_AS(dichotomy_analysis(spec, 0.4), Error);  // below p1(0) = 0.5
    CHECK_THROWS_AS(dichotomy_analysis(spec, 0.999999999), Error);
}

TEST_CASE("vanishing marginal stratum raises empty-stratum") {
    const auto spec = with_hiring(HiringFunction::ratio_shift(0.0),
                                  HiringFunction::ratio_shift(0.0));
    CHECK_THROWS_AS(dichotomy_analysis(spec, 0.5), Error);
    try {
        dichotomy_analysis(spec, 0.5);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyStratum);
    }
}

TEST_CASE("discrete oracle equals enumeration on random designs") {
    SpecGen gen(9001);
    for (int rep = 0; rep < 20; ++rep) {
        const DGPSpec spec = gen.next_discrete();
        const auto& sup = spec.distribution.support();
        const auto& mass = spec.distribution.masses();
        std::vector<double> p0v, p1v, y0v, y1v;
        for (double t : sup) {
            p0v.push_back(spec.p0(t));
            p1v.push_back(spec.p1(t));
            y0v.push_back(spec.y0(t));
            y1v.push_back(spec.y1(t));
        }
        const auto e = enumerate_discrete(mass, p0v, p1v, y0v, y1v);

        CHECK(close(mass_entrants(spec, 0), e.n0, 1e-12));
        CHECK(close(mass_entrants(spec, 1), e.n1, 1e-12));
        CHECK(close(observed_mean(spec, 0), e.ybar0, 1e-12));
        CHECK(close(observed_mean(spec, 1), e.ybar1, 1e-12));
        CHECK(close(pate(spec), e.pate, 1e-12));
        CHECK(close(weighted_ate(spec, WeightingScheme::pre_regime()), e.tau_q0, 1e-12));
        CHECK(close(weighted_ate(spec, WeightingScheme::post_regime()), e.tau_q1, 1e-12));
        if (!e.dp_degenerate)
            CHECK(close(weighted_ate(spec, WeightingScheme::marginality()), e.tau_dp,
                        1e-12));
        CHECK(close(omd(spec), e.omd, 1e-12));
        const auto post = omd_decomposition(spec, Anchor::Post);
        CHECK(close(post.ate_term, e.post_ate, 1e-12));
        CHECK(close(post.selection_bias, e.post_sel, 1e-12));
        CHECK(close(post.reweight_bias, e.post_rew, 1e-12));
        const auto pre = omd_decomposition(spec, Anchor::Pre);
        CHECK(close(pre.ate_term, e.pre_ate, 1e-12));
        CHECK(close(pre.selection_bias, e.pre_sel, 1e-12));
        CHECK(close(pre.reweight_bias, e.pre_rew, 1e-12));
    }
}

} // TEST_SUITE
