#pragma once

#include "margex/dgp.hpp"
#include "margex/oracle.hpp"
#include "margex/rng.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace testutil {

using namespace margex;

// The two-type enumeration design used across the suites:
// theta in {1,2} with masses {.5,.5}, p0 = {.2,.6}, p1 = {.5,.8},
// y0 = {10,20}, y1 = {12,23}.
inline DGPSpec two_type() {
    return DGPSpec(ProductivityDistribution::discrete({1.0, 2.0}, {0.5, 0.5}),
                   HiringFunction::piecewise({0.0, 1.5}, {0.2, 0.6}),
                   HiringFunction::piecewise({0.0, 1.5}, {0.5, 0.8}),
                   OutcomeFunction(0.0, 10.0, 0.0), OutcomeFunction(1.0, 11.0, 0.0),
                   CovariateModel::identity());
}

// Frozen expected values, derived by direct finite-sum enumeration (and
// re-derived independently by enumerate_discrete below).
namespace twotype {
constexpr double n0 = 0.4;
constexpr double n1 = 0.65;
constexpr double pate = 2.5;
constexpr double tau_q0 = 2.75;
constexpr double tau_q1 = 2.6153846153846154;  // 34/13
constexpr double tau_dp = 2.4;
constexpr double ybar0 = 17.5;
constexpr double ybar1 = 18.769230769230770;   // 244/13
constexpr double omd = 1.2692307692307692;     // 33/26
constexpr double post_ate = tau_q1;
constexpr double post_sel = 5.3846153846153846;    // 70/13
constexpr double post_rew = -6.7307692307692308;   // -175/26
constexpr double pre_ate = tau_q0;
constexpr double pre_sel = 10.25;
constexpr double pre_rew = -11.730769230769231;    // -305/26
constexpr double bias_sum = -1.3461538461538463;   // -35/26, post anchor
} // namespace twotype

// Independent oracle for discrete designs: everything as direct finite sums
// over the support, no quadrature and no calls into the library estimand
// code.
struct Enumerated {
    double n0 = 0, n1 = 0;
    double ybar0 = 0, ybar1 = 0;
    double pate = 0, tau_q0 = 0, tau_q1 = 0, tau_dp = 0;
    double omd = 0;
    double post_ate = 0, post_sel = 0, post_rew = 0;
    double pre_ate = 0, pre_sel = 0, pre_rew = 0;
    bool dp_degenerate = false;
};

inline Enumerated enumerate_discrete(const std::vector<double>& mass,
                                     const std::vector<double>& p0,
                                     const std::vector<double>& p1,
                                     const std::vector<double>& y0,
                                     const std::vector<double>& y1) {
    Enumerated e;
    const size_t k = mass.size();
    double sum_tau_dp = 0, sum_dp = 0, sum_y0p0 = 0, sum_y1p1 = 0;
    double sum_y0dp = 0, sum_y1dp = 0, sum_tau_p0 = 0, sum_tau_p1 = 0;
    for (size_t i = 0; i < k; ++i) {
        const double tau = y1[i] - y0[i];
        const double dp = p1[i] - p0[i];
        e.n0 += p0[i] * mass[i];
        e.n1 += p1[i] * mass[i];
        e.pate += tau * mass[i];
        sum_tau_p0 += tau * p0[i] * mass[i];
        sum_tau_p1 += tau * p1[i] * mass[i];
        sum_tau_dp += tau * dp * mass[i];
        sum_dp += dp * mass[i];
        sum_y0p0 += y0[i] * p0[i] * mass[i];
        sum_y1p1 += y1[i] * p1[i] * mass[i];
        sum_y0dp += y0[i] * dp * mass[i];
        sum_y1dp += y1[i] * dp * mass[i];
    }
    e.ybar0 = sum_y0p0 / e.n0;
    e.ybar1 = sum_y1p1 / e.n1;
    e.tau_q0 = sum_tau_p0 / e.n0;
    e.tau_q1 = sum_tau_p1 / e.n1;
    e.dp_degenerate = sum_dp <= 0.0;
    e.tau_dp = e.dp_degenerate ? 0.0 : sum_tau_dp / sum_dp;
    e.omd = e.ybar1 - e.ybar0;
    e.post_ate = e.tau_q1;
    e.post_sel = sum_y0dp / e.n1;
    e.post_rew = (1.0 / e.n1 - 1.0 / e.n0) * sum_y0p0;
    e.pre_ate = e.tau_q0;
    e.pre_sel = sum_y1dp / e.n0;
    e.pre_rew = (1.0 / e.n1 - 1.0 / e.n0) * sum_y1p1;
    return e;
}

// Hand-rolled generator of valid random specs: hiring pairs share a family
// with ordered parameters so p1 >= p0 pointwise by construction.
class SpecGen {
public:
    explicit SpecGen(uint64_t seed) : stream_(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * stream_.next_double(); }
    uint64_t pick(uint64_t n) { return stream_.next_u64() % n; }

    ProductivityDistribution distribution() {
        switch (pick(3)) {
        case 0: return ProductivityDistribution::log_normal(uniform(-0.5, 0.5),
                                                            uniform(0.3, 1.2));
        case 1: return ProductivityDistribution::exponential(uniform(0.4, 2.5));
        default: return discrete_distribution();
        }
    }

    ProductivityDistribution discrete_distribution() {
        const size_t k = 2 + pick(4);
        std::vector<double> sup, m;
        double theta = uniform(0.1, 0.8);
        double total = 0;
        for (size_t i = 0; i < k; ++i) {
            sup.push_back(theta);
            theta += uniform(0.3, 1.5);
            m.push_back(uniform(0.1, 1.0));
            total += m.back();
        }
        for (double& v : m) v /= total;
        // counteract accumulated rounding so the masses sum to 1 exactly
        double s = 0;
        for (size_t i = 0; i + 1 < m.size(); ++i) s += m[i];
        m.back() = 1.0 - s;
        return ProductivityDistribution::discrete(sup, m);
    }

    std::pair<HiringFunction, HiringFunction> hiring_pair() {
        switch (pick(3)) {
        case 0: {
            const double b = uniform(0.1, 1.5);
            const double a0 = uniform(-3.0, 0.0);
            return {HiringFunction::logistic(a0, b),
                    HiringFunction::logistic(a0 + uniform(0.2, 2.0), b)};
        }
        case 1: {
            const double c0 = uniform(0.0, 2.0);
            return {HiringFunction::ratio_shift(c0),
                    HiringFunction::ratio_shift(c0 + uniform(0.1, 2.0))};
        }
        default: {
            std::vector<double> grid = {0.0, uniform(0.4, 1.2), uniform(1.5, 3.5)};
            std::vector<double> v0(3), v1(3);
            double v = uniform(0.05, 0.3);
            const double lift = uniform(0.05, 0.4);
            for (size_t i = 0; i < 3; ++i) {
                v0[i] = v;
                v1[i] = std::min(v + lift, 0.98);
                v = std::min(v + uniform(0.05, 0.3), 0.95);
            }
            return {HiringFunction::piecewise(grid, v0),
                    HiringFunction::piecewise(grid, v1)};
        }
        }
    }

    OutcomeFunction outcome() {
        return OutcomeFunction(uniform(-5.0, 20.0), uniform(-2.0, 3.0),
                               uniform(-0.2, 0.3));
    }

    DGPSpec next() {
        auto [p0, p1] = hiring_pair();
        return DGPSpec(distribution(), p0, p1, outcome(), outcome(),
                       CovariateModel::identity());
    }

    DGPSpec next_discrete() {
        auto [p0, p1] = hiring_pair();
        return DGPSpec(discrete_distribution(), p0, p1, outcome(), outcome(),
                       CovariateModel::identity());
    }

private:
    RngStream stream_;
};

inline bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

} // namespace testutil
