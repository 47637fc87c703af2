#pragma once

#include "margex/dgp.hpp"

#include <functional>
#include <vector>

namespace margex {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    int max_subdivisions = 2048;
    double truncation_quantile = 1.0 - 1e-10;

    void validate() const;
};

// Adaptive Simpson integration of f over [a, b] with Richardson error
// control: intervals are refined worst-first until the summed error
// estimate drops below abs_tol. `breakpoints` inside (a, b) seed the
// initial partition so integrand discontinuities sit on interval ends.
// Throws NonConvergenceError (carrying the best estimate) when the
// subdivision budget runs out.
double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          const QuadratureConfig& cfg,
                          const std::vector<double>& breakpoints = {});

// Integral of g against dF: quadrature of g*f over the truncated support for
// continuous families, exact finite summation for Discrete.
double integrate_dF(const ProductivityDistribution& dist,
                    const std::function<double(double)>& g,
                    const QuadratureConfig& cfg,
                    const std::vector<double>& breakpoints = {});

// Same restricted to [lo, hi] (intersected with the truncated support). For
// Discrete, sums support points with lo < theta <= hi.
double integrate_dF_range(const ProductivityDistribution& dist,
                          const std::function<double(double)>& g, double lo, double hi,
                          const QuadratureConfig& cfg,
                          const std::vector<double>& breakpoints = {});

} // namespace margex
