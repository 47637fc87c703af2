#pragma once

#include "margex/dgp.hpp"
#include "margex/quadrature.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace margex {

// Which w(theta) defines the estimand tau^w = int tau w dF / int w dF.
class WeightingScheme {
public:
    enum class Kind { Population, PreRegime, PostRegime, Marginality, CustomGrid };

    static WeightingScheme population();
    static WeightingScheme pre_regime();
    static WeightingScheme post_regime();
    static WeightingScheme marginality();
    // Piecewise-linear weights over grid points; clamped to the end values
    // outside the grid. Values must be nonnegative.
    static WeightingScheme custom_grid(std::vector<double> grid,
                                       std::vector<double> values);

    Kind kind() const { return kind_; }
    double weight(const DGPSpec& spec, double theta) const;
    std::vector<double> knots() const;
    std::string name() const;

private:
    WeightingScheme() = default;
    Kind kind_ = Kind::Population;
    std::vector<double> grid_;
    std::vector<double> values_;
    double scale_ = 1.0; // max grid value; ratios are scale invariant
};

enum class Anchor { Post, Pre };

struct Decomposition {
    double ate_term = 0.0;
    double selection_bias = 0.0;
    double reweight_bias = 0.0;
    double sum() const { return ate_term + selection_bias + reweight_bias; }
};

struct EstimandReport {
    double n0 = 0.0, n1 = 0.0;
    double ybar0 = 0.0, ybar1 = 0.0;
    double pate = 0.0;
    double tau_q0 = 0.0, tau_q1 = 0.0;
    std::optional<double> tau_dp; // absent when p1 == p0 (degenerate weights)
    double omd = 0.0;
    Decomposition post;
    Decomposition pre;
};

struct DichotomyReport {
    double p_threshold = 0.0;
    double theta_bar = 0.0;  // p0(theta_bar) = threshold
    double theta_bbar = 0.0; // p1(theta_bbar) = threshold
    double tau_infra = 0.0;  // E[tau | theta > theta_bar]
    double tau_mar = 0.0;    // E[tau | theta_bbar < theta <= theta_bar]
    // Always true: the y0 side of tau_mar has no empirical counterpart
    // (marginal firms never hire pre-reform); it is computable here only
    // because the structural model is known.
    bool counterfactual_flag = true;
};

// int g dF over the truncated support; exact summation for Discrete.
double integrate(const DGPSpec& spec, const std::function<double(double)>& g,
                 const QuadratureConfig& qcfg = {});

// N^s = int p^s dF. Throws degenerate-regime when the mass is <= 0.
double mass_entrants(const DGPSpec& spec, int regime, const QuadratureConfig& qcfg = {});

// q^s(theta) = p^s(theta) f(theta) / N^s (an importance-weighted mass for
// Discrete distributions).
double importance_density(const DGPSpec& spec, int regime, double theta,
                          const QuadratureConfig& qcfg = {});

// ybar^s = int y^s p^s dF / N^s.
double observed_mean(const DGPSpec& spec, int regime, const QuadratureConfig& qcfg = {});

double pate(const DGPSpec& spec, const QuadratureConfig& qcfg = {});

double weighted_ate(const DGPSpec& spec, const WeightingScheme& scheme,
                    const QuadratureConfig& qcfg = {});

double omd(const DGPSpec& spec, const QuadratureConfig& qcfg = {});

// Exact split of OMD into (weighted ATE, selection bias, reweighting bias);
// the three terms sum to OMD by construction.
Decomposition omd_decomposition(const DGPSpec& spec, Anchor anchor,
                                const QuadratureConfig& qcfg = {});

DichotomyReport dichotomy_analysis(const DGPSpec& spec, double p_threshold,
                                   const QuadratureConfig& qcfg = {});

EstimandReport compute_report(const DGPSpec& spec, const QuadratureConfig& qcfg = {});

} // namespace margex
