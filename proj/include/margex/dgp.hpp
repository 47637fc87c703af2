#pragma once

#include <string>
#include <vector>

namespace margex {

// Productivity distribution over the nonnegative reals. Discrete supports are
// first class so every downstream quantity has an exact finite-sum path.
class ProductivityDistribution {
public:
    enum class Family { LogNormal, Exponential, Discrete };

    static ProductivityDistribution log_normal(double mu, double sigma);
    static ProductivityDistribution exponential(double rate);
    static ProductivityDistribution discrete(std::vector<double> support,
                                             std::vector<double> masses);

    Family family() const { return family_; }
    bool is_discrete() const { return family_ == Family::Discrete; }

    double density(double theta) const; // mass at support points for Discrete
    double cdf(double theta) const;
    double quantile(double q) const;

    // Inverse-CDF transform of a uniform draw; the fixed sampling recipe.
    double sample(double u) const { return quantile(u); }

    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& masses() const { return masses_; }
    double mu() const { return a_; }
    double sigma() const { return b_; }
    double rate() const { return a_; }

    std::string describe() const;

private:
    ProductivityDistribution() = default;
    Family family_ = Family::LogNormal;
    double a_ = 0.0; // mu or rate
    double b_ = 1.0; // sigma
    std::vector<double> support_;
    std::vector<double> masses_;
    std::vector<double> cum_; // cumulative masses, Discrete only
};

// Regime participation probability p(theta).
class HiringFunction {
public:
    enum class Family { Logistic, RatioShift, PiecewiseConstant };

    // p(theta) = 1 / (1 + exp(-(a + b*theta)))
    static HiringFunction logistic(double intercept, double slope);
    // p(theta) = (theta + c) / (theta + c + 1)
    static HiringFunction ratio_shift(double shift);
    // p(theta) = values[k] for the largest k with grid[k] <= theta;
    // theta below grid[0] takes values[0].
    static HiringFunction piecewise(std::vector<double> grid,
                                    std::vector<double> values);

    Family family() const { return family_; }
    double operator()(double theta) const;

    // Discontinuity locations, for quadrature splitting. Empty unless piecewise.
    const std::vector<double>& knots() const { return grid_; }
    double intercept() const { return a_; }
    double slope() const { return b_; }
    double shift() const { return a_; }
    const std::vector<double>& values() const { return values_; }

    std::string describe() const;

private:
    HiringFunction() = default;
    Family family_ = Family::RatioShift;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> values_;
};

// Potential outcome y(theta) = c0 + c1*theta + c2*theta^2.
class OutcomeFunction {
public:
    OutcomeFunction(double c0, double c1, double c2);

    double operator()(double theta) const {
        return c0_ + theta * (c1_ + theta * c2_);
    }
    double c0() const { return c0_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }

    std::string describe() const;

private:
    double c0_, c1_, c2_;
};

// Observable covariate x as a function of latent theta. Identity and Binned
// make x a deterministic function of theta, so conditional independence of
// theta and participation given x holds by construction.
class CovariateModel {
public:
    enum class Mode { Identity, Binned, NoisyProxy };

    static CovariateModel identity();
    static CovariateModel binned(int cells); // edges bound by DGPSpec quantiles
    static CovariateModel binned_with_edges(std::vector<double> interior_edges);
    static CovariateModel noisy_proxy(double noise_sd);

    Mode mode() const { return mode_; }
    int cells() const { return cells_; }
    double noise_sd() const { return sd_; }
    const std::vector<double>& edges() const { return edges_; }
    bool edges_bound() const { return mode_ != Mode::Binned || !edges_.empty(); }

    void bind_edges(const ProductivityDistribution& dist);

    std::string describe() const;

private:
    CovariateModel() = default;
    Mode mode_ = Mode::Identity;
    int cells_ = 0;
    double sd_ = 0.0;
    std::vector<double> edges_; // interior edges, ascending
};

struct DGPSpec {
    ProductivityDistribution distribution;
    HiringFunction p0;
    HiringFunction p1;
    OutcomeFunction y0;
    OutcomeFunction y1;
    CovariateModel covariate;

    DGPSpec(ProductivityDistribution dist, HiringFunction pre, HiringFunction post,
            OutcomeFunction y_pre, OutcomeFunction y_post, CovariateModel cov);

    const HiringFunction& p(int regime) const;
    const OutcomeFunction& y(int regime) const;

    // FNV-1a hash of the canonical parameter text, as hex. Dataset provenance.
    std::string digest() const;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string joined() const;
};

double eval_density(const ProductivityDistribution& dist, double theta);
double eval_cdf(const ProductivityDistribution& dist, double theta);
double eval_p(const HiringFunction& h, double theta);
double eval_tau(const DGPSpec& spec, double theta);

// Identity -> theta; Binned -> cell index (theta outside the edge range is
// clamped into the extreme cells); NoisyProxy -> theta + noise_sd * noise,
// with `noise` a standard normal deviate.
double eval_covariate(const CovariateModel& cm, double theta, double noise);

// Grid-based checks: monotonicity of p0 and p1, pointwise dominance
// p1 >= p0, density normalization, and implied N1 >= N0. Never throws.
ValidationReport validate_spec(const DGPSpec& spec);

// Upper truncation point F^{-1}(quantile); max support point for Discrete.
double support_upper_bound(const ProductivityDistribution& dist, double quantile);

} // namespace margex
