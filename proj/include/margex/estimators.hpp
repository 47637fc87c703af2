#pragma once

#include "margex/dataset.hpp"
#include "margex/dgp.hpp"
#include "margex/parallel.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace margex {

// Pooled-sample cells over x: interior edges define the half-open intervals
// (-inf, e0), [e0, e1), ..., [e_{k-1}, +inf). When the pooled sample has at
// most `cells` distinct x values, edges sit at midpoints between consecutive
// values, so each distinct value gets its own cell (this is what makes
// "cells = support points" exact on discrete designs); otherwise edges are
// pooled-sample quantiles.
std::vector<double> pooled_cell_edges(std::vector<double> xs, int cells);
size_t cell_index(const std::vector<double>& edges, double x);

struct BinningConfig {
    int cells = 20;
    int min_participants = 5; // per cell per regime

    void validate() const;
};

struct CellSummary {
    double lo = 0.0, hi = 0.0; // +-inf at the extremes
    int64_t n_pre = 0, n_post = 0;
    int64_t part_pre = 0, part_post = 0;
    double rate_pre = 0.0, rate_post = 0.0;
    double dp = 0.0;
    double tau = 0.0;
    double fhat = 0.0;
    bool used = false;
    std::string drop_reason;
};

struct Diagnostics {
    int64_t n_used = 0;
    int64_t n_dropped = 0;
    std::vector<std::string> warnings;
    std::vector<CellSummary> cells;
};

struct EstimateResult {
    std::string estimand;
    double point = 0.0;
    std::optional<double> se; // attached by the bootstrap layer
    Diagnostics diag;
};

// p_hat^s(x). Each model is fitted on (and tagged with) a single regime;
// there is deliberately no pooled-regime mode.
class PropensityModel {
public:
    enum class Kind { LogisticFit, BinnedRates, OracleProbability };

    static PropensityModel logistic_fit(int regime, double intercept, double slope);
    static PropensityModel binned_rates(int regime, std::vector<double> edges,
                                        std::vector<double> rates);
    // Exact p^s evaluated at x (diagnostics; meaningful when the covariate is
    // the identity proxy for theta).
    static PropensityModel oracle(const DGPSpec& spec, int regime);

    Kind kind() const { return kind_; }
    int fitted_regime() const { return regime_; }
    // NaN marks a binned cell with no regime data.
    double predict(double x) const;
    double intercept() const { return a_; }
    double slope() const { return b_; }

private:
    PropensityModel() = default;
    Kind kind_ = Kind::LogisticFit;
    int regime_ = 0;
    double a_ = 0.0, b_ = 0.0;
    std::vector<double> edges_;
    std::vector<double> rates_;
    std::optional<HiringFunction> p_;
};

enum class PropensityKind { Logistic, Binned };

// LogisticFit: damped Newton on the Bernoulli log likelihood of d on (1, x),
// run to mean-gradient max-norm <= 1e-10 within 100 iterations. BinnedRates:
// per-cell participation frequencies on pooled-sample cells.
PropensityModel fit_propensity(const Dataset& ds, int regime, PropensityKind kind,
                               const BinningConfig& bincfg = {});

EstimateResult estimate_omd(const Dataset& ds);

// Difference of per-regime inverse-propensity-weighted outcome means, with
// predictions clipped below at `trim`.
EstimateResult estimate_ipw_pate(const Dataset& ds, const PropensityModel& pm0,
                                 const PropensityModel& pm1, double trim = 0.01);

enum class MatchOn { Pre, Post };

// 1-nearest-neighbor propensity matching with replacement, ties to the
// lowest firm_id. The match_on cohort anchors both the matching and the
// average, which is what ties each direction to its Q^s-weighted target:
// Post averages y_i - y_match(i) over post participants (target tau^{Q1},
// propensity fitted on regime 1); Pre averages y_match(i) - y_i over pre
// participants (target tau^{Q0}, propensity fitted on regime 0 and
// extrapolated to regime 1).
EstimateResult estimate_psm(const Dataset& ds, MatchOn match_on,
                            const PropensityModel& pm,
                            std::optional<double> caliper = std::nullopt,
                            Exec exec = default_exec());

// Binned marginality estimator: sum tau_hat(x) dp_hat(x) f_hat(x) over cells
// divided by sum dp_hat(x) f_hat(x). Cells missing the participant minimum
// in either regime or with dp_hat <= 0 drop out of both sums.
EstimateResult estimate_marginality(const Dataset& ds,
                                    const BinningConfig& bincfg = {});

// Plug-in mode: exact per-cell dp from the structural model and exact cell
// masses from its distribution, empirical cell outcomes. On discrete designs
// with one cell per support point this reproduces the oracle tau^{dp}
// identically.
EstimateResult estimate_marginality_plugin(const Dataset& ds,
                                           const BinningConfig& bincfg,
                                           const DGPSpec& spec);

struct BootstrapSE {
    double se = 0.0;
    int64_t replicates = 0;
    int64_t failures = 0;
    bool single_replicate = false;
};

// Stratified nonparametric bootstrap: firms resampled with replacement
// within each regime. Replicate b draws its indices from stream
// root(seed).split(b).split(regime). Errors in more than 20% of replicates
// raise unstable-estimator.
BootstrapSE bootstrap_se(const Dataset& ds,
                         const std::function<double(const Dataset&)>& estimator,
                         int replicates = 200, uint64_t seed = 0,
                         Exec exec = default_exec());

} // namespace margex
