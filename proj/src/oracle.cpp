#include "margex/oracle.hpp"

#include "margex/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace margex {

namespace {

std::vector<double> spec_breakpoints(const DGPSpec& spec) {
    std::vector<double> pts = spec.p0.knots();
    const auto& k1 = spec.p1.knots();
    pts.insert(pts.end(), k1.begin(), k1.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

constexpr double kWeightFloor = 1e-12;
constexpr double kRootTol = 1e-12;

// Bisection for p(theta) = target on [lo, hi]; p is nondecreasing. Returns
// a theta with |p(theta) - target| <= kRootTol. A target that falls inside
// a jump of a piecewise-constant p is never attained and is rejected.
double solve_probability_root(const HiringFunction& h, double target, double lo,
                              double hi) {
    double plo = h(lo);
    double phi = h(hi);
    if (std::fabs(plo - target) <= kRootTol) return lo;
    if (std::fabs(phi - target) <= kRootTol) return hi;
    if (target < plo || target > phi)
        throw Error(ErrorKind::ThresholdUnattainable,
                    "participation threshold outside the attainable range of p");
    for (int iter = 0; iter < 400; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double pm = h(mid);
        if (std::fabs(pm - target) <= kRootTol) return mid;
        if (pm < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= std::fabs(mid) * 4.0 * std::numeric_limits<double>::epsilon())
            break;
    }
    const double mid = 0.5 * (lo + hi);
    if (std::fabs(h(mid) - target) <= kRootTol) return mid;
    throw Error(ErrorKind::ThresholdUnattainable,
                "participation threshold not attained (p jumps across it)");
}

} // namespace

// ------------------------------------------------------------ weighting scheme

WeightingScheme WeightingScheme::population() {
    WeightingScheme w;
    w.kind_ = Kind::Population;
    return w;
}

WeightingScheme WeightingScheme::pre_regime() {
    WeightingScheme w;
    w.kind_ = Kind::PreRegime;
    return w;
}

WeightingScheme WeightingScheme::post_regime() {
    WeightingScheme w;
    w.kind_ = Kind::PostRegime;
    return w;
}

WeightingScheme WeightingScheme::marginality() {
    WeightingScheme w;
    w.kind_ = Kind::Marginality;
    return w;
}

WeightingScheme WeightingScheme::custom_grid(std::vector<double> grid,
                                             std::vector<double> values) {
    if (grid.size() < 2 || grid.size() != values.size())
        throw Error(ErrorKind::Validation,
                    "custom weight grid needs >= 2 points with matching values");
    double maxv = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]) || !std::isfinite(values[i]))
            throw Error(ErrorKind::Validation, "custom weights must be finite");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw Error(ErrorKind::Validation, "custom weight grid must be increasing");
        if (values[i] < 0.0)
            throw Error(ErrorKind::Validation, "custom weights must be nonnegative");
        maxv = std::max(maxv, values[i]);
    }
    WeightingScheme w;
    w.kind_ = Kind::CustomGrid;
    w.grid_ = std::move(grid);
    w.values_ = std::move(values);
    w.scale_ = maxv > 0.0 ? maxv : 1.0;
    return w;
}

double WeightingScheme::weight(const DGPSpec& spec, double theta) const {
    switch (kind_) {
    case Kind::Population: return 1.0;
    case Kind::PreRegime: return spec.p0(theta);
    case Kind::PostRegime: return spec.p1(theta);
    case Kind::Marginality: return spec.p1(theta) - spec.p0(theta);
    case Kind::CustomGrid: {
        if (theta <= grid_.front()) return values_.front() / scale_;
        if (theta >= grid_.back()) return values_.back() / scale_;
        auto it = std::upper_bound(grid_.begin(), grid_.end(), theta);
        const size_t j = static_cast<size_t>(it - grid_.begin());
        const double t = (theta - grid_[j - 1]) / (grid_[j] - grid_[j - 1]);
        return (values_[j - 1] + t * (values_[j] - values_[j - 1])) / scale_;
    }
    }
    return 1.0;
}

std::vector<double> WeightingScheme::knots() const {
    return kind_ == Kind::CustomGrid ? grid_ : std::vector<double>{};
}

std::string WeightingScheme::name() const {
    switch (kind_) {
    case Kind::Population: return "population";
    case Kind::PreRegime: return "pre_regime";
    case Kind::PostRegime: return "post_regime";
    case Kind::Marginality: return "marginality";
    case Kind::CustomGrid: return "custom_grid";
    }
    return "";
}

// ------------------------------------------------------------------ estimands

double integrate(const DGPSpec& spec, const std::function<double(double)>& g,
                 const QuadratureConfig& qcfg) {
    return integrate_dF(spec.distribution, g, qcfg, spec_breakpoints(spec));
}

double mass_entrants(const DGPSpec& spec, int regime, const QuadratureConfig& qcfg) {
    const HiringFunction& p = spec.p(regime);
    const double mass = integrate_dF(spec.distribution,
                                     [&](double t) { return p(t); }, qcfg, p.knots());
    if (mass <= 0.0)
        throw Error(ErrorKind::DegenerateRegime,
                    "entrant mass is zero in regime " + std::to_string(regime));
    return mass;
}

double importance_density(const DGPSpec& spec, int regime, double theta,
                          const QuadratureConfig& qcfg) {
    if (theta < 0.0)
        throw Error(ErrorKind::Domain, "importance_density: theta must be nonnegative");
    const double n = mass_entrants(spec, regime, qcfg);
    return spec.p(regime)(theta) * spec.distribution.density(theta) / n;
}

double observed_mean(const DGPSpec& spec, int regime, const QuadratureConfig& qcfg) {
    const double n = mass_entrants(spec, regime, qcfg);
    const HiringFunction& p = spec.p(regime);
    const OutcomeFunction& y = spec.y(regime);
    const double num = integrate_dF(spec.distribution,
                                    [&](double t) { return y(t) * p(t); }, qcfg,
                                    p.knots());
    return num / n;
}

double pate(const DGPSpec& spec, const QuadratureConfig& qcfg) {
    return integrate_dF(spec.distribution,
                        [&](double t) { return eval_tau(spec, t); }, qcfg, {});
}

double weighted_ate(const DGPSpec& spec, const WeightingScheme& scheme,
                    const QuadratureConfig& qcfg) {
    std::vector<double> pts = spec_breakpoints(spec);
    const auto wk = scheme.knots();
    pts.insert(pts.end(), wk.begin(), wk.end());

    const double den = integrate_dF(spec.distribution,
                                    [&](double t) { return scheme.weight(spec, t); },
                                    qcfg, pts);
    if (den <= kWeightFloor) {
        if (scheme.kind() == WeightingScheme::Kind::Marginality)
            throw Error(ErrorKind::DegenerateWeights,
                        "marginality weights are identically zero (p1 = p0)");
        throw Error(ErrorKind::DegenerateWeights,
                    "weighting scheme integrates to zero over the support");
    }
    const double num = integrate_dF(
        spec.distribution,
        [&](double t) { return eval_tau(spec, t) * scheme.weight(spec, t); }, qcfg, pts);
    return num / den;
}

double omd(const DGPSpec& spec, const QuadratureConfig& qcfg) {
    return observed_mean(spec, 1, qcfg) - observed_mean(spec, 0, qcfg);
}

Decomposition omd_decomposition(const DGPSpec& spec, Anchor anchor,
                                const QuadratureConfig& qcfg) {
    const double n0 = mass_entrants(spec, 0, qcfg);
    const double n1 = mass_entrants(spec, 1, qcfg);
    const auto pts = spec_breakpoints(spec);
    const auto& dist = spec.distribution;

    Decomposition d;
    if (anchor == Anchor::Post) {
        // OMD = E_{Q1}[tau] + (1/N1) int y0 (p1-p0) dF + (1/N1 - 1/N0) int y0 p0 dF
        d.ate_term = integrate_dF(dist,
                                  [&](double t) { return eval_tau(spec, t) * spec.p1(t); },
                                  qcfg, pts) /
                     n1;
        d.selection_bias =
            integrate_dF(dist,
                         [&](double t) { return spec.y0(t) * (spec.p1(t) - spec.p0(t)); },
                         qcfg, pts) /
            n1;
        d.reweight_bias =
            (1.0 / n1 - 1.0 / n0) *
            integrate_dF(dist, [&](double t) { return spec.y0(t) * spec.p0(t); }, qcfg,
                         pts);
    } else {
        // OMD = E_{Q0}[tau] + (1/N0) int y1 (p1-p0) dF + (1/N1 - 1/N0) int y1 p1 dF
        d.ate_term = integrate_dF(dist,
                                  [&](double t) { return eval_tau(spec, t) * spec.p0(t); },
                                  qcfg, pts) /
                     n0;
        d.selection_bias =
            integrate_dF(dist,
                         [&](double t) { return spec.y1(t) * (spec.p1(t) - spec.p0(t)); },
                         qcfg, pts) /
            n0;
        d.reweight_bias =
            (1.0 / n1 - 1.0 / n0) *
            integrate_dF(dist, [&](double t) { return spec.y1(t) * spec.p1(t); }, qcfg,
                         pts);
    }
    return d;
}

DichotomyReport dichotomy_analysis(const DGPSpec& spec, double p_threshold,
                                   const QuadratureConfig& qcfg) {
    qcfg.validate();
    const double hi = support_upper_bound(spec.distribution, qcfg.truncation_quantile);

    for (int s = 0; s < 2; ++s) {
        const HiringFunction& p = spec.p(s);
        if (p_threshold < p(0.0) - kRootTol || p_threshold > p(hi) + kRootTol)
            throw Error(ErrorKind::ThresholdUnattainable,
                        "threshold " + std::to_string(p_threshold) +
                            " lies outside the range of p" + std::to_string(s));
    }

    DichotomyReport rep;
    rep.p_threshold = p_threshold;
    rep.theta_bar = solve_probability_root(spec.p0, p_threshold, 0.0, hi);
    // p1 dominates p0, so p1 reaches the threshold no later than p0 does;
    // bracketing by theta_bar keeps theta_bbar <= theta_bar.
    rep.theta_bbar = solve_probability_root(spec.p1, p_threshold, 0.0, rep.theta_bar);
    rep.counterfactual_flag = true;

    const auto pts = spec_breakpoints(spec);
    auto tau = [&](double t) { return eval_tau(spec, t); };
    auto one = [](double) { return 1.0; };

    const double infra_mass =
        integrate_dF_range(spec.distribution, one, rep.theta_bar, hi, qcfg, pts);
    if (infra_mass < 1e-12)
        throw Error(ErrorKind::EmptyStratum,
                    "inframarginal stratum has negligible probability mass");
    rep.tau_infra =
        integrate_dF_range(spec.distribution, tau, rep.theta_bar, hi, qcfg, pts) /
        infra_mass;

    const double mar_mass = integrate_dF_range(spec.distribution, one, rep.theta_bbar,
                                               rep.theta_bar, qcfg, pts);
    if (mar_mass < 1e-12)
        throw Error(ErrorKind::EmptyStratum,
                    "marginal stratum has negligible probability mass");
    rep.tau_mar = integrate_dF_range(spec.distribution, tau, rep.theta_bbar,
                                     rep.theta_bar, qcfg, pts) /
                  mar_mass;
    return rep;
}

EstimandReport compute_report(const DGPSpec& spec, const QuadratureConfig& qcfg) {
    EstimandReport r;
    r.n0 = mass_entrants(spec, 0, qcfg);
    r.n1 = mass_entrants(spec, 1, qcfg);
    r.ybar0 = observed_mean(spec, 0, qcfg);
    r.ybar1 = observed_mean(spec, 1, qcfg);
    r.pate = pate(spec, qcfg);
    r.tau_q0 = weighted_ate(spec, WeightingScheme::pre_regime(), qcfg);
    r.tau_q1 = weighted_ate(spec, WeightingScheme::post_regime(), qcfg);
    try {
        r.tau_dp = weighted_ate(spec, WeightingScheme::marginality(), qcfg);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateWeights) throw;
        r.tau_dp.reset();
    }
    r.omd = r.ybar1 - r.ybar0;
    r.post = omd_decomposition(spec, Anchor::Post, qcfg);
    r.pre = omd_decomposition(spec, Anchor::Pre, qcfg);
    return r;
}

} // namespace margex
