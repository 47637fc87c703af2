#include "margex/estimators.hpp"

#include "margex/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace margex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Compensated accumulator; keeps cell means exact enough for the plug-in
// identity even when a cell holds 10^5 identical outcomes.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double t = v - carry;
        const double s = sum + t;
        carry = (s - sum) - t;
        sum = s;
    }
};

double stable_log1pexp(double t) {
    if (t > 35.0) return t;
    if (t < -35.0) return std::exp(t);
    return std::log1p(std::exp(t));
}

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace

// ------------------------------------------------------------------- binning

void BinningConfig::validate() const {
    if (cells < 2)
        throw Error(ErrorKind::Validation, "binning needs at least 2 cells");
    if (min_participants < 1)
        throw Error(ErrorKind::Validation, "minimum participants per cell must be >= 1");
}

std::vector<double> pooled_cell_edges(std::vector<double> xs, int cells) {
    if (xs.empty())
        throw Error(ErrorKind::InsufficientData, "no observations to bin");
    std::sort(xs.begin(), xs.end());

    std::vector<double> distinct;
    distinct.reserve(xs.size());
    for (double v : xs)
        if (distinct.empty() || v != distinct.back()) distinct.push_back(v);

    std::vector<double> edges;
    if (distinct.size() <= static_cast<size_t>(cells)) {
        for (size_t i = 0; i + 1 < distinct.size(); ++i)
            edges.push_back(distinct[i] + 0.5 * (distinct[i + 1] - distinct[i]));
        return edges;
    }
    const size_t n = xs.size();
    for (int k = 1; k < cells; ++k) {
        const double e = xs[n * static_cast<size_t>(k) / static_cast<size_t>(cells)];
        if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    return edges;
}

size_t cell_index(const std::vector<double>& edges, double x) {
    return static_cast<size_t>(std::upper_bound(edges.begin(), edges.end(), x) -
                               edges.begin());
}

// ---------------------------------------------------------------- propensity

PropensityModel PropensityModel::logistic_fit(int regime, double intercept,
                                              double slope) {
    PropensityModel pm;
    pm.kind_ = Kind::LogisticFit;
    pm.regime_ = regime;
    pm.a_ = intercept;
    pm.b_ = slope;
    return pm;
}

PropensityModel PropensityModel::binned_rates(int regime, std::vector<double> edges,
                                              std::vector<double> rates) {
    if (rates.size() != edges.size() + 1)
        throw Error(ErrorKind::Validation, "binned rates need edges.size()+1 cells");
    for (size_t i = 1; i < edges.size(); ++i)
        if (edges[i] <= edges[i - 1])
            throw Error(ErrorKind::Validation, "binned edges must be strictly increasing");
    for (double r : rates)
        if (!std::isnan(r) && (r < 0.0 || r > 1.0))
            throw Error(ErrorKind::Validation, "binned rates must lie in [0,1]");
    PropensityModel pm;
    pm.kind_ = Kind::BinnedRates;
    pm.regime_ = regime;
    pm.edges_ = std::move(edges);
    pm.rates_ = std::move(rates);
    return pm;
}

PropensityModel PropensityModel::oracle(const DGPSpec& spec, int regime) {
    PropensityModel pm;
    pm.kind_ = Kind::OracleProbability;
    pm.regime_ = regime;
    pm.p_ = spec.p(regime);
    return pm;
}

double PropensityModel::predict(double x) const {
    switch (kind_) {
    case Kind::LogisticFit:
        return sigmoid(a_ + b_ * x);
    case Kind::BinnedRates:
        return rates_[cell_index(edges_, x)];
    case Kind::OracleProbability:
        return (*p_)(std::max(x, 0.0));
    }
    return kNaN;
}

PropensityModel fit_propensity(const Dataset& ds, int regime, PropensityKind kind,
                               const BinningConfig& bincfg) {
    std::vector<double> x;
    std::vector<int> d;
    for (const auto& r : ds.records) {
        if (r.regime != regime) continue;
        x.push_back(r.x);
        d.push_back(r.d);
    }
    const size_t n = x.size();
    if (n == 0)
        throw Error(ErrorKind::InsufficientData,
                    "no observations in regime " + std::to_string(regime));

    if (kind == PropensityKind::Binned) {
        bincfg.validate();
        std::vector<double> pooled;
        pooled.reserve(ds.records.size());
        for (const auto& r : ds.records) pooled.push_back(r.x);
        auto edges = pooled_cell_edges(std::move(pooled), bincfg.cells);

        std::vector<int64_t> members(edges.size() + 1, 0), hits(edges.size() + 1, 0);
        for (size_t i = 0; i < n; ++i) {
            const size_t c = cell_index(edges, x[i]);
            ++members[c];
            hits[c] += d[i];
        }
        std::vector<double> rates(edges.size() + 1, kNaN);
        for (size_t c = 0; c < rates.size(); ++c)
            if (members[c] > 0)
                rates[c] = static_cast<double>(hits[c]) / static_cast<double>(members[c]);
        return PropensityModel::binned_rates(regime, std::move(edges), std::move(rates));
    }

    // Logistic fit.
    int64_t ones = 0;
    for (int v : d) ones += v;
    if (ones == 0 || ones == static_cast<int64_t>(n))
        throw Error(ErrorKind::Separation,
                    "all observations share d=" + std::to_string(d.front()) +
                        "; the likelihood is degenerate (consider binned rates)");

    double mx = 0.0;
    for (double v : x) mx += v;
    mx /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mx) * (v - mx);
    var /= static_cast<double>(n);
    if (var <= 0.0)
        throw Error(ErrorKind::Validation, "x is constant; logistic fit is unidentified");
    const double sx = std::sqrt(var);

    double min1 = std::numeric_limits<double>::infinity(), max1 = -min1;
    double min0 = min1, max0 = -min1;
    for (size_t i = 0; i < n; ++i) {
        if (d[i] == 1) {
            min1 = std::min(min1, x[i]);
            max1 = std::max(max1, x[i]);
        } else {
            min0 = std::min(min0, x[i]);
            max0 = std::max(max0, x[i]);
        }
    }
    if (max0 < min1 || max1 < min0)
        throw Error(ErrorKind::Separation,
                    "x separates d perfectly; the MLE diverges (consider binned rates)");

    std::vector<double> z(n);
    for (size_t i = 0; i < n; ++i) z[i] = (x[i] - mx) / sx;

    auto mean_nll = [&](double a, double b) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double eta = a + b * z[i];
            s += stable_log1pexp(eta) - d[i] * eta;
        }
        return s / static_cast<double>(n);
    };

    const double rate = static_cast<double>(ones) / static_cast<double>(n);
    double alpha = std::log(rate / (1.0 - rate));
    double beta = 0.0;
    double nll = mean_nll(alpha, beta);
    bool converged = false;

    for (int iter = 0; iter < 100; ++iter) {
        double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double mu = sigmoid(alpha + beta * z[i]);
            const double resid = mu - d[i];
            const double w = mu * (1.0 - mu);
            g0 += resid;
            g1 += resid * z[i];
            h00 += w;
            h01 += w * z[i];
            h11 += w * z[i] * z[i];
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        g0 *= inv_n; g1 *= inv_n;
        h00 *= inv_n; h01 *= inv_n; h11 *= inv_n;

        if (std::max(std::fabs(g0), std::fabs(g1)) <= 1e-10) {
            converged = true;
            break;
        }
        const double det = h00 * h11 - h01 * h01;
        if (!(det > 1e-14))
            throw Error(ErrorKind::Separation,
                        "logistic information matrix is singular (consider binned rates)");
        double da = (h11 * g0 - h01 * g1) / det;
        double db = (h00 * g1 - h01 * g0) / det;

        double step = 1.0;
        double cand_nll;
        for (int halving = 0;; ++halving) {
            cand_nll = mean_nll(alpha - step * da, beta - step * db);
            if (cand_nll <= nll || halving >= 60) break;
            step *= 0.5;
        }
        alpha -= step * da;
        beta -= step * db;
        nll = cand_nll;
        if (std::fabs(beta) > 40.0)
            throw Error(ErrorKind::Separation,
                        "fitted propensity saturates; quasi-separation (consider binned rates)");
    }
    if (!converged)
        throw Error(ErrorKind::NonConvergence,
                    "logistic fit did not reach gradient tolerance in 100 iterations");

    return PropensityModel::logistic_fit(regime, alpha - beta * mx / sx, beta / sx);
}

// ------------------------------------------------------------------------ omd

EstimateResult estimate_omd(const Dataset& ds) {
    KahanSum sum[2];
    int64_t count[2] = {0, 0};
    for (const auto& r : ds.records) {
        if (r.d == 1) {
            sum[r.regime].add(*r.outcome);
            ++count[r.regime];
        }
    }
    for (int s = 0; s < 2; ++s)
        if (count[s] == 0)
            throw Error(ErrorKind::InsufficientData,
                        "regime " + std::to_string(s) + " has no participants");

    EstimateResult res;
    res.estimand = "omd";
    res.point = sum[1].sum / static_cast<double>(count[1]) -
                sum[0].sum / static_cast<double>(count[0]);
    res.diag.n_used = count[0] + count[1];
    res.diag.n_dropped = 0;
    return res;
}

// ------------------------------------------------------------------------ ipw

EstimateResult estimate_ipw_pate(const Dataset& ds, const PropensityModel& pm0,
                                 const PropensityModel& pm1, double trim) {
    if (!(trim >= 0.0 && trim < 0.5))
        throw Error(ErrorKind::Validation, "trim must lie in [0, 0.5)");
    if (pm0.fitted_regime() != 0 || pm1.fitted_regime() != 1)
        throw Error(ErrorKind::Validation,
                    "IPW needs one propensity model per regime, fitted on that regime");

    double mean[2] = {0.0, 0.0};
    int64_t cohort[2] = {0, 0}, participants[2] = {0, 0}, clipped[2] = {0, 0};
    KahanSum acc[2];

    for (const auto& r : ds.records) {
        const int s = r.regime;
        ++cohort[s];
        if (r.d != 1) continue;
        ++participants[s];
        const double p = (s == 0 ? pm0 : pm1).predict(r.x);
        if (std::isnan(p))
            throw Error(ErrorKind::DegenerateWeights,
                        "participant falls in a cell with no fitted propensity");
        if (p < trim) ++clipped[s];
        const double w = std::max(p, trim);
        if (w <= 0.0)
            throw Error(ErrorKind::DegenerateWeights,
                        "participant has zero propensity and trimming is disabled");
        acc[s].add(*r.outcome / w);
    }
    for (int s = 0; s < 2; ++s) {
        if (cohort[s] == 0 || participants[s] == 0)
            throw Error(ErrorKind::InsufficientData,
                        "regime " + std::to_string(s) + " has no participants");
        if (clipped[s] == participants[s])
            throw Error(ErrorKind::DegenerateWeights,
                        "every participant propensity in regime " + std::to_string(s) +
                            " falls below the trim floor");
        mean[s] = acc[s].sum / static_cast<double>(cohort[s]);
    }

    EstimateResult res;
    res.estimand = "ipw_pate";
    res.point = mean[1] - mean[0];
    res.diag.n_used = participants[0] + participants[1];
    res.diag.n_dropped = 0;
    if (clipped[0] + clipped[1] > 0)
        res.diag.warnings.push_back("clipped " + std::to_string(clipped[0] + clipped[1]) +
                                    " propensity predictions at trim floor");
    return res;
}

// ------------------------------------------------------------------------ psm

EstimateResult estimate_psm(const Dataset& ds, MatchOn match_on,
                            const PropensityModel& pm, std::optional<double> caliper,
                            Exec exec) {
    const int anchor_regime = match_on == MatchOn::Pre ? 0 : 1;
    if (pm.fitted_regime() != anchor_regime)
        throw Error(ErrorKind::Validation,
                    "matching on the " +
                        std::string(match_on == MatchOn::Pre ? "pre" : "post") +
                        " side needs a propensity fitted on regime " +
                        std::to_string(anchor_regime));
    if (caliper && !(*caliper > 0.0))
        throw Error(ErrorKind::Validation, "caliper must be > 0");

    struct Anchor {
        double p;
        double y;
    };
    struct Candidate {
        double p;
        int64_t id;
        double y;
    };
    std::vector<Anchor> anchors;
    std::vector<Candidate> candidates;
    int64_t anchors_missing_p = 0, candidates_missing_p = 0;

    for (const auto& r : ds.records) {
        if (r.d != 1) continue;
        const double p = pm.predict(r.x);
        if (r.regime == anchor_regime) {
            if (std::isnan(p)) {
                ++anchors_missing_p;
                anchors.push_back({kNaN, 0.0});
            } else {
                anchors.push_back({p, *r.outcome});
            }
        } else {
            if (std::isnan(p))
                ++candidates_missing_p;
            else
                candidates.push_back({p, r.firm_id, *r.outcome});
        }
    }
    const int64_t other_participants =
        static_cast<int64_t>(candidates.size()) + candidates_missing_p;
    if (anchors.empty() || other_participants == 0)
        throw Error(ErrorKind::InsufficientData,
                    "matching needs participants in both regimes");
    if (candidates.empty())
        throw Error(ErrorKind::EmptyMatch, "no candidate has a usable propensity");

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a,
                                                       const Candidate& b) {
        return a.p != b.p ? a.p < b.p : a.id < b.id;
    });
    // One representative per distinct propensity value: the lowest firm_id.
    std::vector<double> up;
    std::vector<int64_t> uid;
    std::vector<double> uy;
    for (const auto& c : candidates) {
        if (up.empty() || c.p != up.back()) {
            up.push_back(c.p);
            uid.push_back(c.id);
            uy.push_back(c.y);
        }
    }

    const double sign = match_on == MatchOn::Post ? 1.0 : -1.0;
    std::vector<double> contrib(anchors.size(), kNaN);

    parallel_for(static_cast<std::ptrdiff_t>(anchors.size()), exec,
                 [&](std::ptrdiff_t i) {
        const Anchor& a = anchors[static_cast<size_t>(i)];
        if (std::isnan(a.p)) return;
        const auto it = std::lower_bound(up.begin(), up.end(), a.p);
        const size_t hi = static_cast<size_t>(it - up.begin());
        size_t pick;
        double dist;
        if (hi == up.size()) {
            pick = hi - 1;
            dist = a.p - up[pick];
        } else if (hi == 0) {
            pick = 0;
            dist = up[0] - a.p;
        } else {
            const double d_lo = a.p - up[hi - 1];
            const double d_hi = up[hi] - a.p;
            if (d_lo < d_hi) {
                pick = hi - 1;
                dist = d_lo;
            } else if (d_hi < d_lo) {
                pick = hi;
                dist = d_hi;
            } else {
                pick = uid[hi - 1] < uid[hi] ? hi - 1 : hi;
                dist = d_lo;
            }
        }
        if (caliper && dist > *caliper) return;
        contrib[static_cast<size_t>(i)] = sign * (a.y - uy[pick]);
    });

    KahanSum acc;
    int64_t used = 0;
    for (double c : contrib) {
        if (!std::isnan(c)) {
            acc.add(c);
            ++used;
        }
    }
    if (used == 0)
        throw Error(ErrorKind::EmptyMatch,
                    "every anchor was dropped (caliper or missing propensity)");

    EstimateResult res;
    res.estimand = match_on == MatchOn::Pre ? "psm_pre" : "psm_post";
    res.point = acc.sum / static_cast<double>(used);
    res.diag.n_used = used;
    res.diag.n_dropped = static_cast<int64_t>(anchors.size()) - used;
    if (res.diag.n_dropped > 0)
        res.diag.warnings.push_back(std::to_string(res.diag.n_dropped) +
                                    " anchors unmatched (caliper or missing propensity)");
    if (candidates_missing_p > 0)
        res.diag.warnings.push_back(std::to_string(candidates_missing_p) +
                                    " candidates lacked a propensity value");
    return res;
}

// ---------------------------------------------------------------- marginality

namespace {

EstimateResult marginality_core(const Dataset& ds, const BinningConfig& bincfg,
                                const DGPSpec* plugin) {
    bincfg.validate();
    if (ds.records.empty())
        throw Error(ErrorKind::InsufficientData, "dataset is empty");

    std::vector<double> pooled;
    pooled.reserve(ds.records.size());
    for (const auto& r : ds.records) pooled.push_back(r.x);
    const auto edges = pooled_cell_edges(std::move(pooled), bincfg.cells);
    const size_t ncells = edges.size() + 1;

    std::vector<int64_t> members[2], part[2];
    std::vector<KahanSum> ysum[2];
    for (int s = 0; s < 2; ++s) {
        members[s].assign(ncells, 0);
        part[s].assign(ncells, 0);
        ysum[s].assign(ncells, KahanSum{});
    }
    std::vector<KahanSum> dp_plugin(ncells);

    for (const auto& r : ds.records) {
        const size_t c = cell_index(edges, r.x);
        ++members[r.regime][c];
        if (r.d == 1) {
            ++part[r.regime][c];
            ysum[r.regime][c].add(*r.outcome);
        }
        if (plugin) {
            const double t = std::max(r.x, 0.0);
            dp_plugin[c].add(plugin->p1(t) - plugin->p0(t));
        }
    }
    const int64_t total = static_cast<int64_t>(ds.records.size());

    EstimateResult res;
    res.estimand = "marginality";
    res.diag.cells.reserve(ncells);

    double num = 0.0, den = 0.0;
    int64_t usable = 0;
    const double inf = std::numeric_limits<double>::infinity();

    for (size_t c = 0; c < ncells; ++c) {
        CellSummary cell;
        cell.lo = c == 0 ? -inf : edges[c - 1];
        cell.hi = c == ncells - 1 ? inf : edges[c];
        cell.n_pre = members[0][c];
        cell.n_post = members[1][c];
        cell.part_pre = part[0][c];
        cell.part_post = part[1][c];
        const int64_t pooled_members = cell.n_pre + cell.n_post;
        if (pooled_members == 0) continue; // duplicate-heavy data can gap a cell

        cell.rate_pre = cell.n_pre > 0
                            ? static_cast<double>(cell.part_pre) / cell.n_pre
                            : kNaN;
        cell.rate_post = cell.n_post > 0
                             ? static_cast<double>(cell.part_post) / cell.n_post
                             : kNaN;
        if (plugin) {
            cell.dp = dp_plugin[c].sum / static_cast<double>(pooled_members);
            const double hi_cdf = c == ncells - 1
                                      ? 1.0
                                      : plugin->distribution.cdf(std::max(edges[c], 0.0));
            const double lo_cdf =
                c == 0 ? 0.0 : plugin->distribution.cdf(std::max(edges[c - 1], 0.0));
            cell.fhat = hi_cdf - lo_cdf;
        } else {
            cell.dp = cell.rate_post - cell.rate_pre;
            cell.fhat = static_cast<double>(pooled_members) / static_cast<double>(total);
        }
        cell.tau = (cell.part_post > 0 && cell.part_pre > 0)
                       ? ysum[1][c].sum / cell.part_post - ysum[0][c].sum / cell.part_pre
                       : kNaN;

        if (cell.n_pre == 0 || cell.n_post == 0)
            cell.drop_reason = "empty-regime";
        else if (cell.part_pre < bincfg.min_participants ||
                 cell.part_post < bincfg.min_participants)
            cell.drop_reason = "min-participants";
        else if (!(cell.dp > 0.0))
            cell.drop_reason = "nonpositive-dp";
        else {
            cell.used = true;
            ++usable;
            num += cell.tau * cell.dp * cell.fhat;
            den += cell.dp * cell.fhat;
            res.diag.n_used += pooled_members;
        }
        if (!cell.used) res.diag.n_dropped += pooled_members;
        res.diag.cells.push_back(std::move(cell));
    }

    if (usable == 0 || den <= 0.0)
        throw Error(ErrorKind::DegenerateWeights,
                    "no cell carries positive incremental participation "
                    "(p1 = p0 up to sampling noise, or all cells excluded)");
    if (usable < 2)
        throw Error(ErrorKind::InsufficientData,
                    "fewer than 2 usable cells after exclusions");

    res.point = num / den;
    int64_t dropped_cells = static_cast<int64_t>(res.diag.cells.size()) - usable;
    if (dropped_cells > 0)
        res.diag.warnings.push_back(std::to_string(dropped_cells) +
                                    " cells excluded from both sums");
    return res;
}

} // namespace

EstimateResult estimate_marginality(const Dataset& ds, const BinningConfig& bincfg) {
    return marginality_core(ds, bincfg, nullptr);
}

EstimateResult estimate_marginality_plugin(const Dataset& ds,
                                           const BinningConfig& bincfg,
                                           const DGPSpec& spec) {
    return marginality_core(ds, bincfg, &spec);
}

} // namespace margex
