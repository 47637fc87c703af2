#include "margex/mc.hpp"

#include "margex/error.hpp"
#include "margex/rng.hpp"
#include "margex/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace margex {

const char* estimator_name(EstimatorId id) {
    switch (id) {
    case EstimatorId::Omd: return "omd";
    case EstimatorId::IpwPate: return "ipw_pate";
    case EstimatorId::PsmPre: return "psm_pre";
    case EstimatorId::PsmPost: return "psm_post";
    case EstimatorId::Marginality: return "marginality";
    }
    return "";
}

void StudyConfig::validate() const {
    if (replications < 2)
        throw Error(ErrorKind::Validation, "study needs at least 2 replications");
    if (n < 100)
        throw Error(ErrorKind::Validation, "study needs per-cohort n >= 100");
    if (estimators.empty()) return; // legal: header-only report
}

EstimateResult apply_estimator(const Dataset& ds, EstimatorId id,
                               const EstimatorOptions& opt, const DGPSpec* spec) {
    auto propensity = [&](int regime) {
        switch (opt.propensity) {
        case EstimatorOptions::Propensity::Oracle:
            if (!spec)
                throw Error(ErrorKind::Validation,
                            "oracle propensity needs the structural model");
            return PropensityModel::oracle(*spec, regime);
        case EstimatorOptions::Propensity::Binned:
            return fit_propensity(ds, regime, PropensityKind::Binned, opt.bin);
        case EstimatorOptions::Propensity::Logistic:
        default:
            return fit_propensity(ds, regime, PropensityKind::Logistic);
        }
    };

    switch (id) {
    case EstimatorId::Omd:
        return estimate_omd(ds);
    case EstimatorId::IpwPate:
        return estimate_ipw_pate(ds, propensity(0), propensity(1), opt.trim);
    case EstimatorId::PsmPre:
        return estimate_psm(ds, MatchOn::Pre, propensity(0), opt.caliper);
    case EstimatorId::PsmPost:
        return estimate_psm(ds, MatchOn::Post, propensity(1), opt.caliper);
    case EstimatorId::Marginality:
        return estimate_marginality(ds, opt.bin);
    }
    throw Error(ErrorKind::Validation, "unknown estimator");
}

StudyResult run_study(const DGPSpec& spec, const StudyConfig& cfg, Exec exec) {
    cfg.validate();
    const auto validation = validate_spec(spec);
    if (!validation.ok())
        throw Error(ErrorKind::Validation, "invalid spec: " + validation.joined());

    // Oracle targets, computed once.
    const double target_pate = pate(spec);
    const double target_q0 = weighted_ate(spec, WeightingScheme::pre_regime());
    const double target_q1 = weighted_ate(spec, WeightingScheme::post_regime());
    double target_dp = std::numeric_limits<double>::quiet_NaN();
    try {
        target_dp = weighted_ate(spec, WeightingScheme::marginality());
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateWeights) throw;
    }
    auto target_of = [&](EstimatorId id) -> std::pair<std::string, double> {
        switch (id) {
        case EstimatorId::Omd: return {"tau_q1", target_q1};
        case EstimatorId::IpwPate: return {"pate", target_pate};
        case EstimatorId::PsmPre: return {"tau_q0", target_q0};
        case EstimatorId::PsmPost: return {"tau_q1", target_q1};
        case EstimatorId::Marginality: return {"tau_dp", target_dp};
        }
        return {"", 0.0};
    };

    const size_t ne = cfg.estimators.size();
    const size_t nr = static_cast<size_t>(cfg.replications);
    StudyResult res;
    res.replications = cfg.replications;
    res.estimates.assign(ne, std::vector<double>(nr, std::numeric_limits<double>::quiet_NaN()));

    const RngStream root(cfg.master_seed);
    parallel_for(static_cast<std::ptrdiff_t>(nr), exec, [&](std::ptrdiff_t r) {
        SampleConfig scfg;
        scfg.n_pre = cfg.n;
        scfg.n_post = cfg.n;
        scfg.seed = root.split(static_cast<uint64_t>(r)).key();
        const Dataset ds = simulate(spec, scfg, Exec::Serial);
        for (size_t e = 0; e < ne; ++e) {
            try {
                res.estimates[e][static_cast<size_t>(r)] =
                    apply_estimator(ds, cfg.estimators[e], cfg.options, &spec).point;
            } catch (const Error&) {
                // failure recorded as NaN
            }
        }
    });

    for (size_t e = 0; e < ne; ++e) {
        StudyRow row;
        row.estimator = estimator_name(cfg.estimators[e]);
        const auto [tname, tvalue] = target_of(cfg.estimators[e]);
        row.target = tname;
        row.target_value = tvalue;

        int64_t ok = 0;
        double mean = 0.0;
        for (double v : res.estimates[e])
            if (!std::isnan(v)) {
                mean += v;
                ++ok;
            }
        row.failures = cfg.replications - ok;
        if (ok == 0) {
            row.mean = row.bias = row.sd = row.rmse =
                std::numeric_limits<double>::quiet_NaN();
        } else {
            mean /= static_cast<double>(ok);
            double ss = 0.0, se2 = 0.0;
            for (double v : res.estimates[e])
                if (!std::isnan(v)) {
                    ss += (v - mean) * (v - mean);
                    se2 += (v - tvalue) * (v - tvalue);
                }
            row.mean = mean;
            row.bias = mean - tvalue;
            row.sd = std::sqrt(ss / static_cast<double>(ok));
            row.rmse = std::sqrt(se2 / static_cast<double>(ok));
        }
        res.rows.push_back(std::move(row));
    }
    return res;
}

namespace {

std::string num_or_nan(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_study_report(const StudyResult& res, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    out << "estimator,target,target_value,mean,bias,sd,rmse,failures\n";
    for (const auto& r : res.rows)
        out << r.estimator << "," << r.target << "," << num_or_nan(r.target_value)
            << "," << num_or_nan(r.mean) << "," << num_or_nan(r.bias) << ","
            << num_or_nan(r.sd) << "," << num_or_nan(r.rmse) << "," << r.failures
            << "\n";
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing study report to " + path);
}

void write_replicate_dump(const StudyResult& res, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    out << "replicate,estimator,estimate\n";
    for (int64_t r = 0; r < res.replications; ++r)
        for (size_t e = 0; e < res.rows.size(); ++e)
            out << r << "," << res.rows[e].estimator << ","
                << num_or_nan(res.estimates[e][static_cast<size_t>(r)]) << "\n";
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing replicate dump to " + path);
}

} // namespace margex
