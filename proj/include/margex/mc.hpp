#pragma once

#include "margex/estimators.hpp"
#include "margex/oracle.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace margex {

enum class EstimatorId { Omd, IpwPate, PsmPre, PsmPost, Marginality };

const char* estimator_name(EstimatorId id);

// Shared knobs for the estimator battery.
struct EstimatorOptions {
    enum class Propensity { Logistic, Binned, Oracle };
    Propensity propensity = Propensity::Logistic;
    double trim = 0.01;
    std::optional<double> caliper;
    BinningConfig bin;
};

struct StudyConfig {
    std::vector<EstimatorId> estimators;
    EstimatorOptions options;
    int64_t replications = 500;
    int64_t n = 10000; // per cohort
    uint64_t master_seed = 0;

    void validate() const; // replications >= 2, n >= 100
};

struct StudyRow {
    std::string estimator;
    std::string target;       // which oracle estimand this estimator aims at
    double target_value = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double sd = 0.0;   // population-style (divide by successes)
    double rmse = 0.0; // so rmse^2 = bias^2 + sd^2
    int64_t failures = 0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    // estimates[e][r]: estimator e on replicate r, NaN for failures.
    std::vector<std::vector<double>> estimates;
    int64_t replications = 0;
};

// R independent datasets (replicate r simulated with seed
// root(master_seed).split(r).key()), each estimator applied to each.
// Extending R keeps the replicate prefix unchanged. OMD is scored against
// the tau^{Q1} target it is commonly mistaken for; the consistent
// estimators are scored against their own targets.
StudyResult run_study(const DGPSpec& spec, const StudyConfig& cfg,
                      Exec exec = default_exec());

// CSV: estimator,target,target_value,mean,bias,sd,rmse,failures
void write_study_report(const StudyResult& res, const std::string& path);

// CSV: replicate,estimator,estimate (nan marks a failed replicate)
void write_replicate_dump(const StudyResult& res, const std::string& path);

// Shared by cmd_estimate and run_study: applies one estimator to a dataset.
// `spec` may be null unless options request the oracle propensity or the
// plug-in marginality path.
EstimateResult apply_estimator(const Dataset& ds, EstimatorId id,
                               const EstimatorOptions& opt, const DGPSpec* spec);

} // namespace margex
