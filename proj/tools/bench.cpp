// Times the serial reference implementation of each data-parallel kernel
// against the OpenMP path and checks that both produce identical results.
//
//   margex_bench [n_firms] [bootstrap_B] [study_R]

#include "margex/estimators.hpp"
#include "margex/mc.hpp"
#include "margex/simulate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

using namespace margex;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

DGPSpec bench_spec() {
    return DGPSpec(ProductivityDistribution::log_normal(0.0, 0.75),
                   HiringFunction::logistic(-1.5, 0.8),
                   HiringFunction::logistic(-0.5, 0.8),
                   OutcomeFunction(10.0, 2.0, 0.0), OutcomeFunction(11.0, 2.2, 0.05),
                   CovariateModel::identity());
}

void report(const char* kernel, double serial_s, double parallel_s, bool equal) {
    std::printf("%-12s serial %8.3fs   openmp %8.3fs   speedup %5.2fx   %s\n", kernel,
                serial_s, parallel_s, serial_s / parallel_s,
                equal ? "identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    const int64_t n = argc > 1 ? std::atoll(argv[1]) : 400000;
    const int boot_b = argc > 2 ? std::atoi(argv[2]) : 100;
    const int64_t study_r = argc > 3 ? std::atoll(argv[3]) : 50;

    const DGPSpec spec = bench_spec();
    SampleConfig scfg;
    scfg.n_pre = n;
    scfg.n_post = n;
    scfg.seed = 2024;

    std::printf("firms per cohort: %lld, bootstrap replicates: %d, study replicates: %lld\n",
                static_cast<long long>(n), boot_b, static_cast<long long>(study_r));

    auto t0 = clock_type::now();
    const Dataset ds_serial = simulate(spec, scfg, Exec::Serial);
    const double sim_serial = seconds_since(t0);
    t0 = clock_type::now();
    const Dataset ds_parallel = simulate(spec, scfg, Exec::Parallel);
    const double sim_parallel = seconds_since(t0);
    report("simulate", sim_serial, sim_parallel, ds_serial == ds_parallel);

    const PropensityModel pm1 = PropensityModel::oracle(spec, 1);
    t0 = clock_type::now();
    const EstimateResult psm_serial =
        estimate_psm(ds_serial, MatchOn::Post, pm1, std::nullopt, Exec::Serial);
    const double match_serial = seconds_since(t0);
    t0 = clock_type::now();
    const EstimateResult psm_parallel =
        estimate_psm(ds_serial, MatchOn::Post, pm1, std::nullopt, Exec::Parallel);
    const double match_parallel = seconds_since(t0);
    report("psm", match_serial, match_parallel, psm_serial.point == psm_parallel.point);

    auto omd_fn = [](const Dataset& d) { return estimate_omd(d).point; };
    t0 = clock_type::now();
    const BootstrapSE bs_serial = bootstrap_se(ds_serial, omd_fn, boot_b, 7, Exec::Serial);
    const double boot_serial = seconds_since(t0);
    t0 = clock_type::now();
    const BootstrapSE bs_parallel =
        bootstrap_se(ds_serial, omd_fn, boot_b, 7, Exec::Parallel);
    const double boot_parallel = seconds_since(t0);
    report("bootstrap", boot_serial, boot_parallel, bs_serial.se == bs_parallel.se);

    StudyConfig study;
    study.estimators = {EstimatorId::Omd, EstimatorId::IpwPate};
    study.options.propensity = EstimatorOptions::Propensity::Oracle;
    study.replications = study_r;
    study.n = std::max<int64_t>(n / 20, 100);
    study.master_seed = 99;
    t0 = clock_type::now();
    const StudyResult st_serial = run_study(spec, study, Exec::Serial);
    const double study_serial = seconds_since(t0);
    t0 = clock_type::now();
    const StudyResult st_parallel = run_study(spec, study, Exec::Parallel);
    const double study_parallel = seconds_since(t0);
    bool equal = st_serial.estimates == st_parallel.estimates;
    report("study", study_serial, study_parallel, equal);

    return 0;
}
