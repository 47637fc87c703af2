#include "margex/estimators.hpp"

#include "margex/error.hpp"
#include "margex/rng.hpp"

#include <cmath>

namespace margex {

BootstrapSE bootstrap_se(const Dataset& ds,
                         const std::function<double(const Dataset&)>& estimator,
                         int replicates, uint64_t seed, Exec exec) {
    if (replicates < 1)
        throw Error(ErrorKind::Validation, "bootstrap needs at least 1 replicate");

    std::vector<size_t> stratum[2];
    for (size_t i = 0; i < ds.records.size(); ++i)
        stratum[ds.records[i].regime].push_back(i);

    const RngStream root(seed);
    std::vector<double> estimates(static_cast<size_t>(replicates),
                                  std::numeric_limits<double>::quiet_NaN());

    parallel_for(replicates, exec, [&](std::ptrdiff_t b) {
        const RngStream rep = root.split(static_cast<uint64_t>(b));
        Dataset resampled;
        resampled.provenance = ds.provenance;
        resampled.records.reserve(ds.records.size());
        for (int s = 0; s < 2; ++s) {
            const RngStream draws = rep.split(static_cast<uint64_t>(s));
            const size_t n = stratum[s].size();
            for (size_t j = 0; j < n; ++j) {
                const size_t pick =
                    static_cast<size_t>(draws.double_at(j) * static_cast<double>(n));
                resampled.records.push_back(ds.records[stratum[s][pick]]);
            }
        }
        try {
            estimates[static_cast<size_t>(b)] = estimator(resampled);
        } catch (const Error&) {
            // failed replicate; stays NaN and is counted below
        }
    });

    BootstrapSE out;
    out.replicates = replicates;
    std::vector<double> ok;
    ok.reserve(estimates.size());
    for (double e : estimates)
        if (!std::isnan(e)) ok.push_back(e);
    out.failures = replicates - static_cast<int64_t>(ok.size());

    if (out.failures * 5 > out.replicates)
        throw Error(ErrorKind::UnstableEstimator,
                    std::to_string(out.failures) + " of " + std::to_string(replicates) +
                        " bootstrap replicates failed");

    if (ok.size() <= 1) {
        out.se = 0.0;
        out.single_replicate = true;
        return out;
    }
    double mean = 0.0;
    for (double e : ok) mean += e;
    mean /= static_cast<double>(ok.size());
    double ss = 0.0;
    for (double e : ok) ss += (e - mean) * (e - mean);
    out.se = std::sqrt(ss / static_cast<double>(ok.size() - 1));
    return out;
}

} // namespace margex
