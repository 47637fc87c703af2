#include "margex/simulate.hpp"

#include "margex/error.hpp"
#include "margex/rng.hpp"

namespace margex {

void SampleConfig::validate() const {
    if (n_pre < 1 || n_post < 1)
        throw Error(ErrorKind::Validation, "cohort sizes must be >= 1");
}

Dataset simulate(const DGPSpec& spec, const SampleConfig& cfg, Exec exec) {
    cfg.validate();

    Dataset ds;
    ds.provenance = Provenance{spec.digest(), cfg.seed, cfg.n_pre, cfg.n_post,
                               spec.covariate.describe()};
    ds.records.resize(static_cast<size_t>(cfg.n_pre + cfg.n_post));

    const RngStream root(cfg.seed);
    const bool noisy = spec.covariate.mode() == CovariateModel::Mode::NoisyProxy;

    for (int regime = 0; regime < 2; ++regime) {
        const RngStream cohort = root.split(static_cast<uint64_t>(regime));
        const int64_t n = regime == 0 ? cfg.n_pre : cfg.n_post;
        const int64_t id_base = regime == 0 ? 0 : cfg.n_pre;
        const HiringFunction& p = spec.p(regime);
        const OutcomeFunction& y = spec.y(regime);

        parallel_for(n, exec, [&](std::ptrdiff_t i) {
            const RngStream firm = cohort.split(static_cast<uint64_t>(i));
            const double theta = spec.distribution.sample(firm.open_double_at(0));
            const int d = firm.double_at(1) < p(theta) ? 1 : 0;
            const double noise = noisy ? normal_quantile(firm.open_double_at(2)) : 0.0;

            FirmRecord& r = ds.records[static_cast<size_t>(id_base + i)];
            r.firm_id = id_base + i;
            r.regime = regime;
            r.x = eval_covariate(spec.covariate, theta, noise);
            r.d = d;
            if (d == 1) r.outcome = y(theta);
            if (cfg.reveal_theta) r.theta = theta;
        });
    }
    return ds;
}

} // namespace margex
