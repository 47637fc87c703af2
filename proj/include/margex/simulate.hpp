#pragma once

#include "margex/dataset.hpp"
#include "margex/dgp.hpp"
#include "margex/parallel.hpp"

#include <cstdint>

namespace margex {

struct SampleConfig {
    int64_t n_pre = 1;
    int64_t n_post = 1;
    uint64_t seed = 0;
    bool reveal_theta = false;

    void validate() const;
};

// Draws the two independent cross-sections. Deterministic given (spec, cfg):
// cohort s uses stream root.split(s), firm i within it stream cohort.split(i),
// and each firm consumes fixed slots (0: theta uniform, 1: participation
// uniform, 2: covariate noise). Identical output for both execution policies
// and any thread count.
Dataset simulate(const DGPSpec& spec, const SampleConfig& cfg,
                 Exec exec = default_exec());

} // namespace margex
