#pragma once

#include "margex/dgp.hpp"
#include "margex/mc.hpp"
#include "margex/simulate.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace margex {

// Sectioned key-value run configuration. Unknown sections or keys are
// rejected by name; numeric values are validated by the owning module's
// constructors.
struct RunConfig {
    std::optional<DGPSpec> dgp;
    std::optional<SampleConfig> sample;

    struct Estimate {
        std::vector<EstimatorId> estimators;
        EstimatorOptions options;
        int bootstrap_b = 200;
        uint64_t bootstrap_seed = 0;
    };
    std::optional<Estimate> estimate;

    struct Study {
        StudyConfig config;
        std::string replicate_dump; // optional path
    };
    std::optional<Study> study;

    std::optional<double> dichotomy_threshold;
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

} // namespace margex
