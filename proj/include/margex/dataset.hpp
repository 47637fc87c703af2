#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace margex {

struct FirmRecord {
    int64_t firm_id = 0;
    int regime = 0; // 0 pre, 1 post
    double x = 0.0;
    int d = 0; // participation indicator
    std::optional<double> outcome; // present iff d == 1
    std::optional<double> theta;   // present only when truth is revealed

    bool operator==(const FirmRecord&) const = default;
};

struct Provenance {
    std::string spec_digest;
    uint64_t seed = 0;
    int64_t n_pre = 0;
    int64_t n_post = 0;
    std::string covariate_mode;

    bool operator==(const Provenance&) const = default;
};

struct Dataset {
    std::vector<FirmRecord> records;
    Provenance provenance;

    bool operator==(const Dataset&) const = default;
};

// CSV with header firm_id,regime,x,d,outcome[,theta]; outcome empty when
// d = 0; floats carry 17 significant digits so the round trip is lossless.
// Provenance rides in a leading '# provenance:' comment line.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

} // namespace margex
