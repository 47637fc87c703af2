#pragma once

#include <cstdint>

namespace margex {

// Counter-based random streams.
//
// Algorithm identity (fixed by contract so datasets reproduce across
// implementations):
//   output(key, i) = splitmix64_mix(key + (i+1) * 0x9E3779B97F4A7C15)
//   child(key, j)  = RngStream(murmur3_mix(key + (j+1) * 0x9E3779B97F4A7C15))
// where splitmix64_mix is the SplitMix64 finalizer and murmur3_mix the
// MurmurHash3 fmix64 finalizer. Using distinct finalizers keeps a stream's
// outputs decoupled from its children's keys. Streams never share sequence
// position: every cohort/firm/replicate gets its own key via split().
//
// Uniform doubles take the top 53 bits: u = (x >> 11) * 2^-53, in [0, 1).
// Normal deviates are produced by inverting the standard normal CDF
// (Wichura's PPND16 rational approximation) on such a uniform.

inline uint64_t splitmix64_mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

inline uint64_t murmur3_mix(uint64_t z) {
    z ^= z >> 33;
    z *= 0xFF51AFD7ED558CCDULL;
    z ^= z >> 33;
    z *= 0xC4CEB9FE1A85EC53ULL;
    z ^= z >> 33;
    return z;
}

class RngStream {
public:
    explicit RngStream(uint64_t key) : key_(key) {}

    uint64_t key() const { return key_; }

    // Random access: i-th output of this stream, independent of cursor state.
    uint64_t at(uint64_t i) const {
        return splitmix64_mix(key_ + (i + 1) * kGamma);
    }

    uint64_t next_u64() { return at(cursor_++); }

    // 53-bit uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double double_at(uint64_t i) const {
        return static_cast<double>(at(i) >> 11) * 0x1.0p-53;
    }

    // Uniform in the open interval (0, 1); safe to feed into inverse CDFs.
    double open_double_at(uint64_t i) const {
        return (static_cast<double>(at(i) >> 11) + 0.5) * 0x1.0p-53;
    }

    RngStream split(uint64_t child) const {
        return RngStream(murmur3_mix(key_ + (child + 1) * kGamma));
    }

private:
    static constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
    uint64_t key_;
    uint64_t cursor_ = 0;
};

// Inverse standard normal CDF, PPND16 (Wichura, AS 241). Absolute error
// below 1e-15 over (0, 1).
double normal_quantile(double p);

// Standard normal CDF via erfc.
double normal_cdf(double x);

} // namespace margex
