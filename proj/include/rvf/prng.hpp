#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rvf {

// Counter-based deterministic random numbers. No hidden state: a (seed, counter)
// pair fully determines every draw, so any language can reproduce the streams.
// The algorithm and frozen test vectors are documented in docs/prng.md.

// SplitMix64 finalizer over seed + counter * golden-gamma.
std::uint64_t prng_u64(std::uint64_t seed, std::uint64_t counter);

// Uniform in [2^-54, 1): ((u >> 11) + 0.5) * 2^-53. Never returns 0.
double prng_uniform(std::uint64_t seed, std::uint64_t counter);

// Standard normal for index k via Box-Muller on uniforms (2k, 2k+1) drawn in a
// dedicated lane (seed xored with a lane constant), so normal and uniform
// streams from the same seed never overlap.
double prng_normal(std::uint64_t seed, std::uint64_t counter);

// Child-seed derivation: splitmix(seed ^ fnv1a64(tag)). Stages re-run in
// isolation reproduce their stream from (top seed, stage tag) alone.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// FNV-1a, also used for content digests of reports and frames.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& s);
std::string digest_hex(std::uint64_t d);

// Convenience sequential sampler on top of the counter PRNG.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t seed) : seed_(seed) {}
    double uniform() { return prng_uniform(seed_, next_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return prng_normal(seed_, gauss_ctr_++); }
    std::uint64_t raw() { return prng_u64(seed_, next_++); }

private:
    std::uint64_t seed_;
    std::uint64_t next_ = 0;
    std::uint64_t gauss_ctr_ = 0;
};

}  // namespace rvf
