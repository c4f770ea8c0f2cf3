#include "rvf/prng.hpp"

#include <cmath>

namespace rvf {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kNormalLane = 0xA3C59AC2F0D9BE6BULL;

std::uint64_t splitmix64(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t prng_u64(std::uint64_t seed, std::uint64_t counter) {
    return splitmix64(seed ^ splitmix64(counter));
}

double prng_uniform(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t u = prng_u64(seed, counter);
    return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

double prng_normal(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t lane = seed ^ kNormalLane;
    const double u1 = prng_uniform(lane, 2 * counter);
    const double u2 = prng_uniform(lane, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) {
    return splitmix64(seed ^ fnv1a64(tag));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index ^ 0x5851F42D4C957F2DULL));
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t basis) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = basis;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string digest_hex(std::uint64_t d) {
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[d & 0xF];
        d >>= 4;
    }
    return out;
}

}  // namespace rvf
