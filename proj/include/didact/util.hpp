#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace didact {

// Stable 64-bit seed derivation (FNV-1a over the seed bytes and tag,
// splitmix64 finalizer). Used to give every episode its own stream so
// results do not depend on worker count or scheduling order.
uint64_t derive_seed(uint64_t seed, std::string_view tag);

// mt19937_64 with an explicit uniform mapping so draws are identical
// across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    // [0, 1)
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // [0, n); n > 0
    uint64_t below(uint64_t n) { return engine_() % n; }

    bool chance(double p) { return uniform01() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// Canonical answer normalization: every whitespace character stripped,
// ASCII lowercased, '$' removed.
std::string normalize_answer(std::string_view text);

void log_warn(const std::string& message);

} // namespace didact
