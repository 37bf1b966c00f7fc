#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mixseg {

// Named, indexed random substreams derived from one user seed. Each
// (seed, name, index) triple maps to an independent mt19937_64 state, so
// work split across threads stays reproducible regardless of scheduling.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t derive(std::string_view name, std::uint64_t index = 0) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (unsigned char c : name) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return mix(mix(seed_ ^ mix(h)) + mix(index + 0x9e3779b97f4a7c15ULL));
    }

    std::mt19937_64 engine(std::string_view name, std::uint64_t index = 0) const {
        return std::mt19937_64(derive(name, index));
    }

    SeedStream child(std::string_view name, std::uint64_t index = 0) const { return SeedStream(derive(name, index)); }

private:
    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

}  // namespace mixseg
