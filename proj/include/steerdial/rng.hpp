#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace steerdial {

// Deterministic RNG used everywhere randomness is needed. The engine output is
// pinned by the standard; all real-valued and bounded-integer draws are mapped
// here rather than through std distributions, whose algorithms are not pinned.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n), rejection-sampled so the map is exact.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Per-turn seed fan-out: independent of generation order, so serial and
// parallel batch runs agree.
inline std::uint64_t turn_seed(std::uint64_t run_seed, const std::string& dialogue_id, std::size_t turn_index) {
    return splitmix64(run_seed ^ fnv1a64(dialogue_id) ^ (0x9E3779B97F4A7C15ull * (turn_index + 1)));
}

}  // namespace steerdial
