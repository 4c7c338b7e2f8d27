#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace kooptx {

// splitmix64 step; also used as a stateless hash for counter-based dropout.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic PRNG used everywhere randomness is needed. The standard
// library's distributions (and std::shuffle) are not bit-portable across
// implementations, so uniform/normal/shuffle are implemented here and the
// outputs are part of the reproducibility contract.
class Rng {
public:
    explicit Rng(uint64_t seed) { reseed(seed); }

    void reseed(uint64_t seed) {
        // xoshiro256** state expanded from the seed via splitmix64.
        uint64_t x = seed;
        for (auto& word : s_) {
            x = splitmix64(x);
            word = x == 0 ? 0x2545f4914f6cdd1dULL : x;
        }
        has_spare_ = false;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n) by rejection-free scaling (n is tiny everywhere this
    // is used; modulo bias at 64 bits is negligible but avoided anyway).
    uint64_t below(uint64_t n) {
        // Lemire's multiply-shift reduction.
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<uint64_t>(m >> 64);
    }

    // Standard normal via Box–Muller (polar form avoided to keep the
    // consumption of uniforms fixed per call pair).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Fisher–Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stateless hash → [0,1), for counter-based dropout masks: the same
// (seed, step, tag, index) always yields the same value, in forward and
// backward passes alike, with no mask storage.
inline double hash_uniform(uint64_t seed, uint64_t step, uint64_t tag, uint64_t index) {
    uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
    h = splitmix64(h ^ step);
    h = splitmix64(h ^ (tag * 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ index);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace kooptx
