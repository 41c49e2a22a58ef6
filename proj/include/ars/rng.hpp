#pragma once
#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

namespace ars {

// splitmix64; used only to spread a master seed into substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic seedable stream. Uniform/gaussian draws are hand-rolled so
// results do not depend on the standard library's distribution internals.
class RngStream {
public:
    RngStream() : engine_(0) {}
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        // modulo bias is negligible for n << 2^64; kept simple and portable
        return n ? engine_() % n : 0;
    }

    // Box-Muller; consumes two uniforms per pair, caches the second.
    double gaussian(double mean, double sd) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sd * spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + sd * r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Named substream derivation: each subsystem owns an independent stream so
// toggling one subsystem never perturbs another's draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    std::uint64_t s = master ^ (tag * 0x9e3779b97f4a7c15ull);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

inline std::uint64_t tag_of(std::string_view name) {
    // FNV-1a
    std::uint64_t h = 1469598103934665603ull;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline RngStream substream(std::uint64_t master, std::string_view name) {
    return RngStream(derive_seed(master, tag_of(name)));
}

inline RngStream substream(std::uint64_t master, std::string_view name, std::uint64_t index) {
    return RngStream(derive_seed(derive_seed(master, tag_of(name)), index + 1));
}

} // namespace ars
