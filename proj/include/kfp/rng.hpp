#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace kfp {

// splitmix64 step; used only to mix seeds, never to generate sample streams.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Collapse (master seed, stream index) into a single well-mixed 64-bit seed so
// that nearby stream indices give unrelated generator states.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64_next(s);
    s ^= stream * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64_next(s);
    return a ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2));
}

// Derive a named sub-seed (used to give independent streams to the separate
// Monte Carlo runs inside one bound report). FNV-1a over the name, then mixed.
inline std::uint64_t seed_from_name(std::uint64_t master, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix_seed(master, h);
}

// Per-path random stream. std::mt19937_64 is bit-specified by the standard,
// and the Gaussian transform is done by hand (Box-Muller) because
// std::normal_distribution is implementation-defined; together this makes
// every sampled path reproducible across platforms from (master_seed, index).
class PathRng {
  public:
    PathRng(std::uint64_t master_seed, std::uint64_t stream_index)
        : gen_(mix_seed(master_seed, stream_index)) {}

    // Uniform on (0,1), 53 random bits, never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace kfp
