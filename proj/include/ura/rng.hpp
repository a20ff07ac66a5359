#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

namespace ura {

// splitmix64 step; used to turn structured stream labels into well-mixed seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Collapses (master seed, label path) into one 64-bit seed. Distinct paths
// give independent-looking streams, which is how the simulator keeps
// payload/channel/noise/shuffle draws decoupled per trial and slot.
inline std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    for (std::uint64_t part : path) {
        s = h ^ (part + 0x9e3779b97f4a7c15ull);
        h = splitmix64(s);
    }
    return h;
}

// Deterministic random stream. Wraps std::mt19937_64 but performs all
// distribution shaping itself so draws do not depend on library internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    Rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) : gen_(mix_seed(master, path)) {}

    std::uint64_t next_u64() { return gen_(); }

    std::uint32_t next_bit() { return static_cast<std::uint32_t>(gen_() >> 63); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) via multiply-high; deterministic across platforms.
    std::uint64_t bounded(std::uint64_t n) {
        __extension__ using u128 = unsigned __int128;
        return static_cast<std::uint64_t>((static_cast<u128>(gen_()) * n) >> 64);
    }

    // Circularly-symmetric complex Gaussian with E|z|^2 = 1
    // (each real dimension has variance 1/2).
    std::complex<double> complex_normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-std::log1p(-u1));  // Rayleigh, E[r^2] = 1
        double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace ura
