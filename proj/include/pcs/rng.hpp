#ifndef PCS_RNG_HPP
#define PCS_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>

#include "pcs/error.hpp"

namespace pcs {

/// Seeded generator with platform-independent integer and uniform streams.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are implementation-defined, so the
/// conversions to doubles, bounded integers and normals are done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Unbiased rejection sampling.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) fail(ErrorKind::usage, "empty-range", "uniform_index(0)");
        const std::uint64_t bound = n;
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x >= threshold) return static_cast<std::size_t>(x % bound);
        }
    }

    /// Standard normal via Box-Muller (one draw per pair, no cached state).
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Independent stream derived from this generator's seed and a stream id.
    /// Does not depend on (or advance) the current state.
    Rng split(std::uint64_t stream) const {
        return Rng(mix(seed_ ^ mix(stream + 0x9e3779b97f4a7c15ULL)));
    }

    /// Serialized engine state, restorable with `restore`.
    std::string state() const {
        std::ostringstream os;
        os << seed_ << ' ' << engine_;
        return os.str();
    }

    static Rng restore(const std::string& text) {
        std::istringstream is(text);
        Rng rng;
        is >> rng.seed_ >> rng.engine_;
        if (!is) fail(ErrorKind::data, "bad-rng-state", "cannot parse generator state");
        return rng;
    }

    bool operator==(const Rng& other) const { return seed_ == other.seed_ && engine_ == other.engine_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace pcs

#endif
