#ifndef HSIKME_RANDOM_HPP
#define HSIKME_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <iterator>
#include <numbers>
#include <random>
#include <utility>

namespace hsikme {

/*
 * Reproducible random source.
 *
 * Every random quantity in the library is drawn from this class so that a
 * (seed, call sequence) pair fully determines the output on any platform.
 * The standard distributions (std::normal_distribution, std::shuffle, ...)
 * are implementation-defined and are deliberately not used.
 *
 *   engine   std::mt19937_64 seeded with the 64-bit seed (output fixed by ISO C++)
 *   uniform  (u >> 11) * 2^-53, a double in [0, 1)
 *   normal   Box-Muller on (1 - uniform, uniform); the cosine branch is returned
 *            first and the sine branch is cached for the next call
 *   below(n) rejection sampling on the raw 64-bit output, no modulo bias
 *   shuffle  Fisher-Yates from the back, j = below(i + 1)
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(theta);
        has_spare_ = true;
        return radius * std::cos(theta);
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x >= threshold)
                return x % n;
        }
    }

    /// Uniform sign in {-1, +1}.
    double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

    template <std::random_access_iterator It>
    void shuffle(It first, It last)
    {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const std::uint64_t j = below(i);
            using std::swap;
            swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream seed for sub-task `stream` of a run seeded by `master`.
/// Used for Monte-Carlo runs, pairwise separators and CV folds so that serial
/// and parallel schedules produce identical results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
    return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

} // namespace hsikme

#endif // HSIKME_RANDOM_HPP
