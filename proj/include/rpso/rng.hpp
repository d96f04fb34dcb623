#ifndef RPSO_RNG_HPP
#define RPSO_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace rpso {

/// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based seed split: the result depends only on the master seed and
/// the ordered list of counters, so substreams are stable across machines.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t s = mix64(master);
    for (auto c : path) {
        s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
    }
    return s;
}

/// Random stream with platform-independent distributions.
///
/// std::uniform_real_distribution and std::normal_distribution are
/// implementation-defined, so the conversions from engine bits are done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// U[0,1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n)
    {
        if (n <= 1) {
            return 0;
        }
        const std::uint64_t bound = n;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r = engine_();
        while (r >= limit) {
            r = engine_();
        }
        return static_cast<std::size_t>(r % bound);
    }

    /// Uniform integer in [lo, hi].
    long integer(long lo, long hi) { return lo + static_cast<long>(index(static_cast<std::size_t>(hi - lo + 1))); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal (Marsaglia polar method).
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    template <typename It>
    void shuffle(It first, It last)
    {
        const auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            std::swap(first[i - 1], first[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace rpso

#endif
