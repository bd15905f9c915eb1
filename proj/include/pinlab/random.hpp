#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace pinlab {

/// SplitMix64 (Steele, Lea, Flood). Used for seeding and for deriving
/// independent stream seeds from a master seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Seed of stream `index` derived from `master`. Streams for different
/// indices are decorrelated by two SplitMix64 rounds, so replica r always
/// sees the same numbers regardless of how replicas are scheduled.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index)
{
    SplitMix64 a(master);
    SplitMix64 b(a.next() ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    b.next();
    return b.next();
}

/// xoshiro256++ 1.0 (Blackman, Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed)
    {
        SplitMix64 sm(seed);
        for (auto& w : s_)
            w = sm.next();
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

/// Uniform double in [0,1) built from the top 53 bits.
template <class Gen>
double uniform01(Gen& g)
{
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Standard Gaussian stream: xoshiro256++ uniforms fed to the Marsaglia polar
/// method. The method and the generator are fixed so that a seed reproduces
/// the same charges on every platform with an IEEE libm.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

    double operator()()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01(gen_) - 1.0;
            v = 2.0 * uniform01(gen_) - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    Xoshiro256pp& engine() { return gen_; }

private:
    Xoshiro256pp gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace pinlab
