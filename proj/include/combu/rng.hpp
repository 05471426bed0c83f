#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <variant>
#include <vector>

namespace combu {

/// Seeded random stream. Built on std::mt19937_64, whose output sequence is
/// fixed by the standard; all conversions to floating point and integers are
/// done here rather than through <random> distributions, which are
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const { return seed_; }

    /// Independent deterministic sub-stream. child(i) != child(j) for i != j.
    Rng child(std::uint64_t index) const;

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();
    /// Uniform in [a, b).
    double uniform(double a, double b);
    /// Uniform integer in [0, n). Unbiased (rejection sampling). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (cosine branch only; no cached pair).
    double normal();
    bool bernoulli(double p);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

struct Dist;

namespace dist {

struct Normal {
    double mean = 0.0;
    double stddev = 1.0;
};

struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
};

/// Integers in [lo, hi], both ends inclusive.
struct IntUniform {
    long long lo = 0;
    long long hi = 0;
};

struct Discrete {
    std::vector<double> values;
    std::vector<double> probs;
};

/// v = a * 10^b with a ~ mantissa, b ~ exponent.
struct ExpScaled {
    std::shared_ptr<const Dist> mantissa;
    std::shared_ptr<const Dist> exponent;
};

}  // namespace dist

struct Dist {
    std::variant<dist::Normal, dist::Uniform, dist::IntUniform, dist::Discrete, dist::ExpScaled> v;

    static Dist normal(double mean, double stddev);
    static Dist uniform(double lo, double hi);
    static Dist int_uniform(long long lo, long long hi);
    static Dist discrete(std::vector<double> values, std::vector<double> probs);
    static Dist exp_scaled(Dist mantissa, Dist exponent);

    /// Throws ParameterError when the parameters are invalid.
    void validate() const;
};

double sample(const Dist& d, Rng& rng);

}  // namespace combu
