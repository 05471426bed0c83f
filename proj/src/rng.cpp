#include "combu/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "combu/error.hpp"

namespace combu {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

Rng Rng::child(std::uint64_t index) const {
    return Rng(mix64(seed_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform01(); }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw ParameterError("Rng::below: n must be positive");
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) { return uniform01() < p; }

namespace {
Dist checked(Dist d) {
    d.validate();
    return d;
}
}  // namespace

Dist Dist::normal(double mean, double stddev) { return checked(Dist{dist::Normal{mean, stddev}}); }
Dist Dist::uniform(double lo, double hi) { return checked(Dist{dist::Uniform{lo, hi}}); }
Dist Dist::int_uniform(long long lo, long long hi) { return checked(Dist{dist::IntUniform{lo, hi}}); }
Dist Dist::discrete(std::vector<double> values, std::vector<double> probs) {
    return checked(Dist{dist::Discrete{std::move(values), std::move(probs)}});
}
Dist Dist::exp_scaled(Dist mantissa, Dist exponent) {
    return checked(Dist{dist::ExpScaled{std::make_shared<const Dist>(std::move(mantissa)),
                                        std::make_shared<const Dist>(std::move(exponent))}});
}

namespace {

struct Validator {
    void operator()(const dist::Normal& d) const {
        if (!std::isfinite(d.mean) || !std::isfinite(d.stddev) || d.stddev < 0.0)
            throw ParameterError("Normal: need finite mean and stddev >= 0");
    }
    void operator()(const dist::Uniform& d) const {
        if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.lo > d.hi)
            throw ParameterError("Uniform: need finite a <= b");
    }
    void operator()(const dist::IntUniform& d) const {
        if (d.lo > d.hi) throw ParameterError("IntUniform: need a <= b");
    }
    void operator()(const dist::Discrete& d) const {
        if (d.values.empty() || d.values.size() != d.probs.size())
            throw ParameterError("Discrete: values and probs must be non-empty and equally long");
        double total = 0.0;
        for (double p : d.probs) {
            if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("Discrete: each prob must lie in [0,1]");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw ParameterError("Discrete: probs must sum to 1 (got " + std::to_string(total) + ")");
    }
    void operator()(const dist::ExpScaled& d) const {
        if (!d.mantissa || !d.exponent) throw ParameterError("ExpScaled: missing component");
        d.mantissa->validate();
        d.exponent->validate();
    }
};

struct Sampler {
    Rng& rng;
    double operator()(const dist::Normal& d) const { return d.mean + d.stddev * rng.normal(); }
    double operator()(const dist::Uniform& d) const { return rng.uniform(d.lo, d.hi); }
    double operator()(const dist::IntUniform& d) const {
        const auto span = static_cast<std::uint64_t>(d.hi - d.lo) + 1;
        return static_cast<double>(d.lo + static_cast<long long>(rng.below(span)));
    }
    double operator()(const dist::Discrete& d) const {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i < d.values.size(); ++i) {
            acc += d.probs[i];
            if (u < acc) return d.values[i];
        }
        return d.values.back();
    }
    double operator()(const dist::ExpScaled& d) const {
        const double a = sample(*d.mantissa, rng);
        const double b = sample(*d.exponent, rng);
        return a * std::pow(10.0, b);
    }
};

}  // namespace

void Dist::validate() const { std::visit(Validator{}, v); }

double sample(const Dist& d, Rng& rng) {
    d.validate();
    return std::visit(Sampler{rng}, d.v);
}

}  // namespace combu
