#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "combu/activation.hpp"
#include "combu/linalg.hpp"
#include "combu/rng.hpp"

namespace combu {

/// Realized per-dimension activation layout of one layer: a palette of
/// distinct activations and, for every dimension, the palette index it uses.
/// Equivalent to the 0/1 mask matrix with exactly one 1 per column.
struct ActivationAssignment {
    std::vector<Activation> kinds;
    std::vector<std::uint32_t> per_dim;

    static ActivationAssignment uniform(const Activation& act, std::size_t dim);

    std::size_t dim() const { return per_dim.size(); }
    const Activation& at(std::size_t d) const { return kinds[per_dim[d]]; }
    /// Number of dimensions per palette entry.
    std::vector<std::size_t> counts() const;
    /// Mask for palette entry k: 1.0 where the dimension uses it, else 0.0.
    Vector mask(std::size_t k) const;
    /// Throws ShapeError/ParameterError when indices are out of range or a
    /// palette entry is invalid.
    void validate() const;

    /// Equal when every dimension uses the same activation; palette order and
    /// unused palette entries do not matter.
    friend bool operator==(const ActivationAssignment& a, const ActivationAssignment& b);
};

/// One entry of a mixture. Order in a mixture matters: it is the fixed kind
/// order used for rounding correction and dimension draws.
struct RatioEntry {
    Activation kind;
    double ratio = 0.0;

    friend bool operator==(const RatioEntry&, const RatioEntry&) = default;
};

using Ratios = std::vector<RatioEntry>;

/// The default mixture: 0.5 ReLU, 0.25 ELU(1), 0.25 NLReLU(1).
Ratios default_ratios();

/// Throws ParameterError unless ratios are in [0,1], sum to 1 within 1e-9 and
/// name distinct activations.
void validate_ratios(const Ratios& ratios);

/// Per-kind dimension counts: round-half-to-even of ratio * dim, then the
/// signed remainder is absorbed by walking kinds in order (a positive
/// remainder goes entirely to the first kind; a negative one is removed from
/// kinds in order, never going below zero).
std::vector<std::size_t> dim_counts(const Ratios& ratios, std::size_t dim);

/// Counts from dim_counts, then for each kind in order the dimensions are drawn
/// without replacement from the still-unassigned indices.
ActivationAssignment assign_dims(const Ratios& ratios, std::size_t dim, Rng& rng);

/// A mixed activation layer description.
struct CombUSpec {
    Ratios ratios;
    std::uint64_t seed = 0;
    ActivationAssignment assignment;

    std::size_t dim() const { return assignment.dim(); }

    friend bool operator==(const CombUSpec&, const CombUSpec&) = default;
};

/// Builds a spec by drawing the assignment with Rng(seed).
CombUSpec make_combu(const Ratios& ratios, std::size_t dim, std::uint64_t seed);

/// Default mixture of width dim. The assignment is drawn from rng; the stored
/// seed is the seed of the child stream used.
CombUSpec default_combu(std::size_t dim, Rng& rng);

/// out[d] = g_{assignment[d]}(x[d]).
Vector combu_forward(const ActivationAssignment& assignment, std::span<const double> x);
inline Vector combu_forward(const CombUSpec& spec, std::span<const double> x) {
    return combu_forward(spec.assignment, x);
}

void to_json(nlohmann::json& j, const ActivationAssignment& a);
void from_json(const nlohmann::json& j, ActivationAssignment& a);
void to_json(nlohmann::json& j, const CombUSpec& spec);
void from_json(const nlohmann::json& j, CombUSpec& spec);
void to_json(nlohmann::json& j, const RatioEntry& e);
void from_json(const nlohmann::json& j, RatioEntry& e);

}  // namespace combu
