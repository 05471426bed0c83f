#pragma once

#include <array>
#include <string>
#include <string_view>

namespace combu {

enum class ActivationType {
    Sigmoid,
    ReLU,
    SoftPlus,
    Tanh,
    LReLU,
    ELU,
    SELU,
    Swish,
    NLReLU,
    GELU,
};

inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

/// A scalar activation function and its hyperparameters.
///
/// Parameter slots by type:
///   LReLU   p0 = negative slope a in [0, 1]
///   ELU     p0 = alpha in [0, 1]
///   SELU    p0 = lambda > 1, p1 = alpha
///   Swish   p0 = beta >= 0
///   NLReLU  p0 = beta > 0
/// Other types take no parameters and keep both slots at zero.
struct Activation {
    ActivationType type = ActivationType::ReLU;
    double p0 = 0.0;
    double p1 = 0.0;

    static Activation sigmoid() { return {ActivationType::Sigmoid}; }
    static Activation relu() { return {ActivationType::ReLU}; }
    static Activation softplus() { return {ActivationType::SoftPlus}; }
    static Activation tanh() { return {ActivationType::Tanh}; }
    static Activation lrelu(double a = 0.01) { return {ActivationType::LReLU, a}; }
    static Activation elu(double alpha = 1.0) { return {ActivationType::ELU, alpha}; }
    static Activation selu(double lambda = kSeluLambda, double alpha = kSeluAlpha) {
        return {ActivationType::SELU, lambda, alpha};
    }
    static Activation swish(double beta = 1.0) { return {ActivationType::Swish, beta}; }
    static Activation nlrelu(double beta = 1.0) { return {ActivationType::NLReLU, beta}; }
    static Activation gelu() { return {ActivationType::GELU}; }

    /// Throws ParameterError when a hyperparameter is outside its range.
    void validate() const;

    friend bool operator==(const Activation&, const Activation&) = default;
};

/// All ten types in declaration order.
inline constexpr std::array<ActivationType, 10> kAllActivationTypes = {
    ActivationType::Sigmoid, ActivationType::ReLU,  ActivationType::SoftPlus, ActivationType::Tanh,
    ActivationType::LReLU,   ActivationType::ELU,   ActivationType::SELU,     ActivationType::Swish,
    ActivationType::NLReLU,  ActivationType::GELU,
};

/// Activation with default hyperparameters for a type.
Activation default_activation(ActivationType type);

double act_eval(const Activation& act, double x);

/// Analytic derivative. At kinks (x = 0 for ReLU, LReLU, ELU, NLReLU) this is
/// the right-hand derivative.
double act_grad(const Activation& act, double x);

/// Canonical text form: the lower-case name when all hyperparameters are the
/// defaults ("relu", "elu"), otherwise name(p0[,p1]) with round-trip precision.
std::string to_string(const Activation& act);

/// Inverse of to_string. Throws ParseError on unknown names.
Activation parse_activation(std::string_view text);

std::string_view type_name(ActivationType type);

}  // namespace combu
