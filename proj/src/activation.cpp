#include "combu/activation.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "combu/error.hpp"

namespace combu {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double elu(double alpha, double x) { return x > 0.0 ? x : alpha * std::expm1(x); }

std::string format_number(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace

void Activation::validate() const {
    switch (type) {
        case ActivationType::LReLU:
            if (!(p0 >= 0.0 && p0 <= 1.0)) throw ParameterError("LReLU slope must lie in [0,1]");
            break;
        case ActivationType::ELU:
            if (!(p0 >= 0.0 && p0 <= 1.0)) throw ParameterError("ELU alpha must lie in [0,1]");
            break;
        case ActivationType::SELU:
            if (!(p0 > 1.0)) throw ParameterError("SELU lambda must exceed 1");
            if (!(p1 >= 0.0) || !std::isfinite(p1)) throw ParameterError("SELU alpha must be finite and >= 0");
            break;
        case ActivationType::Swish:
            if (!(p0 >= 0.0) || !std::isfinite(p0)) throw ParameterError("Swish beta must be finite and >= 0");
            break;
        case ActivationType::NLReLU:
            if (!(p0 > 0.0) || !std::isfinite(p0)) throw ParameterError("NLReLU beta must be finite and > 0");
            break;
        default:
            break;
    }
}

Activation default_activation(ActivationType type) {
    switch (type) {
        case ActivationType::Sigmoid: return Activation::sigmoid();
        case ActivationType::ReLU: return Activation::relu();
        case ActivationType::SoftPlus: return Activation::softplus();
        case ActivationType::Tanh: return Activation::tanh();
        case ActivationType::LReLU: return Activation::lrelu();
        case ActivationType::ELU: return Activation::elu();
        case ActivationType::SELU: return Activation::selu();
        case ActivationType::Swish: return Activation::swish();
        case ActivationType::NLReLU: return Activation::nlrelu();
        case ActivationType::GELU: return Activation::gelu();
    }
    throw InternalError("default_activation: unknown type");
}

double act_eval(const Activation& act, double x) {
    switch (act.type) {
        case ActivationType::Sigmoid: return sigmoid(x);
        case ActivationType::ReLU: return x > 0.0 ? x : 0.0;
        // ln(1 + e^x) rewritten to avoid overflow for large x.
        case ActivationType::SoftPlus: return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
        case ActivationType::Tanh: return std::tanh(x);
        case ActivationType::LReLU: return x >= 0.0 ? x : act.p0 * x;
        case ActivationType::ELU: return elu(act.p0, x);
        case ActivationType::SELU: return act.p0 * elu(act.p1, x);
        case ActivationType::Swish: return x * sigmoid(act.p0 * x);
        case ActivationType::NLReLU: return x > 0.0 ? std::log1p(act.p0 * x) : 0.0;
        case ActivationType::GELU: return x * std_normal_cdf(x);
    }
    throw InternalError("act_eval: unknown type");
}

double act_grad(const Activation& act, double x) {
    switch (act.type) {
        case ActivationType::Sigmoid: {
            const double f = sigmoid(x);
            return f * (1.0 - f);
        }
        case ActivationType::ReLU: return x >= 0.0 ? 1.0 : 0.0;
        case ActivationType::SoftPlus: return sigmoid(x);
        case ActivationType::Tanh: {
            const double f = std::tanh(x);
            return 1.0 - f * f;
        }
        case ActivationType::LReLU: return x >= 0.0 ? 1.0 : act.p0;
        // f(x) + alpha on the negative branch is alpha * e^x.
        case ActivationType::ELU: return x >= 0.0 ? 1.0 : act.p0 * std::exp(x);
        case ActivationType::SELU: return act.p0 * (x >= 0.0 ? 1.0 : act.p1 * std::exp(x));
        case ActivationType::Swish: {
            const double s = sigmoid(act.p0 * x);
            // (1 + e^{-bx} + b x e^{-bx}) / (1 + e^{-bx})^2 in overflow-safe form.
            return s + act.p0 * x * s * (1.0 - s);
        }
        case ActivationType::NLReLU: return x >= 0.0 ? act.p0 / (act.p0 * x + 1.0) : 0.0;
        case ActivationType::GELU: return std_normal_cdf(x) + x * std_normal_pdf(x);
    }
    throw InternalError("act_grad: unknown type");
}

std::string_view type_name(ActivationType type) {
    switch (type) {
        case ActivationType::Sigmoid: return "sigmoid";
        case ActivationType::ReLU: return "relu";
        case ActivationType::SoftPlus: return "softplus";
        case ActivationType::Tanh: return "tanh";
        case ActivationType::LReLU: return "lrelu";
        case ActivationType::ELU: return "elu";
        case ActivationType::SELU: return "selu";
        case ActivationType::Swish: return "swish";
        case ActivationType::NLReLU: return "nlrelu";
        case ActivationType::GELU: return "gelu";
    }
    throw InternalError("type_name: unknown type");
}

std::string to_string(const Activation& act) {
    std::string name(type_name(act.type));
    const Activation def = default_activation(act.type);
    if (act == def) return name;
    switch (act.type) {
        case ActivationType::LReLU:
        case ActivationType::ELU:
        case ActivationType::Swish:
        case ActivationType::NLReLU:
            return name + "(" + format_number(act.p0) + ")";
        case ActivationType::SELU:
            return name + "(" + format_number(act.p0) + "," + format_number(act.p1) + ")";
        default:
            return name;
    }
}

Activation parse_activation(std::string_view text) {
    const auto open = text.find('(');
    const std::string_view name = text.substr(0, open);
    Activation act;
    bool found = false;
    for (ActivationType t : kAllActivationTypes) {
        if (type_name(t) == name) {
            act = default_activation(t);
            found = true;
            break;
        }
    }
    if (!found) throw ParseError("unknown activation '" + std::string(text) + "'");
    if (open == std::string_view::npos) return act;

    if (text.back() != ')') throw ParseError("activation '" + std::string(text) + "': missing ')'");
    std::string_view args = text.substr(open + 1, text.size() - open - 2);
    std::vector<double> params;
    while (!args.empty()) {
        const auto comma = args.find(',');
        const std::string_view tok = args.substr(0, comma);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size())
            throw ParseError("activation '" + std::string(text) + "': bad parameter '" + std::string(tok) + "'");
        params.push_back(v);
        if (comma == std::string_view::npos) break;
        args.remove_prefix(comma + 1);
    }
    const std::size_t expected = act.type == ActivationType::SELU ? 2
                                 : (act.type == ActivationType::LReLU || act.type == ActivationType::ELU ||
                                    act.type == ActivationType::Swish || act.type == ActivationType::NLReLU)
                                     ? 1
                                     : 0;
    if (params.size() != expected)
        throw ParseError("activation '" + std::string(text) + "': expected " + std::to_string(expected) +
                         " parameter(s)");
    if (expected >= 1) act.p0 = params[0];
    if (expected >= 2) act.p1 = params[1];
    act.validate();
    return act;
}

}  // namespace combu
