#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "combu/combu.hpp"
#include "combu/linalg.hpp"
#include "combu/rng.hpp"

namespace combu {

/// One dense layer: pre = W * in + b, followed by a per-dimension activation.
/// The output layer has no activation.
struct DenseLayer {
    Matrix weights;  // out x in
    Vector bias;     // out
    std::optional<ActivationAssignment> activation;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

enum class Head { Identity, Softmax };

/// Dense MLP shared by the trainer and the expression compiler.
struct LayeredNetwork {
    std::size_t input_dim = 0;
    std::vector<DenseLayer> layers;
    Head head = Head::Identity;

    std::size_t output_dim() const { return layers.empty() ? input_dim : layers.back().out_dim(); }
    std::size_t depth() const { return layers.size(); }
    std::size_t parameter_count() const;

    /// Throws ShapeError unless the layer dimensions chain, every internal
    /// layer has an activation of matching width and the last layer has none.
    void validate() const;

    friend bool operator==(const LayeredNetwork&, const LayeredNetwork&) = default;
};

/// Per-layer record of one batched forward pass, kept for backprop.
struct Tape {
    std::vector<Matrix> inputs;          // input to layer l, batch x in_l
    std::vector<Matrix> pre_activation;  // batch x out_l
    std::vector<Matrix> dropout_scale;   // empty when no dropout was applied
    Matrix output;                       // after the head, batch x out
};

struct DropoutConfig {
    double rate = 0.0;
    Rng* rng = nullptr;
};

/// Batched forward pass, one row per sample. With dropout.rate > 0 and a
/// non-null rng, inverted dropout is applied after every internal activation.
Tape forward_batch(const LayeredNetwork& net, const Matrix& inputs, DropoutConfig dropout = {});

/// Single-sample forward pass. train_mode enables dropout at the given rate.
Vector forward(const LayeredNetwork& net, std::span<const double> x, bool train_mode = false,
               double dropout_rate = 0.0, Rng* rng = nullptr);

/// Post-activation values of every internal layer for one sample (after the
/// activation, before dropout), in eval mode. Useful for inspecting gadgets.
std::vector<Vector> hidden_activations(const LayeredNetwork& net, std::span<const double> x);

/// Eval-mode outputs for a batch.
Matrix predict(const LayeredNetwork& net, const Matrix& inputs);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> bias;
};

/// Backprop given dLoss/dLogits (batch x out), i.e. the gradient with respect
/// to the last layer's affine output before the head.
Gradients backward(const LayeredNetwork& net, const Tape& tape, const Matrix& grad_logits);

/// Row-wise softmax, stable under large logits.
Matrix softmax_rows(const Matrix& logits);

enum class ModelSize { Small, Large };

/// Activation scheme of the internal layers: a single activation everywhere or
/// a mixture drawn independently per layer.
struct ActivationScheme {
    std::string name;
    std::variant<Activation, Ratios> kind;

    static ActivationScheme uniform(const Activation& act);
    static ActivationScheme mixture(std::string name, Ratios ratios);
    static ActivationScheme combu() { return mixture("combu", default_ratios()); }

    /// Parses "relu", "elu(0.5)", "combu" or a JSON object
    /// {"name": ..., "ratios": [{"kind": ..., "ratio": ...}, ...]}.
    static ActivationScheme from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// The seven schemes compared in the formula benchmark.
std::vector<ActivationScheme> benchmark_schemes();

/// Small = 3 dense layers with 128 hidden units, Large = 6 with 256. Weights
/// uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases. Each internal layer
/// gets its own assignment drawn from rng.
LayeredNetwork build_benchmark_mlp(std::size_t input_dim, std::size_t output_dim, ModelSize size,
                               const ActivationScheme& scheme, Rng& rng, Head head = Head::Identity);

/// Generic builder over explicit hidden widths.
LayeredNetwork build_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
                         const ActivationScheme& scheme, Rng& rng, Head head = Head::Identity);

std::string to_string(ModelSize size);
ModelSize parse_model_size(const std::string& text);

void to_json(nlohmann::json& j, const LayeredNetwork& net);
void from_json(const nlohmann::json& j, LayeredNetwork& net);

}  // namespace combu
