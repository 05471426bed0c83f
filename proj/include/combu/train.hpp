#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "combu/linalg.hpp"
#include "combu/network.hpp"

namespace combu {

enum class TaskKind { Regression, Classification };

/// Training-ready numeric data. Regression uses `targets` (n x outputs);
/// classification uses `labels` with values in [0, n_classes).
struct Samples {
    TaskKind task = TaskKind::Regression;
    Matrix inputs;
    Matrix targets;
    std::vector<std::size_t> labels;
    std::size_t n_classes = 0;

    std::size_t size() const { return inputs.rows(); }
    std::size_t output_dim() const { return task == TaskKind::Regression ? targets.cols() : n_classes; }
    Samples subset(std::span<const std::size_t> rows) const;
};

/// Mean squared error over all entries.
double mse_loss(std::span<const double> output, std::span<const double> target);
Vector mse_loss_grad(std::span<const double> output, std::span<const double> target);

/// -ln(probs[target]). Throws ParameterError when target is out of range.
double cross_entropy_loss(std::span<const double> probs, std::size_t target);
/// Gradient with respect to the logits feeding the softmax: probs - onehot.
Vector cross_entropy_logit_grad(std::span<const double> probs, std::size_t target);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First and second moments for a flat parameter block.
struct AdamMoments {
    Vector m;
    Vector v;
};

/// One bias-corrected Adam update of `params` in place. `step` is the 1-based
/// timestep.
void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments, long step,
               const AdamConfig& config);

/// Adam state for every tensor of a network.
class AdamOptimizer {
public:
    AdamOptimizer(const LayeredNetwork& net, AdamConfig config);
    void step(LayeredNetwork& net, const Gradients& grads);
    long timestep() const { return t_; }

private:
    AdamConfig config_;
    std::vector<AdamMoments> weights_;
    std::vector<AdamMoments> bias_;
    long t_ = 0;
};

struct TrainConfig {
    std::size_t batch_size = 500;
    std::size_t epochs = 200;
    double dropout_rate = 0.1;
    AdamConfig adam{5e-4};
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    LayeredNetwork net;
    std::vector<double> loss_curve;  // mean training loss per epoch
    bool diverged = false;
};

/// Loss and dLoss/dLogits for a batch, averaged over samples.
double batch_loss(const Samples& data, std::span<const std::size_t> rows, const Matrix& output, Matrix* grad_logits);

/// Mini-batch Adam over shuffled data; the shuffle order and dropout masks
/// come from sub-streams of Rng(config.seed). A non-finite epoch loss stops
/// training and sets diverged.
TrainResult train(LayeredNetwork net, const Samples& data, const TrainConfig& config);

/// Mean loss over the whole set in eval mode.
double evaluate_loss(const LayeredNetwork& net, const Samples& data);

}  // namespace combu
