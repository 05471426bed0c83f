#include "combu/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "combu/error.hpp"

namespace combu {

Samples Samples::subset(std::span<const std::size_t> rows) const {
    Samples out;
    out.task = task;
    out.n_classes = n_classes;
    out.inputs = Matrix(rows.size(), inputs.cols());
    if (task == TaskKind::Regression) out.targets = Matrix(rows.size(), targets.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = inputs.row(rows[i]);
        std::copy(src.begin(), src.end(), out.inputs.row(i).begin());
        if (task == TaskKind::Regression) {
            const auto t = targets.row(rows[i]);
            std::copy(t.begin(), t.end(), out.targets.row(i).begin());
        } else {
            out.labels.push_back(labels[rows[i]]);
        }
    }
    return out;
}

double mse_loss(std::span<const double> output, std::span<const double> target) {
    if (output.size() != target.size() || output.empty()) throw ShapeError("mse: lengths differ or are zero");
    double acc = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double e = output[i] - target[i];
        acc += e * e;
    }
    return acc / static_cast<double>(output.size());
}

Vector mse_loss_grad(std::span<const double> output, std::span<const double> target) {
    if (output.size() != target.size() || output.empty()) throw ShapeError("mse: lengths differ or are zero");
    Vector g(output.size());
    const double scale = 2.0 / static_cast<double>(output.size());
    for (std::size_t i = 0; i < output.size(); ++i) g[i] = scale * (output[i] - target[i]);
    return g;
}

double cross_entropy_loss(std::span<const double> probs, std::size_t target) {
    if (target >= probs.size())
        throw ParameterError("class index " + std::to_string(target) + " out of range for " +
                             std::to_string(probs.size()) + " classes");
    return -std::log(probs[target]);
}

Vector cross_entropy_logit_grad(std::span<const double> probs, std::size_t target) {
    if (target >= probs.size()) throw ParameterError("class index out of range");
    Vector g(probs.begin(), probs.end());
    g[target] -= 1.0;
    return g;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments, long step,
               const AdamConfig& config) {
    if (params.size() != grads.size()) throw ShapeError("adam_step: params and grads differ in length");
    if (step < 1) throw ParameterError("adam_step: timestep must be >= 1");
    if (moments.m.size() != params.size()) {
        moments.m.assign(params.size(), 0.0);
        moments.v.assign(params.size(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        moments.m[i] = config.beta1 * moments.m[i] + (1.0 - config.beta1) * g;
        moments.v[i] = config.beta2 * moments.v[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = moments.m[i] / bc1;
        const double v_hat = moments.v[i] / bc2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

AdamOptimizer::AdamOptimizer(const LayeredNetwork& net, AdamConfig config) : config_(config) {
    for (const auto& layer : net.layers) {
        weights_.push_back({Vector(layer.weights.size(), 0.0), Vector(layer.weights.size(), 0.0)});
        bias_.push_back({Vector(layer.bias.size(), 0.0), Vector(layer.bias.size(), 0.0)});
    }
}

void AdamOptimizer::step(LayeredNetwork& net, const Gradients& grads) {
    ++t_;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        adam_step(net.layers[l].weights.data(), grads.weights[l].data(), weights_[l], t_, config_);
        adam_step(net.layers[l].bias, grads.bias[l], bias_[l], t_, config_);
    }
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ParameterError("dropout rate must lie in [0,1)");
    if (!(adam.learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
        throw ParameterError("Adam betas must lie in [0,1)");
    if (!(adam.epsilon > 0.0)) throw ParameterError("Adam epsilon must be positive");
}

double batch_loss(const Samples& data, std::span<const std::size_t> rows, const Matrix& output, Matrix* grad_logits) {
    const std::size_t n = rows.size();
    if (output.rows() != n) throw ShapeError("batch_loss: output rows differ from batch size");
    if (grad_logits) *grad_logits = Matrix(n, output.cols());
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto out = output.row(i);
        if (data.task == TaskKind::Regression) {
            const auto target = data.targets.row(rows[i]);
            total += mse_loss(out, target);
            if (grad_logits) {
                const auto g = mse_loss_grad(out, target);
                auto dst = grad_logits->row(i);
                for (std::size_t c = 0; c < g.size(); ++c) dst[c] = g[c] * inv_n;
            }
        } else {
            const auto label = data.labels[rows[i]];
            total += cross_entropy_loss(out, label);
            if (grad_logits) {
                const auto g = cross_entropy_logit_grad(out, label);
                auto dst = grad_logits->row(i);
                for (std::size_t c = 0; c < g.size(); ++c) dst[c] = g[c] * inv_n;
            }
        }
    }
    return total * inv_n;
}

TrainResult train(LayeredNetwork net, const Samples& data, const TrainConfig& config) {
    config.validate();
    net.validate();
    if (data.size() == 0) throw ParameterError("train: empty dataset");
    if (data.inputs.cols() != net.input_dim) throw ShapeError("train: data width differs from network input");
    if (data.output_dim() != net.output_dim()) throw ShapeError("train: target width differs from network output");
    if ((data.task == TaskKind::Classification) != (net.head == Head::Softmax))
        throw ParameterError("train: classification needs a softmax head and regression an identity head");

    const Rng root(config.seed);
    Rng shuffle_rng = root.child(0);
    Rng dropout_rng = root.child(1);

    AdamOptimizer optimizer(net, config.adam);
    TrainResult result;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            Matrix batch(rows.size(), data.inputs.cols());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto src = data.inputs.row(rows[i]);
                std::copy(src.begin(), src.end(), batch.row(i).begin());
            }
            const Tape tape = forward_batch(net, batch, {config.dropout_rate, &dropout_rng});
            Matrix grad_logits;
            const double loss = batch_loss(data, rows, tape.output, &grad_logits);
            epoch_loss += loss * static_cast<double>(rows.size());
            if (!std::isfinite(loss)) break;
            optimizer.step(net, backward(net, tape, grad_logits));
        }
        epoch_loss /= static_cast<double>(order.size());
        result.loss_curve.push_back(epoch_loss);
        if (!std::isfinite(epoch_loss)) {
            result.diverged = true;
            break;
        }
    }
    result.net = std::move(net);
    return result;
}

double evaluate_loss(const LayeredNetwork& net, const Samples& data) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return batch_loss(data, rows, predict(net, data.inputs), nullptr);
}

}  // namespace combu
