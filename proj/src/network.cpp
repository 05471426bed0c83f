#include "combu/network.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "combu/error.hpp"

namespace combu {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::RowVectorXd>;

MapMat view(Matrix& m) { return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())}; }
CMapMat view(const Matrix& m) {
    return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

std::string shape(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

std::size_t LayeredNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

void LayeredNetwork::validate() const {
    if (layers.empty()) throw ShapeError("network has no layers");
    std::size_t width = input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        const std::string where = "layer " + std::to_string(l);
        if (layer.in_dim() != width)
            throw ShapeError(where + ": expects input width " + std::to_string(layer.in_dim()) + ", previous width is " +
                             std::to_string(width));
        if (layer.bias.size() != layer.out_dim()) throw ShapeError(where + ": bias length differs from output width");
        const bool last = l + 1 == layers.size();
        if (last && layer.activation) throw ShapeError(where + ": output layer must not carry an activation");
        if (!last) {
            if (!layer.activation) throw ShapeError(where + ": internal layer needs an activation");
            if (layer.activation->dim() != layer.out_dim())
                throw ShapeError(where + ": activation width differs from layer width");
            layer.activation->validate();
        }
        width = layer.out_dim();
    }
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto in = logits.row(r);
        auto o = out.row(r);
        double mx = in[0];
        for (double v : in) mx = std::max(mx, v);
        double total = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - mx);
            total += o[c];
        }
        for (double& v : o) v /= total;
    }
    return out;
}

Tape forward_batch(const LayeredNetwork& net, const Matrix& inputs, DropoutConfig dropout) {
    if (inputs.cols() != net.input_dim)
        throw ShapeError("forward: input width " + std::to_string(inputs.cols()) + " vs network input " +
                         std::to_string(net.input_dim));
    const bool use_dropout = dropout.rate > 0.0 && dropout.rng != nullptr;
    if (use_dropout && !(dropout.rate < 1.0)) throw ParameterError("dropout rate must be < 1");
    const double keep_scale = use_dropout ? 1.0 / (1.0 - dropout.rate) : 1.0;

    Tape tape;
    tape.inputs.reserve(net.layers.size());
    tape.pre_activation.reserve(net.layers.size());
    tape.dropout_scale.reserve(net.layers.size());

    Matrix current = inputs;
    const auto batch = static_cast<Eigen::Index>(inputs.rows());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        Matrix pre(inputs.rows(), layer.out_dim());
        const CMapVec bias(layer.bias.data(), static_cast<Eigen::Index>(layer.bias.size()));
        view(pre).noalias() = view(current) * view(layer.weights).transpose();
        view(pre).rowwise() += bias;

        tape.inputs.push_back(std::move(current));
        if (!layer.activation) {
            current = pre;
            tape.pre_activation.push_back(std::move(pre));
            tape.dropout_scale.emplace_back();
            continue;
        }

        const auto& act = *layer.activation;
        Matrix post(pre.rows(), pre.cols());
        for (Eigen::Index r = 0; r < batch; ++r) {
            const auto p = pre.row(static_cast<std::size_t>(r));
            auto o = post.row(static_cast<std::size_t>(r));
            for (std::size_t d = 0; d < p.size(); ++d) o[d] = act_eval(act.at(d), p[d]);
        }
        Matrix scale;
        if (use_dropout) {
            scale = Matrix(post.rows(), post.cols());
            auto& s = scale.data();
            auto& v = post.data();
            for (std::size_t i = 0; i < s.size(); ++i) {
                s[i] = dropout.rng->bernoulli(dropout.rate) ? 0.0 : keep_scale;
                v[i] *= s[i];
            }
        }
        tape.pre_activation.push_back(std::move(pre));
        tape.dropout_scale.push_back(std::move(scale));
        current = std::move(post);
    }
    tape.output = net.head == Head::Softmax ? softmax_rows(current) : std::move(current);
    return tape;
}

Vector forward(const LayeredNetwork& net, std::span<const double> x, bool train_mode, double dropout_rate, Rng* rng) {
    // Plain left-to-right sums, independent of the batch kernels, so results
    // are reproducible bit for bit regardless of layer widths.
    if (x.size() != net.input_dim)
        throw ShapeError("forward: input width " + std::to_string(x.size()) + " vs network input " +
                         std::to_string(net.input_dim));
    const bool use_dropout = train_mode && dropout_rate > 0.0 && rng != nullptr;
    if (use_dropout && !(dropout_rate < 1.0)) throw ParameterError("dropout rate must be < 1");
    Vector current(x.begin(), x.end());
    for (const auto& layer : net.layers) {
        Vector pre = matvec(layer.weights, current);
        for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += layer.bias[i];
        if (!layer.activation) {
            current = std::move(pre);
            continue;
        }
        current = combu_forward(*layer.activation, pre);
        if (use_dropout) {
            const double keep_scale = 1.0 / (1.0 - dropout_rate);
            for (double& v : current) v = rng->bernoulli(dropout_rate) ? 0.0 : v * keep_scale;
        }
    }
    if (net.head == Head::Softmax) return softmax_rows(Matrix(1, current.size(), current)).data();
    return current;
}

std::vector<Vector> hidden_activations(const LayeredNetwork& net, std::span<const double> x) {
    if (x.size() != net.input_dim) throw ShapeError("hidden_activations: input width mismatch");
    std::vector<Vector> out;
    Vector current(x.begin(), x.end());
    for (const auto& layer : net.layers) {
        Vector pre = matvec(layer.weights, current);
        for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += layer.bias[i];
        if (!layer.activation) break;
        current = combu_forward(*layer.activation, pre);
        out.push_back(current);
    }
    return out;
}

Matrix predict(const LayeredNetwork& net, const Matrix& inputs) { return forward_batch(net, inputs).output; }

Gradients backward(const LayeredNetwork& net, const Tape& tape, const Matrix& grad_logits) {
    const std::size_t n_layers = net.layers.size();
    if (tape.inputs.size() != n_layers) throw ShapeError("backward: tape does not match network");
    if (grad_logits.cols() != net.output_dim() || grad_logits.rows() != tape.output.rows())
        throw ShapeError("backward: gradient shape " + shape(grad_logits.rows(), grad_logits.cols()));

    Gradients grads;
    grads.weights.resize(n_layers);
    grads.bias.resize(n_layers);

    Matrix delta = grad_logits;  // dL/d(pre-activation) of the current layer
    for (std::size_t l = n_layers; l-- > 0;) {
        const auto& layer = net.layers[l];
        if (layer.activation) {
            const auto& act = *layer.activation;
            const Matrix& pre = tape.pre_activation[l];
            const Matrix& scale = tape.dropout_scale[l];
            for (std::size_t r = 0; r < delta.rows(); ++r) {
                auto d = delta.row(r);
                const auto p = pre.row(r);
                for (std::size_t c = 0; c < d.size(); ++c) {
                    double g = d[c] * act_grad(act.at(c), p[c]);
                    if (!scale.empty()) g *= scale(r, c);
                    d[c] = g;
                }
            }
        }
        Matrix gw(layer.out_dim(), layer.in_dim());
        view(gw).noalias() = view(delta).transpose() * view(tape.inputs[l]);
        Eigen::RowVectorXd gb = view(delta).colwise().sum();
        grads.weights[l] = std::move(gw);
        grads.bias[l] = Vector(gb.data(), gb.data() + gb.size());

        if (l > 0) {
            Matrix next(delta.rows(), layer.in_dim());
            view(next).noalias() = view(delta) * view(layer.weights);
            delta = std::move(next);
        }
    }
    return grads;
}

ActivationScheme ActivationScheme::uniform(const Activation& act) {
    act.validate();
    return ActivationScheme{to_string(act), act};
}

ActivationScheme ActivationScheme::mixture(std::string name, Ratios ratios) {
    validate_ratios(ratios);
    return ActivationScheme{std::move(name), std::move(ratios)};
}

ActivationScheme ActivationScheme::from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto text = j.get<std::string>();
        if (text == "combu") return combu();
        return uniform(parse_activation(text));
    }
    if (!j.is_object()) throw ParseError("activation scheme must be a string or an object");
    const auto name = j.value("name", std::string("mixture"));
    if (j.contains("ratios")) return mixture(name, j.at("ratios").get<Ratios>());
    if (j.contains("kind")) {
        auto s = uniform(parse_activation(j.at("kind").get<std::string>()));
        s.name = name;
        return s;
    }
    throw ParseError("activation scheme object needs 'ratios' or 'kind'");
}

nlohmann::json ActivationScheme::to_json() const {
    if (const auto* act = std::get_if<Activation>(&kind)) return {{"name", name}, {"kind", combu::to_string(*act)}};
    return {{"name", name}, {"ratios", std::get<Ratios>(kind)}};
}

std::vector<ActivationScheme> benchmark_schemes() {
    return {
        ActivationScheme::uniform(Activation::relu()),  ActivationScheme::uniform(Activation::elu()),
        ActivationScheme::uniform(Activation::selu()),  ActivationScheme::uniform(Activation::swish()),
        ActivationScheme::uniform(Activation::nlrelu()), ActivationScheme::uniform(Activation::gelu()),
        ActivationScheme::combu(),
    };
}

LayeredNetwork build_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
                         const ActivationScheme& scheme, Rng& rng, Head head) {
    if (input_dim == 0 || output_dim == 0) throw ParameterError("build_mlp: dimensions must be positive");
    LayeredNetwork net;
    net.input_dim = input_dim;
    net.head = head;

    std::vector<std::size_t> widths{input_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(output_dim);

    Rng weight_rng = rng.child(0);
    Rng assign_rng = rng.child(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l];
        const std::size_t fan_out = widths[l + 1];
        if (fan_out == 0) throw ParameterError("build_mlp: hidden widths must be positive");
        DenseLayer layer;
        layer.weights = Matrix(fan_out, fan_in);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : layer.weights.data()) w = weight_rng.uniform(-limit, limit);
        layer.bias.assign(fan_out, 0.0);
        if (l + 2 < widths.size()) {
            if (const auto* act = std::get_if<Activation>(&scheme.kind)) {
                layer.activation = ActivationAssignment::uniform(*act, fan_out);
            } else {
                layer.activation = assign_dims(std::get<Ratios>(scheme.kind), fan_out, assign_rng);
            }
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

LayeredNetwork build_benchmark_mlp(std::size_t input_dim, std::size_t output_dim, ModelSize size,
                               const ActivationScheme& scheme, Rng& rng, Head head) {
    // "n layers" counts dense layers, so n - 1 hidden activations.
    const std::vector<std::size_t> small(2, 128);
    const std::vector<std::size_t> large(5, 256);
    return build_mlp(input_dim, size == ModelSize::Small ? small : large, output_dim, scheme, rng, head);
}

std::string to_string(ModelSize size) { return size == ModelSize::Small ? "small" : "large"; }

ModelSize parse_model_size(const std::string& text) {
    if (text == "small") return ModelSize::Small;
    if (text == "large") return ModelSize::Large;
    throw ParseError("model size must be 'small' or 'large', got '" + text + "'");
}

void to_json(nlohmann::json& j, const LayeredNetwork& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json lj{{"in", layer.in_dim()},
                          {"out", layer.out_dim()},
                          {"W", layer.weights.data()},
                          {"b", layer.bias}};
        lj["activation"] = layer.activation ? nlohmann::json(*layer.activation) : nlohmann::json(nullptr);
        layers.push_back(std::move(lj));
    }
    j = nlohmann::json{{"input_dim", net.input_dim},
                       {"head", net.head == Head::Softmax ? "softmax" : "identity"},
                       {"layers", std::move(layers)}};
}

void from_json(const nlohmann::json& j, LayeredNetwork& net) {
    try {
        net = {};
        net.input_dim = j.at("input_dim").get<std::size_t>();
        const auto head = j.at("head").get<std::string>();
        if (head == "softmax") net.head = Head::Softmax;
        else if (head == "identity") net.head = Head::Identity;
        else throw ParseError("unknown head '" + head + "'");
        for (const auto& lj : j.at("layers")) {
            DenseLayer layer;
            const auto in = lj.at("in").get<std::size_t>();
            const auto out = lj.at("out").get<std::size_t>();
            layer.weights = Matrix(out, in, lj.at("W").get<std::vector<double>>());
            layer.bias = lj.at("b").get<Vector>();
            if (!lj.at("activation").is_null()) layer.activation = lj.at("activation").get<ActivationAssignment>();
            net.layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network JSON: ") + e.what());
    }
    net.validate();
}

}  // namespace combu
