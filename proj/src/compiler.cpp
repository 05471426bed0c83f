#include "combu/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "combu/error.hpp"

namespace combu {

namespace {

constexpr double kMaxExpArgument = 700.0;

const Activation kR = Activation::relu();
const Activation kE = Activation::elu(1.0);
const Activation kN = Activation::nlrelu(1.0);

ActivationAssignment assignment_of(std::initializer_list<Activation> per_dim) {
    ActivationAssignment a;
    for (const auto& act : per_dim) {
        std::uint32_t idx = 0;
        while (idx < a.kinds.size() && !(a.kinds[idx] == act)) ++idx;
        if (idx == a.kinds.size()) a.kinds.push_back(act);
        a.per_dim.push_back(idx);
    }
    return a;
}

/// Single affine layer: out = coeffs . x + bias over input_dim inputs.
LayeredNetwork affine_net(std::size_t input_dim, const Vector& coeffs, double bias) {
    LayeredNetwork net;
    net.input_dim = input_dim;
    DenseLayer layer;
    layer.weights = Matrix(1, input_dim, coeffs);
    layer.bias = {bias};
    net.layers.push_back(std::move(layer));
    return net;
}

/// Concatenates two activation assignments.
ActivationAssignment concat(const ActivationAssignment& a, const ActivationAssignment& b) {
    ActivationAssignment out = a;
    for (std::size_t d = 0; d < b.dim(); ++d) {
        const Activation& act = b.at(d);
        std::uint32_t idx = 0;
        while (idx < out.kinds.size() && !(out.kinds[idx] == act)) ++idx;
        if (idx == out.kinds.size()) out.kinds.push_back(act);
        out.per_dim.push_back(idx);
    }
    return out;
}

}  // namespace

Gadget exp_gadget(double max_input) {
    if (!std::isfinite(max_input) || max_input > kMaxExpArgument)
        throw ConditioningError("exp gadget: M = " + std::to_string(max_input) + " makes exp(M) overflow");
    const double scale = std::exp(max_input);
    Gadget g;
    g.input_dim = 1;
    g.layers.push_back(DenseLayer{Matrix{{1.0}, {1.0}}, {-max_input, -max_input}, assignment_of({kE, kR})});
    g.layers.push_back(DenseLayer{Matrix{{scale, -scale}}, {scale}, std::nullopt});
    return g;
}

Gadget log_gadget(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw ParameterError("log gadget: delta must be a positive finite number");
    Gadget g;
    g.input_dim = 1;
    g.layers.push_back(DenseLayer{Matrix{{1.0 / delta}}, {-1.0}, assignment_of({kN})});
    g.layers.push_back(DenseLayer{Matrix{{1.0}}, {std::log(delta)}, std::nullopt});
    return g;
}

Gadget identity_gadget() {
    Gadget g;
    g.input_dim = 1;
    g.layers.push_back(DenseLayer{Matrix{{1.0}, {-1.0}}, {0.0, 0.0}, assignment_of({kR, kR})});
    g.layers.push_back(DenseLayer{Matrix{{1.0, -1.0}}, {0.0}, std::nullopt});
    return g;
}

LayeredNetwork widen_inputs(const LayeredNetwork& net, std::size_t new_input_dim) {
    if (new_input_dim < net.input_dim) throw ShapeError("widen_inputs: cannot drop inputs");
    if (new_input_dim == net.input_dim) return net;
    LayeredNetwork out = net;
    out.input_dim = new_input_dim;
    auto& first = out.layers.front();
    Matrix w(first.out_dim(), new_input_dim);
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < first.in_dim(); ++c) w(r, c) = first.weights(r, c);
    first.weights = std::move(w);
    return out;
}

LayeredNetwork pad_identity(const LayeredNetwork& net, std::size_t layers) {
    net.validate();
    LayeredNetwork out = net;
    for (std::size_t k = 0; k < layers; ++k) {
        DenseLayer last = std::move(out.layers.back());
        out.layers.pop_back();
        const std::size_t m = last.out_dim();
        const std::size_t h = last.in_dim();

        // [W; -W] and [b; -b] under ReLU give the (R(f), R(-f)) pair.
        DenseLayer pair;
        pair.weights = Matrix(2 * m, h);
        pair.bias.assign(2 * m, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < h; ++c) {
                pair.weights(r, c) = last.weights(r, c);
                pair.weights(m + r, c) = -last.weights(r, c);
            }
            pair.bias[r] = last.bias[r];
            pair.bias[m + r] = -last.bias[r];
        }
        pair.activation = ActivationAssignment::uniform(kR, 2 * m);

        DenseLayer readout;
        readout.weights = Matrix(m, 2 * m);
        readout.bias.assign(m, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            readout.weights(r, r) = 1.0;
            readout.weights(r, m + r) = -1.0;
        }
        out.layers.push_back(std::move(pair));
        out.layers.push_back(std::move(readout));
    }
    return out;
}

LayeredNetwork stack_parallel(std::span<const LayeredNetwork> nets) {
    if (nets.empty()) throw ShapeError("stack_parallel: nothing to stack");
    const std::size_t depth = nets.front().depth();
    const std::size_t input_dim = nets.front().input_dim;
    for (const auto& n : nets) {
        n.validate();
        if (n.depth() != depth || n.input_dim != input_dim)
            throw InternalError("stack_parallel: networks differ in depth or input width");
    }

    LayeredNetwork out;
    out.input_dim = input_dim;
    for (std::size_t l = 0; l < depth; ++l) {
        std::size_t rows = 0, cols = 0;
        for (const auto& n : nets) {
            rows += n.layers[l].out_dim();
            cols += n.layers[l].in_dim();
        }
        if (l == 0) cols = input_dim;  // all first layers read the shared input

        DenseLayer layer;
        layer.weights = Matrix(rows, cols);
        std::size_t r0 = 0, c0 = 0;
        for (const auto& n : nets) {
            const auto& src = n.layers[l];
            for (std::size_t r = 0; r < src.out_dim(); ++r)
                for (std::size_t c = 0; c < src.in_dim(); ++c) layer.weights(r0 + r, c0 + c) = src.weights(r, c);
            layer.bias.insert(layer.bias.end(), src.bias.begin(), src.bias.end());
            if (src.activation)
                layer.activation = layer.activation ? concat(*layer.activation, *src.activation) : *src.activation;
            r0 += src.out_dim();
            if (l > 0) c0 += src.in_dim();
        }
        out.layers.push_back(std::move(layer));
    }
    out.validate();
    return out;
}

LayeredNetwork compose(const LayeredNetwork& outer, std::span<const LayeredNetwork> inners) {
    outer.validate();
    if (inners.empty()) throw ShapeError("compose: need at least one inner network");
    std::size_t total_out = 0, input_dim = 0, depth = 0;
    for (const auto& n : inners) {
        n.validate();
        total_out += n.output_dim();
        input_dim = std::max(input_dim, n.input_dim);
        depth = std::max(depth, n.depth());
    }
    if (total_out != outer.input_dim)
        throw ShapeError("compose: inner outputs (" + std::to_string(total_out) + ") differ from outer arity (" +
                         std::to_string(outer.input_dim) + ")");

    std::vector<LayeredNetwork> aligned;
    aligned.reserve(inners.size());
    for (const auto& n : inners) {
        LayeredNetwork a = widen_inputs(n, input_dim);
        const std::size_t missing = depth - a.depth();
        if (missing > 0) a = pad_identity(a, missing);
        aligned.push_back(std::move(a));
    }

    // Carry every inner output as (R(f), R(-f)); the last layer is then the
    // [I, -I] readout, which folds into the outer's first affine map.
    LayeredNetwork carried = pad_identity(stack_parallel(aligned), 1);
    const DenseLayer readout = std::move(carried.layers.back());
    carried.layers.pop_back();

    const DenseLayer& first = outer.layers.front();
    DenseLayer fused;
    fused.weights = matmul(first.weights, readout.weights);
    fused.bias = matvec(first.weights, readout.bias);
    for (std::size_t i = 0; i < fused.bias.size(); ++i) fused.bias[i] += first.bias[i];
    fused.activation = first.activation;

    LayeredNetwork out = std::move(carried);
    out.head = outer.head;
    out.layers.push_back(std::move(fused));
    for (std::size_t l = 1; l < outer.layers.size(); ++l) out.layers.push_back(outer.layers[l]);
    out.validate();
    if (out.output_dim() != outer.output_dim()) throw InternalError("compose: output width changed");
    return out;
}

namespace {

class Compiler {
public:
    Compiler(const BoundsMap& bounds, std::size_t input_dim) : bounds_(bounds), input_dim_(input_dim) {}

    LayeredNetwork build(const ExprPtr& node) {
        return std::visit([&](const auto& n) { return build_node(n, node); }, node->node);
    }

private:
    const Bounds& bounds_of(const ExprPtr& node) const {
        auto it = bounds_.find(node.get());
        if (it == bounds_.end()) throw InternalError("compile: node has no bounds");
        return it->second;
    }

    static double positive_floor(const Bounds& b) {
        if (!(b.lo > 0.0)) throw DomainError("compile: log operand may be <= 0");
        return std::max(b.lo, b.min_abs);
    }

    LayeredNetwork build_node(const ast::Var& n, const ExprPtr&) {
        Vector w(input_dim_, 0.0);
        w.at(n.index) = 1.0;
        return affine_net(input_dim_, w, 0.0);
    }

    LayeredNetwork build_node(const ast::Const& n, const ExprPtr&) {
        return affine_net(input_dim_, Vector(input_dim_, 0.0), n.value);
    }

    LayeredNetwork build_node(const ast::LinComb& n, const ExprPtr&) {
        if (n.terms.empty()) return affine_net(input_dim_, Vector(input_dim_, 0.0), n.bias);
        std::vector<LayeredNetwork> inners;
        for (const auto& t : n.terms) inners.push_back(build(t));
        return compose(affine_net(n.terms.size(), n.coeffs, n.bias), inners);
    }

    LayeredNetwork build_node(const ast::Exp& n, const ExprPtr&) {
        const LayeredNetwork inner = build(n.child);
        return compose(exp_gadget(bounds_of(n.child).hi), std::span(&inner, 1));
    }

    LayeredNetwork build_node(const ast::Log& n, const ExprPtr&) {
        const LayeredNetwork inner = build(n.child);
        return compose(log_gadget(positive_floor(bounds_of(n.child))), std::span(&inner, 1));
    }

    LayeredNetwork build_node(const ast::PowerProduct& n, const ExprPtr&) { return build_product(n); }

    LayeredNetwork build_node(const ast::PolySum& n, const ExprPtr&) {
        std::vector<LayeredNetwork> terms;
        for (const auto& p : n.products) terms.push_back(build_product(p));
        return compose(affine_net(terms.size(), n.coeffs, 0.0), terms);
    }

    // prod f_j^p_j = exp(sum_j p_j ln f_j)
    LayeredNetwork build_product(const ast::PowerProduct& p) {
        std::vector<LayeredNetwork> logs;
        double exponent_hi = 0.0;
        for (std::size_t j = 0; j < p.factors.size(); ++j) {
            const Bounds& fb = bounds_of(p.factors[j]);
            const double floor = positive_floor(fb);
            const double a = p.exponents[j] * std::log(floor);
            const double z = p.exponents[j] * std::log(fb.hi);
            exponent_hi += std::max(a, z);
            const LayeredNetwork factor = build(p.factors[j]);
            logs.push_back(compose(log_gadget(floor), std::span(&factor, 1)));
        }
        const LayeredNetwork exponent = compose(affine_net(logs.size(), p.exponents, 0.0), logs);
        return compose(exp_gadget(exponent_hi), std::span(&exponent, 1));
    }

    const BoundsMap& bounds_;
    std::size_t input_dim_;
};

}  // namespace

LayeredNetwork compile(const ExprPtr& ast, std::span<const Bounds> inputs) {
    if (!ast) throw ParameterError("compile: null expression");
    const BoundsMap bounds = infer_bounds(ast, inputs);
    const std::size_t input_dim = std::max(inputs.size(), arity(*ast));
    LayeredNetwork net = Compiler(bounds, input_dim).build(ast);
    net.validate();
    return net;
}

Vector sample_domain(std::span<const Bounds> inputs, Rng& rng) {
    Vector x(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Bounds& b = inputs[i];
        const bool has_nonzero = b.min_abs == 0.0 || b.hi >= b.min_abs || b.lo <= -b.min_abs;
        if (!has_nonzero) {
            if (!b.contains(0.0)) throw BoundError("sample_domain: empty domain for x" + std::to_string(i + 1));
            x[i] = 0.0;
            continue;
        }
        double v;
        do {
            v = rng.uniform(b.lo, b.hi);
        } while (v != 0.0 && std::abs(v) < b.min_abs);
        x[i] = v;
    }
    return x;
}

double verify(const LayeredNetwork& net, const Expr& ast, std::span<const Bounds> inputs, std::size_t n_samples,
              Rng& rng) {
    if (net.input_dim < inputs.size()) throw ShapeError("verify: network has fewer inputs than bounds");
    double worst = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        Vector x = sample_domain(inputs, rng);
        x.resize(net.input_dim, 0.0);
        const double truth = eval_expr(ast, x);
        const double got = forward(net, x).at(0);
        const double err = std::abs(got - truth);
        const double rel = std::abs(truth) < 1e-8 ? err : err / std::abs(truth);
        if (!(rel <= worst)) worst = rel;  // also propagates NaN
    }
    return worst;
}

bool uses_only_combu_components(const LayeredNetwork& net) {
    for (const auto& layer : net.layers) {
        if (!layer.activation) continue;
        for (std::size_t d = 0; d < layer.activation->dim(); ++d) {
            const Activation& a = layer.activation->at(d);
            if (!(a == kR || a == kE || a == kN)) return false;
        }
    }
    return true;
}

}  // namespace combu
