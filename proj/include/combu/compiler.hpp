#pragma once

#include <cstddef>
#include <span>

#include "combu/expr.hpp"
#include "combu/network.hpp"
#include "combu/rng.hpp"

namespace combu {

// Compiles symbolic expressions into exact fixed-weight networks whose hidden
// units use only ReLU (R), ELU with alpha 1 (E) and NLReLU with beta 1 (N).
//
// A gadget is a small LayeredNetwork with one input and one output realizing a
// closed-form function exactly on a bounded interval. Larger networks are
// assembled with three structural moves:
//   - widen_inputs     unused inputs get zero weights
//   - pad_identity     carry the output through extra layers as R(f) - R(-f)
//   - compose          run inners side by side, carry each output as the
//                      (R(f), R(-f)) pair and fold the outer's first affine map
//                      into the pair readout
using Gadget = LayeredNetwork;

/// exp(x) for x <= M: hidden (E(x - M), R(x - M)), output
/// e^M * E - e^M * R + e^M. Saturates at e^M above M.
/// Throws ConditioningError for M > 700 (e^M would overflow).
Gadget exp_gadget(double max_input);

/// ln(x) for x >= delta: hidden N(x / delta - 1), output N + ln(delta).
/// Throws ParameterError for delta <= 0.
Gadget log_gadget(double delta);

/// z -> (R(z), R(-z)) -> z.
Gadget identity_gadget();

/// Extends the input layer to new_input_dim columns; the extra inputs get zero
/// weights. The original inputs stay at positions [0, input_dim).
LayeredNetwork widen_inputs(const LayeredNetwork& net, std::size_t new_input_dim);

/// Appends `layers` identity stages after the last hidden layer. Outputs are
/// unchanged bit for bit.
LayeredNetwork pad_identity(const LayeredNetwork& net, std::size_t layers = 1);

/// Equal-depth networks with the same input run side by side; outputs are
/// concatenated in order.
LayeredNetwork stack_parallel(std::span<const LayeredNetwork> nets);

/// outer(inner_1(x), ..., inner_m(x)). Inner output widths must add up to the
/// outer's input width. Inners are widened to the widest input and padded to a
/// common depth before stacking.
LayeredNetwork compose(const LayeredNetwork& outer, std::span<const LayeredNetwork> inners);

/// Compiles an expression. Every exp node gets M = upper bound of its argument
/// and every log or power factor gets delta = positive lower bound of its
/// operand, both from infer_bounds over `inputs`. The network input width is
/// max(inputs.size(), arity(ast)).
LayeredNetwork compile(const ExprPtr& ast, std::span<const Bounds> inputs);

/// Draws a point from the box given by the bounds; values with
/// 0 < |v| < min_abs are redrawn.
Vector sample_domain(std::span<const Bounds> inputs, Rng& rng);

/// Max relative error (absolute where |truth| < 1e-8) of the network against
/// the AST interpreter over n_samples random points of the domain.
double verify(const LayeredNetwork& net, const Expr& ast, std::span<const Bounds> inputs, std::size_t n_samples,
              Rng& rng);

/// True when every hidden unit is R, E(1) or N(1).
bool uses_only_combu_components(const LayeredNetwork& net);

}  // namespace combu
