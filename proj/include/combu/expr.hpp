#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

namespace combu {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

namespace ast {

/// Input variable, 0-based (x1 in text is index 0).
struct Var {
    std::size_t index = 0;
};

struct Const {
    double value = 0.0;
};

/// bias + sum_i coeffs[i] * terms[i]
struct LinComb {
    std::vector<double> coeffs;
    std::vector<ExprPtr> terms;
    double bias = 0.0;
};

struct Exp {
    ExprPtr child;
};

struct Log {
    ExprPtr child;
};

/// prod_j factors[j] ^ exponents[j]; every factor must be strictly positive.
struct PowerProduct {
    std::vector<double> exponents;
    std::vector<ExprPtr> factors;
};

/// sum_i coeffs[i] * products[i]
struct PolySum {
    std::vector<double> coeffs;
    std::vector<PowerProduct> products;
};

}  // namespace ast

struct Expr {
    std::variant<ast::Var, ast::Const, ast::LinComb, ast::Exp, ast::Log, ast::PowerProduct, ast::PolySum> node;
};

namespace expr {

ExprPtr var(std::size_t index);
ExprPtr constant(double value);
ExprPtr lin(std::vector<double> coeffs, std::vector<ExprPtr> terms, double bias = 0.0);
ExprPtr exp(ExprPtr child);
ExprPtr log(ExprPtr child);
ExprPtr pow(ExprPtr base, double exponent);
ExprPtr product(std::vector<double> exponents, std::vector<ExprPtr> factors);
ExprPtr poly_sum(std::vector<double> coeffs, std::vector<ast::PowerProduct> products);

}  // namespace expr

/// Parses the prefix s-expression format:
///
///   x1, x2, ...                         variables (1-based)
///   <number>                            constant
///   (exp E) (log E)
///   (lin c1 E1 c2 E2 ... [bias])        linear combination
///   (pow E p)                           single power
///   (prod (pow E p) ...)                power product
///   (sum (term a (pow E p) ...) ...)    sum of power products
///
/// Throws ParseError with the offending position on malformed input.
ExprPtr parse_expr(std::string_view text);

/// Canonical s-expression text; parse_expr(to_sexpr(e)) is structurally equal.
std::string to_sexpr(const Expr& e);

/// Highest variable index + 1 (0 for closed expressions).
std::size_t arity(const Expr& e);

/// Number of nodes along the longest root-to-leaf path (a leaf has depth 1).
std::size_t expr_depth(const Expr& e);

/// Direct recursive interpreter over doubles. This is the reference the
/// compiled networks are checked against.
double eval_expr(const Expr& e, std::span<const double> x);

/// Closed interval plus the smallest magnitude a value in it can take.
struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
    double min_abs = 0.0;

    static Bounds interval(double lo, double hi);
    /// Largest magnitude, the M of a gadget.
    double max_abs() const;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Bounds for every node, keyed by node address. Nodes shared between
/// subtrees get one entry.
using BoundsMap = std::unordered_map<const Expr*, Bounds>;

/// Interval arithmetic over the tree. Throws DomainError when a log or power
/// factor can reach a non-positive value, BoundError when a bound is not
/// finite, ShapeError when a variable has no bounds.
BoundsMap infer_bounds(const ExprPtr& root, std::span<const Bounds> inputs);

/// Variable bounds from JSON: {"x1": {"lo": 1, "hi": 10, "delta": 0.5}, ...}
/// or {"x1": [1, 10], ...}. delta defaults to the interval's own minimum
/// magnitude. Every variable below n_vars must be present.
std::vector<Bounds> bounds_from_json(const nlohmann::json& j, std::size_t n_vars);
nlohmann::json bounds_to_json(std::span<const Bounds> bounds);

}  // namespace combu
