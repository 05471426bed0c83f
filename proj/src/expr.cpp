#include "combu/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

#include "combu/error.hpp"

namespace combu {

namespace expr {

ExprPtr var(std::size_t index) { return std::make_shared<const Expr>(Expr{ast::Var{index}}); }
ExprPtr constant(double value) { return std::make_shared<const Expr>(Expr{ast::Const{value}}); }

ExprPtr lin(std::vector<double> coeffs, std::vector<ExprPtr> terms, double bias) {
    if (coeffs.size() != terms.size()) throw ShapeError("lin: coefficient and term counts differ");
    return std::make_shared<const Expr>(Expr{ast::LinComb{std::move(coeffs), std::move(terms), bias}});
}

ExprPtr exp(ExprPtr child) { return std::make_shared<const Expr>(Expr{ast::Exp{std::move(child)}}); }
ExprPtr log(ExprPtr child) { return std::make_shared<const Expr>(Expr{ast::Log{std::move(child)}}); }

ExprPtr pow(ExprPtr base, double exponent) { return product({exponent}, {std::move(base)}); }

ExprPtr product(std::vector<double> exponents, std::vector<ExprPtr> factors) {
    if (exponents.size() != factors.size() || factors.empty())
        throw ShapeError("product: need one exponent per factor and at least one factor");
    return std::make_shared<const Expr>(Expr{ast::PowerProduct{std::move(exponents), std::move(factors)}});
}

ExprPtr poly_sum(std::vector<double> coeffs, std::vector<ast::PowerProduct> products) {
    if (coeffs.size() != products.size() || products.empty())
        throw ShapeError("sum: need one coefficient per term and at least one term");
    for (const auto& p : products)
        if (p.exponents.size() != p.factors.size() || p.factors.empty())
            throw ShapeError("sum: malformed term");
    return std::make_shared<const Expr>(Expr{ast::PolySum{std::move(coeffs), std::move(products)}});
}

}  // namespace expr

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct SNode {
    std::size_t pos = 0;
    std::string atom;  // empty for lists
    std::vector<SNode> items;
    bool is_list = false;
};

class SexprReader {
public:
    explicit SexprReader(std::string_view text) : text_(text) {}

    SNode read_top() {
        SNode n = read();
        skip_space();
        if (pos_ != text_.size()) fail("trailing input");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("s-expression at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            } else if (text_[pos_] == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    SNode read() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        SNode n;
        n.pos = pos_;
        if (text_[pos_] == '(') {
            n.is_list = true;
            ++pos_;
            for (;;) {
                skip_space();
                if (pos_ >= text_.size()) fail("missing ')'");
                if (text_[pos_] == ')') {
                    ++pos_;
                    break;
                }
                n.items.push_back(read());
            }
            return n;
        }
        if (text_[pos_] == ')') fail("unexpected ')'");
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
               text_[pos_] != ')')
            ++pos_;
        n.atom = std::string(text_.substr(start, pos_ - start));
        return n;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

[[noreturn]] void fail_at(const SNode& n, const std::string& what) {
    throw ParseError("s-expression at offset " + std::to_string(n.pos) + ": " + what);
}

std::optional<double> as_number(const SNode& n) {
    if (n.is_list || n.atom.empty()) return std::nullopt;
    const char* first = n.atom.data();
    const char* last = first + n.atom.size();
    if (*first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
}

double number(const SNode& n, const char* role) {
    const auto v = as_number(n);
    if (!v) fail_at(n, std::string("expected a number for ") + role);
    if (!std::isfinite(*v)) fail_at(n, std::string(role) + " must be finite");
    return *v;
}

ExprPtr convert(const SNode& n);

void add_factor(const SNode& n, ast::PowerProduct& out) {
    if (n.is_list && !n.items.empty() && n.items[0].atom == "pow") {
        if (n.items.size() != 3) fail_at(n, "(pow E p) takes two arguments");
        out.factors.push_back(convert(n.items[1]));
        out.exponents.push_back(number(n.items[2], "exponent"));
        return;
    }
    out.factors.push_back(convert(n));
    out.exponents.push_back(1.0);
}

ExprPtr convert(const SNode& n) {
    if (!n.is_list) {
        if (auto v = as_number(n)) {
            if (!std::isfinite(*v)) fail_at(n, "constant must be finite");
            return expr::constant(*v);
        }
        if (n.atom.size() >= 2 && n.atom[0] == 'x') {
            std::size_t idx = 0;
            auto [ptr, ec] = std::from_chars(n.atom.data() + 1, n.atom.data() + n.atom.size(), idx);
            if (ec == std::errc{} && ptr == n.atom.data() + n.atom.size() && idx >= 1) return expr::var(idx - 1);
        }
        fail_at(n, "unknown atom '" + n.atom + "'");
    }
    if (n.items.empty() || n.items[0].is_list) fail_at(n, "expected an operator name");
    const std::string& op = n.items[0].atom;
    const std::size_t argc = n.items.size() - 1;

    if (op == "exp" || op == "log") {
        if (argc != 1) fail_at(n, "(" + op + " E) takes one argument");
        auto child = convert(n.items[1]);
        return op == "exp" ? expr::exp(std::move(child)) : expr::log(std::move(child));
    }
    if (op == "lin") {
        if (argc == 0) fail_at(n, "(lin c E ... [bias]) needs at least one argument");
        std::vector<double> coeffs;
        std::vector<ExprPtr> terms;
        double bias = 0.0;
        std::size_t i = 1;
        for (; i + 1 < n.items.size(); i += 2) {
            coeffs.push_back(number(n.items[i], "coefficient"));
            terms.push_back(convert(n.items[i + 1]));
        }
        if (i < n.items.size()) bias = number(n.items[i], "bias");
        return expr::lin(std::move(coeffs), std::move(terms), bias);
    }
    if (op == "pow") {
        if (argc != 2) fail_at(n, "(pow E p) takes two arguments");
        return expr::pow(convert(n.items[1]), number(n.items[2], "exponent"));
    }
    if (op == "prod") {
        if (argc == 0) fail_at(n, "(prod ...) needs at least one factor");
        ast::PowerProduct p;
        for (std::size_t i = 1; i < n.items.size(); ++i) add_factor(n.items[i], p);
        return expr::product(std::move(p.exponents), std::move(p.factors));
    }
    if (op == "sum") {
        if (argc == 0) fail_at(n, "(sum ...) needs at least one term");
        std::vector<double> coeffs;
        std::vector<ast::PowerProduct> products;
        for (std::size_t i = 1; i < n.items.size(); ++i) {
            const SNode& t = n.items[i];
            if (!t.is_list || t.items.size() < 3 || t.items[0].atom != "term")
                fail_at(t, "expected (term a factor ...)");
            coeffs.push_back(number(t.items[1], "term coefficient"));
            ast::PowerProduct p;
            for (std::size_t k = 2; k < t.items.size(); ++k) add_factor(t.items[k], p);
            products.push_back(std::move(p));
        }
        return expr::poly_sum(std::move(coeffs), std::move(products));
    }
    fail_at(n, "unknown operator '" + op + "'");
}

std::string fmt(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_factors(const ast::PowerProduct& p, std::string& out);

void write(const Expr& e, std::string& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ast::Var>) {
                out += "x" + std::to_string(n.index + 1);
            } else if constexpr (std::is_same_v<T, ast::Const>) {
                out += fmt(n.value);
            } else if constexpr (std::is_same_v<T, ast::LinComb>) {
                out += "(lin";
                for (std::size_t i = 0; i < n.terms.size(); ++i) {
                    out += " " + fmt(n.coeffs[i]) + " ";
                    write(*n.terms[i], out);
                }
                if (n.bias != 0.0) out += " " + fmt(n.bias);
                out += ")";
            } else if constexpr (std::is_same_v<T, ast::Exp>) {
                out += "(exp ";
                write(*n.child, out);
                out += ")";
            } else if constexpr (std::is_same_v<T, ast::Log>) {
                out += "(log ";
                write(*n.child, out);
                out += ")";
            } else if constexpr (std::is_same_v<T, ast::PowerProduct>) {
                if (n.factors.size() == 1) {
                    write_factors(n, out);
                } else {
                    out += "(prod ";
                    write_factors(n, out);
                    out += ")";
                }
            } else {
                out += "(sum";
                for (std::size_t i = 0; i < n.products.size(); ++i) {
                    out += " (term " + fmt(n.coeffs[i]) + " ";
                    write_factors(n.products[i], out);
                    out += ")";
                }
                out += ")";
            }
        },
        e.node);
}

void write_factors(const ast::PowerProduct& p, std::string& out) {
    for (std::size_t j = 0; j < p.factors.size(); ++j) {
        if (j) out += " ";
        out += "(pow ";
        write(*p.factors[j], out);
        out += " " + fmt(p.exponents[j]) + ")";
    }
}

template <class F>
void for_each_child(const Expr& e, F&& f) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ast::LinComb>) {
                for (const auto& t : n.terms) f(*t);
            } else if constexpr (std::is_same_v<T, ast::Exp> || std::is_same_v<T, ast::Log>) {
                f(*n.child);
            } else if constexpr (std::is_same_v<T, ast::PowerProduct>) {
                for (const auto& t : n.factors) f(*t);
            } else if constexpr (std::is_same_v<T, ast::PolySum>) {
                for (const auto& p : n.products)
                    for (const auto& t : p.factors) f(*t);
            }
        },
        e.node);
}

double eval_product(const ast::PowerProduct& p, std::span<const double> x) {
    double acc = 1.0;
    for (std::size_t j = 0; j < p.factors.size(); ++j) acc *= std::pow(eval_expr(*p.factors[j], x), p.exponents[j]);
    return acc;
}

}  // namespace

ExprPtr parse_expr(std::string_view text) { return convert(SexprReader(text).read_top()); }

std::string to_sexpr(const Expr& e) {
    std::string out;
    write(e, out);
    return out;
}

std::size_t arity(const Expr& e) {
    std::size_t n = 0;
    if (const auto* v = std::get_if<ast::Var>(&e.node)) n = v->index + 1;
    for_each_child(e, [&](const Expr& c) { n = std::max(n, arity(c)); });
    return n;
}

std::size_t expr_depth(const Expr& e) {
    std::size_t d = 0;
    for_each_child(e, [&](const Expr& c) { d = std::max(d, expr_depth(c)); });
    // A term's factors sit one level below the sum node.
    if (std::holds_alternative<ast::PolySum>(e.node)) ++d;
    return d + 1;
}

double eval_expr(const Expr& e, std::span<const double> x) {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ast::Var>) {
                if (n.index >= x.size()) throw ShapeError("eval: variable x" + std::to_string(n.index + 1) + " unbound");
                return x[n.index];
            } else if constexpr (std::is_same_v<T, ast::Const>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, ast::LinComb>) {
                double acc = n.bias;
                for (std::size_t i = 0; i < n.terms.size(); ++i) acc += n.coeffs[i] * eval_expr(*n.terms[i], x);
                return acc;
            } else if constexpr (std::is_same_v<T, ast::Exp>) {
                return std::exp(eval_expr(*n.child, x));
            } else if constexpr (std::is_same_v<T, ast::Log>) {
                return std::log(eval_expr(*n.child, x));
            } else if constexpr (std::is_same_v<T, ast::PowerProduct>) {
                return eval_product(n, x);
            } else {
                double acc = 0.0;
                for (std::size_t i = 0; i < n.products.size(); ++i) acc += n.coeffs[i] * eval_product(n.products[i], x);
                return acc;
            }
        },
        e.node);
}

// ---------------------------------------------------------------------------
// Bounds

Bounds Bounds::interval(double lo, double hi) {
    Bounds b{lo, hi, 0.0};
    if (lo > 0.0) b.min_abs = lo;
    else if (hi < 0.0) b.min_abs = -hi;
    return b;
}

double Bounds::max_abs() const { return std::max(std::abs(lo), std::abs(hi)); }

namespace {

Bounds checked(Bounds b, const char* what) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
        throw BoundError(std::string(what) + ": bound is not finite");
    return b;
}

/// Smallest value a strictly positive operand can take; DomainError otherwise.
double positive_floor(const Bounds& b, const char* what) {
    if (!(b.lo > 0.0))
        throw DomainError(std::string(what) + ": operand may be <= 0 (lower bound " + fmt(b.lo) + ")");
    return std::max(b.lo, b.min_abs);
}

/// Bounds of sum_j p_j ln f_j for positive factors.
std::pair<double, double> log_sum_range(const ast::PowerProduct& p, BoundsMap& out);

Bounds infer(const ExprPtr& node, std::span<const Bounds> inputs, BoundsMap& out) {
    if (auto it = out.find(node.get()); it != out.end()) return it->second;
    const Bounds b = std::visit(
        [&](const auto& n) -> Bounds {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ast::Var>) {
                if (n.index >= inputs.size())
                    throw ShapeError("bounds: no bounds given for x" + std::to_string(n.index + 1));
                return checked(inputs[n.index], "input");
            } else if constexpr (std::is_same_v<T, ast::Const>) {
                return Bounds::interval(n.value, n.value);
            } else if constexpr (std::is_same_v<T, ast::LinComb>) {
                double lo = n.bias, hi = n.bias;
                for (std::size_t i = 0; i < n.terms.size(); ++i) {
                    const Bounds c = infer(n.terms[i], inputs, out);
                    const double a = n.coeffs[i] * c.lo, z = n.coeffs[i] * c.hi;
                    lo += std::min(a, z);
                    hi += std::max(a, z);
                }
                return checked(Bounds::interval(lo, hi), "lin");
            } else if constexpr (std::is_same_v<T, ast::Exp>) {
                const Bounds c = infer(n.child, inputs, out);
                return checked(Bounds::interval(std::exp(c.lo), std::exp(c.hi)), "exp");
            } else if constexpr (std::is_same_v<T, ast::Log>) {
                const Bounds c = infer(n.child, inputs, out);
                const double floor = positive_floor(c, "log");
                return checked(Bounds::interval(std::log(floor), std::log(c.hi)), "log");
            } else if constexpr (std::is_same_v<T, ast::PowerProduct>) {
                for (const auto& f : n.factors) infer(f, inputs, out);
                const auto [lo, hi] = log_sum_range(n, out);
                return checked(Bounds::interval(std::exp(lo), std::exp(hi)), "pow");
            } else {
                double lo = 0.0, hi = 0.0;
                for (std::size_t i = 0; i < n.products.size(); ++i) {
                    for (const auto& f : n.products[i].factors) infer(f, inputs, out);
                    const auto [slo, shi] = log_sum_range(n.products[i], out);
                    const double a = n.coeffs[i] * std::exp(slo), z = n.coeffs[i] * std::exp(shi);
                    lo += std::min(a, z);
                    hi += std::max(a, z);
                }
                return checked(Bounds::interval(lo, hi), "sum");
            }
        },
        node->node);
    out.emplace(node.get(), b);
    return b;
}

std::pair<double, double> log_sum_range(const ast::PowerProduct& p, BoundsMap& out) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < p.factors.size(); ++j) {
        const Bounds& f = out.at(p.factors[j].get());
        const double a = p.exponents[j] * std::log(positive_floor(f, "pow"));
        const double z = p.exponents[j] * std::log(f.hi);
        lo += std::min(a, z);
        hi += std::max(a, z);
    }
    return {lo, hi};
}

}  // namespace

BoundsMap infer_bounds(const ExprPtr& root, std::span<const Bounds> inputs) {
    for (const auto& b : inputs) {
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
            throw BoundError("input bounds must be finite with lo <= hi");
        if (b.min_abs < 0.0) throw BoundError("input min_abs must be >= 0");
    }
    BoundsMap out;
    infer(root, inputs, out);
    return out;
}

std::vector<Bounds> bounds_from_json(const nlohmann::json& j, std::size_t n_vars) {
    if (!j.is_object()) throw ParseError("bounds JSON must be an object keyed by variable name");
    std::vector<Bounds> out;
    for (std::size_t i = 0; i < n_vars; ++i) {
        const std::string key = "x" + std::to_string(i + 1);
        if (!j.contains(key)) throw SchemaError("bounds JSON: missing " + key);
        const auto& v = j.at(key);
        double lo = 0.0, hi = 0.0;
        std::optional<double> delta;
        try {
            if (v.is_array()) {
                if (v.size() != 2) throw ParseError("bounds for " + key + " must be [lo, hi]");
                lo = v[0].get<double>();
                hi = v[1].get<double>();
            } else {
                lo = v.at("lo").get<double>();
                hi = v.at("hi").get<double>();
                if (v.contains("delta")) delta = v.at("delta").get<double>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bounds for " + key + ": " + e.what());
        }
        if (!(lo <= hi)) throw BoundError("bounds for " + key + ": lo must not exceed hi");
        Bounds b = Bounds::interval(lo, hi);
        if (delta) {
            if (*delta < 0.0) throw BoundError("bounds for " + key + ": delta must be >= 0");
            b.min_abs = std::max(b.min_abs, *delta);
        }
        out.push_back(b);
    }
    return out;
}

nlohmann::json bounds_to_json(std::span<const Bounds> bounds) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < bounds.size(); ++i)
        j["x" + std::to_string(i + 1)] = {{"lo", bounds[i].lo}, {"hi", bounds[i].hi}, {"delta", bounds[i].min_abs}};
    return j;
}

}  // namespace combu
