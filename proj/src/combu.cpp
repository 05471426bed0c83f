#include "combu/combu.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "combu/error.hpp"

namespace combu {

ActivationAssignment ActivationAssignment::uniform(const Activation& act, std::size_t dim) {
    return ActivationAssignment{{act}, std::vector<std::uint32_t>(dim, 0)};
}

std::vector<std::size_t> ActivationAssignment::counts() const {
    std::vector<std::size_t> out(kinds.size(), 0);
    for (auto k : per_dim) ++out[k];
    return out;
}

Vector ActivationAssignment::mask(std::size_t k) const {
    Vector m(per_dim.size(), 0.0);
    for (std::size_t d = 0; d < per_dim.size(); ++d)
        if (per_dim[d] == k) m[d] = 1.0;
    return m;
}

void ActivationAssignment::validate() const {
    for (const auto& k : kinds) k.validate();
    for (auto k : per_dim)
        if (k >= kinds.size()) throw ShapeError("activation assignment: palette index out of range");
}

bool operator==(const ActivationAssignment& a, const ActivationAssignment& b) {
    if (a.dim() != b.dim()) return false;
    for (std::size_t d = 0; d < a.dim(); ++d)
        if (!(a.at(d) == b.at(d))) return false;
    return true;
}

Ratios default_ratios() {
    return {{Activation::relu(), 0.5}, {Activation::elu(1.0), 0.25}, {Activation::nlrelu(1.0), 0.25}};
}

void validate_ratios(const Ratios& ratios) {
    if (ratios.empty()) throw ParameterError("mixture needs at least one activation");
    double total = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const auto& e = ratios[i];
        e.kind.validate();
        if (!(e.ratio >= 0.0 && e.ratio <= 1.0))
            throw ParameterError("mixture ratio for " + to_string(e.kind) + " must lie in [0,1]");
        for (std::size_t j = 0; j < i; ++j)
            if (ratios[j].kind == e.kind) throw ParameterError("mixture lists " + to_string(e.kind) + " twice");
        total += e.ratio;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ParameterError("mixture ratios must sum to 1");
}

std::vector<std::size_t> dim_counts(const Ratios& ratios, std::size_t dim) {
    if (dim == 0) throw ParameterError("activation layer width must be positive");
    validate_ratios(ratios);

    std::vector<long long> counts;
    counts.reserve(ratios.size());
    long long total = 0;
    for (const auto& e : ratios) {
        // nearbyint under the default rounding mode rounds half to even.
        const auto c = static_cast<long long>(std::nearbyint(e.ratio * static_cast<double>(dim)));
        counts.push_back(c);
        total += c;
    }
    long long diff = static_cast<long long>(dim) - total;
    for (auto& c : counts) {
        if (diff == 0) break;
        if (diff > 0) {
            c += diff;
            diff = 0;
        } else {
            const long long change = std::min(c, -diff);
            c -= change;
            diff += change;
        }
    }
    if (diff != 0) throw InternalError("dim_counts: remainder not absorbed");
    return {counts.begin(), counts.end()};
}

ActivationAssignment assign_dims(const Ratios& ratios, std::size_t dim, Rng& rng) {
    const auto counts = dim_counts(ratios, dim);

    ActivationAssignment out;
    out.per_dim.assign(dim, 0);
    for (const auto& e : ratios) out.kinds.push_back(e.kind);

    std::vector<std::size_t> free(dim);
    for (std::size_t i = 0; i < dim; ++i) free[i] = i;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        // Partial Fisher-Yates: the first counts[k] slots become a uniform
        // sample without replacement; the rest stay unassigned, kept sorted.
        for (std::size_t i = 0; i < counts[k]; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(free.size() - i));
            std::swap(free[i], free[j]);
            out.per_dim[free[i]] = static_cast<std::uint32_t>(k);
        }
        free.erase(free.begin(), free.begin() + static_cast<std::ptrdiff_t>(counts[k]));
        std::sort(free.begin(), free.end());
    }
    return out;
}

CombUSpec make_combu(const Ratios& ratios, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    return CombUSpec{ratios, seed, assign_dims(ratios, dim, rng)};
}

CombUSpec default_combu(std::size_t dim, Rng& rng) {
    const std::uint64_t seed = rng.next_u64();
    return make_combu(default_ratios(), dim, seed);
}

Vector combu_forward(const ActivationAssignment& assignment, std::span<const double> x) {
    if (x.size() != assignment.dim())
        throw ShapeError("combu_forward: input width " + std::to_string(x.size()) + " vs layer width " +
                         std::to_string(assignment.dim()));
    Vector out(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) out[d] = act_eval(assignment.at(d), x[d]);
    return out;
}

void to_json(nlohmann::json& j, const ActivationAssignment& a) {
    j = nlohmann::json::array();
    for (std::size_t d = 0; d < a.dim(); ++d) j.push_back(to_string(a.at(d)));
}

void from_json(const nlohmann::json& j, ActivationAssignment& a) {
    if (!j.is_array()) throw ParseError("activation assignment must be an array of activation names");
    a = {};
    std::vector<std::string> names;
    for (const auto& item : j) {
        const auto name = item.get<std::string>();
        std::uint32_t idx = 0;
        while (idx < names.size() && names[idx] != name) ++idx;
        if (idx == names.size()) {
            names.push_back(name);
            a.kinds.push_back(parse_activation(name));
        }
        a.per_dim.push_back(idx);
    }
}

void to_json(nlohmann::json& j, const RatioEntry& e) {
    j = nlohmann::json{{"kind", to_string(e.kind)}, {"ratio", e.ratio}};
}

void from_json(const nlohmann::json& j, RatioEntry& e) {
    e.kind = parse_activation(j.at("kind").get<std::string>());
    e.ratio = j.at("ratio").get<double>();
}

void to_json(nlohmann::json& j, const CombUSpec& spec) {
    j = nlohmann::json{{"ratios", spec.ratios},
                       {"dim", spec.dim()},
                       {"assignment", spec.assignment},
                       {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, CombUSpec& spec) {
    spec.ratios = j.at("ratios").get<Ratios>();
    validate_ratios(spec.ratios);
    spec.seed = j.at("seed").get<std::uint64_t>();
    const auto dim = j.at("dim").get<std::size_t>();

    // Rebuild with the ratio order as palette so counts line up with kinds.
    spec.assignment = {};
    for (const auto& e : spec.ratios) spec.assignment.kinds.push_back(e.kind);
    const auto& names = j.at("assignment");
    if (names.size() != dim) throw ShapeError("CombU spec: assignment length differs from dim");
    for (const auto& item : names) {
        const Activation act = parse_activation(item.get<std::string>());
        std::uint32_t idx = 0;
        while (idx < spec.assignment.kinds.size() && !(spec.assignment.kinds[idx] == act)) ++idx;
        if (idx == spec.assignment.kinds.size())
            throw ParseError("CombU spec: assignment uses " + to_string(act) + " which is not in ratios");
        spec.assignment.per_dim.push_back(idx);
    }
}

}  // namespace combu
