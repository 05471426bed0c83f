#pragma once

#include "combu/expr.hpp"
#include "combu/rng.hpp"

// Random sums of power products over the first `dims` variables: 1 to 5
// terms, each using a random non-empty subset of the variables with real
// exponents in [-3, 3] and a positive coefficient.
inline combu::ExprPtr random_power_sum(combu::Rng& rng, std::size_t dims) {
    const std::size_t terms = 1 + rng.below(5);
    std::vector<double> coeffs;
    std::vector<combu::ast::PowerProduct> products;
    for (std::size_t t = 0; t < terms; ++t) {
        combu::ast::PowerProduct p;
        for (std::size_t j = 0; j < dims; ++j) {
            if (dims > 1 && rng.bernoulli(0.3)) continue;
            p.factors.push_back(combu::expr::var(j));
            p.exponents.push_back(rng.uniform(-3.0, 3.0));
        }
        if (p.factors.empty()) {
            p.factors.push_back(combu::expr::var(dims - 1));
            p.exponents.push_back(rng.uniform(-3.0, 3.0));
        }
        coeffs.push_back(rng.uniform(0.5, 5.0));
        products.push_back(std::move(p));
    }
    return combu::expr::poly_sum(std::move(coeffs), std::move(products));
}
