#pragma once

#include <cmath>
#include <vector>

namespace grusin {

/// Gauss-Legendre rule mapped to [0,1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Rule of the given order (cached for repeated use).
[[nodiscard]] const GaussRule& gauss_legendre(int order);

/// Integral over [0,1] of u^(-p) g(u) for p < 1 and smooth g, via u = v^(1/(1-p)).
template <class G>
[[nodiscard]] double integrate_power_singular(double p, G&& g, int order)
{
    const GaussRule& rule = gauss_legendre(order);
    const double k = 1.0 / (1.0 - p);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double u = std::pow(rule.nodes[q], k);
        acc += rule.weights[q] * g(u);
    }
    return k * acc;
}

}  // namespace grusin
