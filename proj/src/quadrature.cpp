#include "pme/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pme {

QuadratureRule gauss_legendre(int n)
{
    if (n < 1) {
        throw std::invalid_argument("gauss_legendre: need at least one point");
    }
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n starting from the Chebyshev-like guess; nodes on [-1, 1].
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map to [0, 1]; half weights
        rule.nodes[i] = 0.5 * (1.0 - z);
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + z);
        rule.weights[i] = 0.5 * w;
        rule.weights[n - 1 - i] = 0.5 * w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.5;
    }
    return rule;
}

TriangleRule triangle_rule(int degree)
{
    TriangleRule rule;
    rule.degree = degree;
    switch (degree) {
    case 1:
        rule.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
        rule.weights = {1.0};
        break;
    case 2:
        rule.points = {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                       {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                       {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}};
        rule.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        break;
    case 5: {
        // Radon's 7-point rule.
        const double s15 = std::sqrt(15.0);
        const double a1 = (6.0 - s15) / 21.0;
        const double b1 = (9.0 + 2.0 * s15) / 21.0;
        const double a2 = (6.0 + s15) / 21.0;
        const double b2 = (9.0 - 2.0 * s15) / 21.0;
        const double w0 = 9.0 / 40.0;
        const double w1 = (155.0 - s15) / 1200.0;
        const double w2 = (155.0 + s15) / 1200.0;
        rule.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                       {b1, a1, a1},
                       {a1, b1, a1},
                       {a1, a1, b1},
                       {b2, a2, a2},
                       {a2, b2, a2},
                       {a2, a2, b2}};
        rule.weights = {w0, w1, w1, w1, w2, w2, w2};
        break;
    }
    default:
        throw std::invalid_argument("triangle_rule: supported degrees are 1, 2 and 5");
    }
    return rule;
}

} // namespace pme
