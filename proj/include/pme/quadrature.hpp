#pragma once

#include <array>
#include <vector>

namespace pme {

/// Gauss-Legendre rule on the reference interval [0, 1]; weights sum to 1.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    int order() const { return static_cast<int>(nodes.size()); }
};

/// n-point Gauss-Legendre rule, exact for polynomials of degree <= 2n - 1.
QuadratureRule gauss_legendre(int n);

/// Symmetric rule on the reference triangle in barycentric coordinates; weights sum to 1
/// so that the integral over a triangle K is |K| * sum(w * g).
struct TriangleRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int degree = 0;
};

/// Supported degrees: 1 (centroid), 2 (3-point), 5 (7-point).
TriangleRule triangle_rule(int degree = 5);

} // namespace pme
