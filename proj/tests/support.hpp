#pragma once

// Shared generators and independent oracles for the test suite. Nothing here calls the
// library's assembly or solvers, so results can be compared against it.

#include "pme/linalg.hpp"
#include "pme/mesh1d.hpp"
#include "pme/mesh2d.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace pme::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

    /// Admissible 1D state: N cells with lengths in [0.2, 1.5], positive interior density.
    State1D state1d(int n_cells)
    {
        std::vector<double> x{uniform(-2.0, 2.0)};
        for (int i = 0; i < n_cells; ++i) {
            x.push_back(x.back() + uniform(0.2, 1.5));
        }
        std::vector<double> rho(static_cast<std::size_t>(n_cells - 1));
        for (double& r : rho) {
            r = uniform(0.1, 1.5);
        }
        return State1D(Mesh1D(std::move(x)), std::move(rho));
    }

    /// Admissible 2D state: disk mesh with jittered vertices and positive interior density.
    State2D state2d(int rings, double radius = 1.0)
    {
        TriMesh base = disk_mesh(radius, rings);
        std::vector<Point2> verts = base.vertices();
        const double h = radius / rings;
        for (Point2& p : verts) {
            p.x += 0.15 * h * uniform(-1.0, 1.0);
            p.y += 0.15 * h * uniform(-1.0, 1.0);
        }
        TriMesh mesh(std::move(verts), base.cells(), base.boundary());
        std::vector<double> rho(mesh.num_interior());
        for (double& r : rho) {
            r = uniform(0.1, 1.5);
        }
        return State2D(std::move(mesh), std::move(rho));
    }

private:
    std::mt19937_64 eng_;
};

inline Eigen::MatrixXd to_eigen(const DenseMatrix& a)
{
    Eigen::MatrixXd m(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a(r, c);
        }
    }
    return m;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

inline Eigen::VectorXd dense_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    return a.fullPivLu().solve(b);
}

/// Exact 1D oracles by Simpson's rule per cell (exact up to cubic integrands, which covers
/// every P1 product appearing in M, D, B and E).
struct Oracle1D {
    Eigen::MatrixXd M, D, B, E;

    explicit Oracle1D(const State1D& s)
    {
        const std::size_t N = s.mesh.cells();
        M = Eigen::MatrixXd::Zero(N - 1, N - 1);
        D = Eigen::MatrixXd::Zero(N + 1, N + 1);
        B = Eigen::MatrixXd::Zero(N - 1, N + 1);
        E = Eigen::MatrixXd::Zero(N - 1, N + 1);
        for (std::size_t c = 0; c < N; ++c) {
            const double xl = s.mesh[c];
            const double xr = s.mesh[c + 1];
            const double h = xr - xl;
            const double slope = (s.nodal(c + 1) - s.nodal(c)) / h;
            // hat functions restricted to the cell, indexed by global knot
            auto phi = [&](std::size_t k, double x) {
                if (k == c) {
                    return (xr - x) / h;
                }
                if (k == c + 1) {
                    return (x - xl) / h;
                }
                return 0.0;
            };
            auto dphi = [&](std::size_t k) { return k == c ? -1.0 / h : (k == c + 1 ? 1.0 / h : 0.0); };
            auto rho = [&](double x) { return s.nodal(c) * phi(c, x) + s.nodal(c + 1) * phi(c + 1, x); };
            auto simpson = [&](auto&& g) {
                return h / 6.0 * (g(xl) + 4.0 * g(0.5 * (xl + xr)) + g(xr));
            };
            for (std::size_t i : {c, c + 1}) {
                for (std::size_t j : {c, c + 1}) {
                    D(i, j) += simpson([&](double x) { return rho(x) * phi(i, x) * phi(j, x); });
                    if (i == 0 || i == N) {
                        continue;
                    }
                    // psi_j = -slope * phi_j on this cell
                    B(i - 1, j) += simpson([&](double x) { return -slope * phi(i, x) * phi(j, x); });
                    E(i - 1, j) += simpson([&](double x) { return rho(x) * dphi(i) * phi(j, x); });
                    if (j != 0 && j != N) {
                        M(i - 1, j - 1) += simpson([&](double x) { return phi(i, x) * phi(j, x); });
                    }
                }
            }
        }
    }
};

/// Integral over triangle K of l1^a l2^b l3^c = 2|K| a! b! c! / (a + b + c + 2)!.
inline double bary_monomial(double area, int a, int b, int c)
{
    auto fact = [](int n) {
        double f = 1.0;
        for (int k = 2; k <= n; ++k) {
            f *= k;
        }
        return f;
    };
    return 2.0 * area * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
}

/// Exact 2D oracles from barycentric monomial integrals.
struct Oracle2D {
    Eigen::MatrixXd M, D, Bx, By, Ex, Ey;

    explicit Oracle2D(const State2D& s)
    {
        const TriMesh& mesh = s.mesh;
        const std::size_t n = mesh.num_vertices();
        const std::size_t ni = mesh.num_interior();
        M = Eigen::MatrixXd::Zero(ni, ni);
        D = Eigen::MatrixXd::Zero(n, n);
        Bx = Eigen::MatrixXd::Zero(ni, n);
        By = Eigen::MatrixXd::Zero(ni, n);
        Ex = Eigen::MatrixXd::Zero(ni, n);
        Ey = Eigen::MatrixXd::Zero(ni, n);
        for (const Cell& t : mesh.cells()) {
            const Point2 p[3] = {mesh.vertices()[t[0]], mesh.vertices()[t[1]], mesh.vertices()[t[2]]};
            const double det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
            const double area = 0.5 * det;
            double gx[3], gy[3];
            for (int a = 0; a < 3; ++a) {
                const Point2& q1 = p[(a + 1) % 3];
                const Point2& q2 = p[(a + 2) % 3];
                gx[a] = (q1.y - q2.y) / det;
                gy[a] = (q2.x - q1.x) / det;
            }
            double rx = 0.0, ry = 0.0;
            for (int a = 0; a < 3; ++a) {
                rx += s.nodal(t[a]) * gx[a];
                ry += s.nodal(t[a]) * gy[a];
            }
            // integral of phi_a phi_b and of rho phi_a phi_b
            auto pp = [&](int a, int b) {
                int e[3] = {0, 0, 0};
                ++e[a];
                ++e[b];
                return bary_monomial(area, e[0], e[1], e[2]);
            };
            auto rpp = [&](int a, int b) {
                double sum = 0.0;
                for (int k = 0; k < 3; ++k) {
                    int e[3] = {0, 0, 0};
                    ++e[a];
                    ++e[b];
                    ++e[k];
                    sum += s.nodal(t[k]) * bary_monomial(area, e[0], e[1], e[2]);
                }
                return sum;
            };
            auto rp = [&](int b) {
                double sum = 0.0;
                for (int k = 0; k < 3; ++k) {
                    int e[3] = {0, 0, 0};
                    ++e[b];
                    ++e[k];
                    sum += s.nodal(t[k]) * bary_monomial(area, e[0], e[1], e[2]);
                }
                return sum;
            };
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    const std::size_t va = t[a];
                    const std::size_t vb = t[b];
                    D(va, vb) += rpp(a, b);
                    const std::size_t ia = mesh.interior_index(va);
                    if (ia == TriMesh::npos) {
                        continue;
                    }
                    Bx(ia, vb) += -rx * pp(a, b);
                    By(ia, vb) += -ry * pp(a, b);
                    Ex(ia, vb) += gx[a] * rp(b);
                    Ey(ia, vb) += gy[a] * rp(b);
                    const std::size_t ib = mesh.interior_index(vb);
                    if (ib != TriMesh::npos) {
                        M(ia, ib) += pp(a, b);
                    }
                }
            }
        }
    }
};

} // namespace pme::testing
