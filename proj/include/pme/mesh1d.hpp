#pragma once

#include "pme/quadrature.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pme {

/// Knots x_0, ..., x_N of a moving 1D partition. Ordering is not enforced here so that
/// an invalid state produced by a time step can still be inspected; see check_assumptions.
class Mesh1D {
public:
    explicit Mesh1D(std::vector<double> knots);

    /// Number of cells N.
    std::size_t cells() const { return knots_.size() - 1; }
    std::size_t size() const { return knots_.size(); }
    double operator[](std::size_t i) const { return knots_[i]; }
    double left() const { return knots_.front(); }
    double right() const { return knots_.back(); }
    /// Length of cell c, between knots c and c + 1.
    double cell_length(std::size_t c) const { return knots_[c + 1] - knots_[c]; }

    std::span<const double> knots() const { return knots_; }
    std::vector<double>& mutable_knots() { return knots_; }

    bool operator==(const Mesh1D&) const = default;

private:
    std::vector<double> knots_;
};

/// Piecewise-linear density with homogeneous values at both ends of the mesh.
struct State1D {
    State1D(Mesh1D mesh, std::vector<double> interior_rho);

    Mesh1D mesh;
    /// rho_1 .. rho_{N-1}
    std::vector<double> rho;

    /// Nodal value at knot i in [0, N]; zero at the end knots.
    double nodal(std::size_t i) const
    {
        return (i == 0 || i == mesh.cells()) ? 0.0 : rho[i - 1];
    }

    bool operator==(const State1D&) const = default;
};

/// Mesh validity (A1) and nonnegativity (A2) monitors.
struct AssumptionReport {
    bool a1_ok = true;
    bool a2_ok = true;
    double min_cell = 0.0;
    double min_rho = 0.0;

    bool ok() const { return a1_ok && a2_ok; }
};

AssumptionReport check_assumptions(const State1D& state);

/// Throws std::domain_error when the knots are not strictly increasing.
void require_a1(const Mesh1D& mesh);

double eval_rho(const State1D& state, double x);

/// Mesh derivative dρ_h/dx_i evaluated at x.
double eval_psi(const State1D& state, std::size_t i, double x);

/// Slope of ρ_h on cell c.
inline double cell_slope(const State1D& state, std::size_t c)
{
    return (state.nodal(c + 1) - state.nodal(c)) / state.mesh.cell_length(c);
}

double integrate_cell(const Mesh1D& mesh, std::size_t cell,
                      const std::function<double(double)>& integrand, const QuadratureRule& rule);

Mesh1D uniform_mesh(double a, double b, std::size_t n_cells);

/// Nodal interpolation of f on the interior knots.
State1D interpolate(const Mesh1D& mesh, const std::function<double(double)>& f);

struct BestFitOptions {
    int max_iter = 200;
    double tol = 1e-10;
    int quad_order = 8;
    /// Smallest allowed cell is min_gap_factor * (b - a) / N.
    double min_gap_factor = 1e-3;
};

struct BestFitResult {
    Mesh1D mesh;
    std::vector<double> coefficients;
    double l2_error = 0.0;
    /// L2 error after each accepted outer iteration, starting with the uniform fit.
    std::vector<double> history;
    int iterations = 0;
    bool converged = false;
};

/// Least-squares piecewise-linear fit with free interior knots and zero end values.
BestFitResult best_fit_mesh(const std::function<double(double)>& f, double a, double b,
                            std::size_t n_cells, const BestFitOptions& opts = {});

/// L2 projection of f onto the P1 space with zero end values for fixed knots.
/// Returns the interior coefficients.
std::vector<double> l2_projection(const Mesh1D& mesh, const std::function<double(double)>& f,
                                  const QuadratureRule& rule);

} // namespace pme
