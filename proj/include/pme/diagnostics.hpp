#pragma once

#include "pme/linalg.hpp"
#include "pme/mesh1d.hpp"
#include "pme/mesh2d.hpp"
#include "pme/model.hpp"
#include "pme/quadrature.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pme {

/// One line of a run's diagnostics table.
struct DiagRow {
    double t = 0.0;
    double energy = 0.0;
    /// Dissipation of the velocity that produced this row (0 for the initial row).
    double dissipation = 0.0;
    double total_mass = 0.0;
    /// ||M rho - (M rho)_0||_inf, measured against the initial row.
    double mass_vector_norm = 0.0;
    /// 1D end knots; NaN in 2D.
    double left = std::numeric_limits<double>::quiet_NaN();
    double right = std::numeric_limits<double>::quiet_NaN();
    /// Largest distance of a boundary vertex from its initial position.
    double boundary_displacement = 0.0;
    /// 2D boundary statistics around the centroid of the boundary vertices.
    double radius_mean = std::numeric_limits<double>::quiet_NaN();
    double radius_min = std::numeric_limits<double>::quiet_NaN();
    double radius_max = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t boundary_hash = 0;
    int fp_iters = 0;
    /// |dE reconstructed + 2 Phi| / max(|2 Phi|, tiny); only meaningful for explicit steps.
    double energy_identity_residual = 0.0;
    /// Space separated tokens such as "A1" "A2" "rank-deficient" "fallback" "tangled".
    std::string flags;
};

struct RunRecord {
    std::vector<DiagRow> rows;
    /// Diameter of the initial support (1D: b - a; 2D: largest boundary vertex distance).
    double initial_diameter = 0.0;
    bool stopped_early = false;
    std::string stop_reason;
    int steps = 0;
};

void append_flag(std::string& flags, const std::string& token);

double discrete_energy(const State1D& state, const PmeModel& model, const QuadratureRule& rule);
double dissipation(const State1D& state, std::span<const double> v, const QuadratureRule& rule);
/// Exact P1 integral of rho_h (trapezoid rule per cell).
double total_mass(const State1D& state);
/// M rho, the interior mass vector.
Vector mass_vector(const State1D& state);

double discrete_energy(const State2D& state, const PmeModel& model, const TriangleRule& rule);
double dissipation(const State2D& state, std::span<const double> vx, std::span<const double> vy,
                   const TriangleRule& rule);
double total_mass(const State2D& state);
Vector mass_vector(const State2D& state);

/// L2 distance between rho_h and exact over [a, b], both taken as zero outside their
/// support. Throws std::invalid_argument when [a, b] misses part of either support.
double l2_error(const State1D& state, const std::function<double(double)>& exact, const QuadratureRule& rule,
                double a, double b);

struct Box {
    double x0, x1, y0, y1;
};

/// 2D counterpart over a bounding box.
double l2_error(const State2D& state, const std::function<double(double, double)>& exact,
                const TriangleRule& rule, const Box& box);

/// Pairwise orders; dim 1 uses N as the cell count, dim 2 uses N as a vertex count.
std::vector<double> convergence_order(std::span<const double> errors, std::span<const double> ns, int dim);

/// First row time whose boundary displacement exceeds delta_frac * initial diameter.
std::optional<double> waiting_time_estimate(const RunRecord& record, double delta_frac = 0.0025);

/// Boundary tracking helpers shared by the 1D and 2D drivers.
double support_diameter(const TriMesh& mesh);
void fill_boundary_stats(DiagRow& row, const TriMesh& initial, const TriMesh& current);

} // namespace pme
