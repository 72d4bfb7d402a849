#pragma once

#include "pme/diagnostics.hpp"
#include "pme/linalg.hpp"
#include "pme/mesh2d.hpp"
#include "pme/model.hpp"
#include "pme/quadrature.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace pme {

/// (psi_{x,i}, psi_{y,i}) at p: -grad(rho_h)|_K phi_i|_K on the cell K containing p.
/// Throws std::domain_error when p lies outside the mesh.
std::pair<double, double> eval_psi_xy(const State2D& state, const TriLocator& locator, std::size_t vertex, Point2 p);

/// Interior rows use the interior numbering of the mesh, vertex columns the global one.
struct System2D {
    SparseSym M;       ///< N_in x N_in
    SparseSym D;       ///< N x N
    SparseMatrix Bx;   ///< N_in x N
    SparseMatrix By;
    SparseMatrix Ex;
    SparseMatrix Ey;
    Vector grad_rho;   ///< N_in
    Vector grad_x;     ///< N
    Vector grad_y;     ///< N
};

/// Throws std::domain_error on a cell with non-positive signed area.
System2D assemble_2d(const State2D& state, const PmeModel& model, const TriangleRule& rule);

struct SchemeConfig2D {
    double tau = 1e-3;
    double T = 1.0;
    int quad_degree = 5;
    double cg_tol = 1e-12;

    void validate() const;
};

struct StepReport2D {
    Vector lambda;
    Vector vx;
    Vector vy;
    Vector drho;
    double energy_before = 0.0;
    double energy_after = 0.0;
    /// 1/2 int rho_h |v_h|^2 at the old state.
    double dissipation = 0.0;
    double mass_before = 0.0;
    double mass_after = 0.0;
    /// grad_rho . drho + grad_x . vx + grad_y . vy
    double energy_rate = 0.0;
    double residual = 0.0;
    int cg_iterations = 0;
    MeshQuality quality;
    double min_rho = 0.0;
};

struct StepResult2D {
    State2D state;
    StepReport2D report;
};

/// Four sequential solves (lambda, vx, vy, drho) and the vertex update.
StepResult2D explicit_step_2d(const State2D& state, const PmeModel& model, const SchemeConfig2D& cfg);

using Observer2D = std::function<void(const State2D&, const DiagRow&)>;

struct RunOptions2D {
    double t0 = 0.0;
    /// Also stop on negative densities; tangling always stops the run.
    bool strict = false;
    long record_every = 1;
    std::vector<Observer2D> observers;
};

struct RunResult2D {
    RunRecord record;
    State2D final_state;
};

RunResult2D run2d(const State2D& state0, const PmeModel& model, const SchemeConfig2D& cfg,
                  const RunOptions2D& opts = {});

} // namespace pme
