#pragma once

#include "pme/linalg.hpp"
#include "pme/mesh1d.hpp"
#include "pme/model.hpp"

namespace pme {

/// 5-point Gauss-Legendre, the default for every 1D cell integral.
const QuadratureRule& default_rule_1d();

/// All matrices and energy gradients of the 1D algebraic system at one state.
/// Row/column indices follow the knot numbering: interior rows i = 1..N-1 are stored
/// at position i - 1; full-index rows and columns i = 0..N at position i.
struct System1D {
    TriDiagMatrix M;     ///< (N-1) x (N-1), int phi_i phi_j
    TriDiagMatrix D;     ///< (N+1) x (N+1), int rho_h phi_i phi_j
    BandedRect B;        ///< (N-1) x (N+1), int phi_i psi_j
    BandedRect E;        ///< (N-1) x (N+1), int rho_h d_x phi_i phi_j
    Vector grad_rho;     ///< N-1, int f'(rho_h) phi_i
    Vector grad_x;       ///< N+1, int f'(rho_h) psi_i
    // full multiplier space variants, filled only when requested
    BandedRect Mhat;     ///< (N-1) x (N+1)
    BandedRect Bhat;     ///< (N+1) x (N+1)
    BandedRect Ehat;     ///< (N+1) x (N+1)
};

/// Single pass over the cells. Requires (A1); throws std::domain_error otherwise.
System1D assemble_system(const State1D& state, const PmeModel& model, const QuadratureRule& rule,
                         bool full_space = false);

TriDiagMatrix assemble_M(const Mesh1D& mesh, const QuadratureRule& rule = default_rule_1d());
TriDiagMatrix assemble_D(const State1D& state, const QuadratureRule& rule = default_rule_1d());
BandedRect assemble_B(const State1D& state, const QuadratureRule& rule = default_rule_1d());
BandedRect assemble_E(const State1D& state, const QuadratureRule& rule = default_rule_1d());
BandedRect assemble_Mhat(const Mesh1D& mesh, const QuadratureRule& rule = default_rule_1d());
BandedRect assemble_Bhat(const State1D& state, const QuadratureRule& rule = default_rule_1d());
BandedRect assemble_Ehat(const State1D& state, const QuadratureRule& rule = default_rule_1d());

Vector grad_energy_rho(const State1D& state, const PmeModel& model, const QuadratureRule& rule = default_rule_1d());
Vector grad_energy_x(const State1D& state, const PmeModel& model, const QuadratureRule& rule = default_rule_1d());

} // namespace pme
