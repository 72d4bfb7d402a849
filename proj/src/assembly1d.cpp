#include "pme/assembly1d.hpp"

namespace pme {

const QuadratureRule& default_rule_1d()
{
    static const QuadratureRule rule = gauss_legendre(5);
    return rule;
}

namespace {

// Model-free assemblies only need the matrices; m = 2 keeps the energy terms finite.
const PmeModel& placeholder_model()
{
    static const PmeModel model(2.0, 1);
    return model;
}

} // namespace

System1D assemble_system(const State1D& state, const PmeModel& model, const QuadratureRule& rule, bool full_space)
{
    const Mesh1D& mesh = state.mesh;
    require_a1(mesh);
    const std::size_t n = mesh.cells();
    System1D sys{TriDiagMatrix(n - 1),
                 TriDiagMatrix(n + 1),
                 BandedRect(n - 1, n + 1, 1),
                 BandedRect(n - 1, n + 1, 1),
                 Vector(n - 1, 0.0),
                 Vector(n + 1, 0.0),
                 BandedRect(full_space ? n - 1 : 0, n + 1, 1),
                 BandedRect(full_space ? n + 1 : 0, n + 1, 0),
                 BandedRect(full_space ? n + 1 : 0, n + 1, 0)};

    auto interior = [n](std::size_t k) { return k >= 1 && k <= n - 1; };

    for (std::size_t c = 0; c < n; ++c) {
        const double h = mesh.cell_length(c);
        const double slope = cell_slope(state, c);
        const std::size_t node[2] = {c, c + 1};
        const double rho_node[2] = {state.nodal(c), state.nodal(c + 1)};
        const double dphi[2] = {-1.0 / h, 1.0 / h};

        double mass[2][2] = {};
        double dens[2][2] = {};
        double grad_phi[2] = {};
        for (int q = 0; q < rule.order(); ++q) {
            const double s = rule.nodes[q];
            const double w = h * rule.weights[q];
            const double phi[2] = {1.0 - s, s};
            const double rho_h = rho_node[0] * phi[0] + rho_node[1] * phi[1];
            const double p = model.df_extended(rho_h);
            for (int a = 0; a < 2; ++a) {
                grad_phi[a] += w * p * phi[a];
                for (int b = 0; b < 2; ++b) {
                    mass[a][b] += w * phi[a] * phi[b];
                    dens[a][b] += w * rho_h * phi[a] * phi[b];
                }
            }
        }
        // E integrand rho_h d_x phi_a phi_b: d_x phi_a is constant on the cell
        double rho_phi[2] = {};
        for (int q = 0; q < rule.order(); ++q) {
            const double s = rule.nodes[q];
            const double w = h * rule.weights[q];
            const double rho_h = rho_node[0] * (1.0 - s) + rho_node[1] * s;
            rho_phi[0] += w * rho_h * (1.0 - s);
            rho_phi[1] += w * rho_h * s;
        }

        for (int a = 0; a < 2; ++a) {
            const std::size_t i = node[a];
            sys.grad_x[i] += -slope * grad_phi[a];
            for (int b = 0; b < 2; ++b) {
                const std::size_t j = node[b];
                if (j == i) {
                    sys.D.diag[i] += dens[a][b];
                } else if (j == i + 1) {
                    sys.D.super[i] += dens[a][b];
                } else {
                    sys.D.sub[j] += dens[a][b];
                }
                // B_ij = int phi_i psi_j = -slope int phi_i phi_j
                const double b_ij = -slope * mass[a][b];
                const double e_ij = dphi[a] * rho_phi[b];
                if (interior(i)) {
                    sys.B.add(i - 1, j, b_ij);
                    sys.E.add(i - 1, j, e_ij);
                    if (full_space) {
                        sys.Mhat.add(i - 1, j, mass[a][b]);
                    }
                }
                if (full_space) {
                    sys.Bhat.add(i, j, b_ij);
                    sys.Ehat.add(i, j, e_ij);
                }
                if (interior(i) && interior(j)) {
                    const std::size_t r = i - 1;
                    const std::size_t col = j - 1;
                    if (r == col) {
                        sys.M.diag[r] += mass[a][b];
                    } else if (col == r + 1) {
                        sys.M.super[r] += mass[a][b];
                    } else {
                        sys.M.sub[col] += mass[a][b];
                    }
                }
            }
            if (interior(i)) {
                sys.grad_rho[i - 1] += grad_phi[a];
            }
        }
    }
    return sys;
}

TriDiagMatrix assemble_M(const Mesh1D& mesh, const QuadratureRule& rule)
{
    const State1D zero(mesh, std::vector<double>(mesh.cells() - 1, 0.0));
    return assemble_system(zero, placeholder_model(), rule).M;
}

TriDiagMatrix assemble_D(const State1D& state, const QuadratureRule& rule)
{
    return assemble_system(state, placeholder_model(), rule).D;
}

BandedRect assemble_B(const State1D& state, const QuadratureRule& rule)
{
    return assemble_system(state, placeholder_model(), rule).B;
}

BandedRect assemble_E(const State1D& state, const QuadratureRule& rule)
{
    return assemble_system(state, placeholder_model(), rule).E;
}

BandedRect assemble_Mhat(const Mesh1D& mesh, const QuadratureRule& rule)
{
    const State1D zero(mesh, std::vector<double>(mesh.cells() - 1, 0.0));
    return assemble_system(zero, placeholder_model(), rule, true).Mhat;
}

BandedRect assemble_Bhat(const State1D& state, const QuadratureRule& rule)
{
    return assemble_system(state, placeholder_model(), rule, true).Bhat;
}

BandedRect assemble_Ehat(const State1D& state, const QuadratureRule& rule)
{
    return assemble_system(state, placeholder_model(), rule, true).Ehat;
}

Vector grad_energy_rho(const State1D& state, const PmeModel& model, const QuadratureRule& rule)
{
    return assemble_system(state, model, rule).grad_rho;
}

Vector grad_energy_x(const State1D& state, const PmeModel& model, const QuadratureRule& rule)
{
    return assemble_system(state, model, rule).grad_x;
}

} // namespace pme
