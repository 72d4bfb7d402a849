#include "pme/solver2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pme {

namespace {

struct CellGeometry {
    double area;
    // gradients of the three barycentric functions
    double gx[3];
    double gy[3];
};

CellGeometry geometry(const TriMesh& mesh, std::size_t c)
{
    const auto& t = mesh.cells()[c];
    const Point2& a = mesh.vertices()[t[0]];
    const Point2& b = mesh.vertices()[t[1]];
    const Point2& d = mesh.vertices()[t[2]];
    const double det = (b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y);
    if (!(det > 0.0)) {
        throw std::domain_error("degenerate or inverted triangle " + std::to_string(c));
    }
    CellGeometry g{0.5 * det, {}, {}};
    const Point2 p[3] = {a, b, d};
    for (int k = 0; k < 3; ++k) {
        const Point2& q1 = p[(k + 1) % 3];
        const Point2& q2 = p[(k + 2) % 3];
        g.gx[k] = (q1.y - q2.y) / det;
        g.gy[k] = (q2.x - q1.x) / det;
    }
    return g;
}

std::vector<std::vector<std::size_t>> interior_pattern(const TriMesh& mesh)
{
    std::vector<std::vector<std::size_t>> pat(mesh.num_interior());
    for (std::size_t k = 0; k < pat.size(); ++k) {
        const std::size_t v = mesh.interior_vertices()[k];
        pat[k].push_back(k);
        for (std::size_t w : mesh.neighbours()[v]) {
            const std::size_t kw = mesh.interior_index(w);
            if (kw != TriMesh::npos) {
                pat[k].push_back(kw);
            }
        }
    }
    return pat;
}

std::vector<std::vector<std::size_t>> vertex_pattern(const TriMesh& mesh)
{
    std::vector<std::vector<std::size_t>> pat(mesh.num_vertices());
    for (std::size_t v = 0; v < pat.size(); ++v) {
        pat[v].push_back(v);
        pat[v].insert(pat[v].end(), mesh.neighbours()[v].begin(), mesh.neighbours()[v].end());
    }
    return pat;
}

// Rows: interior vertices; columns: all vertices.
std::vector<std::vector<std::size_t>> coupling_pattern(const TriMesh& mesh)
{
    std::vector<std::vector<std::size_t>> pat(mesh.num_interior());
    for (std::size_t k = 0; k < pat.size(); ++k) {
        const std::size_t v = mesh.interior_vertices()[k];
        pat[k].push_back(v);
        pat[k].insert(pat[k].end(), mesh.neighbours()[v].begin(), mesh.neighbours()[v].end());
    }
    return pat;
}

} // namespace

std::pair<double, double> eval_psi_xy(const State2D& state, const TriLocator& locator, std::size_t vertex, Point2 p)
{
    const auto hit = locator.locate(p);
    if (!hit) {
        throw std::domain_error("eval_psi_xy: point lies outside the mesh");
    }
    const auto& t = state.mesh.cells()[hit->cell];
    int local = -1;
    for (int a = 0; a < 3; ++a) {
        if (t[a] == vertex) {
            local = a;
        }
    }
    if (local < 0) {
        return {0.0, 0.0};
    }
    const CellGeometry g = geometry(state.mesh, hit->cell);
    double drx = 0.0;
    double dry = 0.0;
    for (int a = 0; a < 3; ++a) {
        drx += state.nodal(t[a]) * g.gx[a];
        dry += state.nodal(t[a]) * g.gy[a];
    }
    const double phi = hit->bary[local];
    return {-drx * phi, -dry * phi};
}

System2D assemble_2d(const State2D& state, const PmeModel& model, const TriangleRule& rule)
{
    const TriMesh& mesh = state.mesh;
    const auto ipat = interior_pattern(mesh);
    const auto vpat = vertex_pattern(mesh);
    const auto cpat = coupling_pattern(mesh);
    const std::size_t nv = mesh.num_vertices();
    const std::size_t ni = mesh.num_interior();
    System2D sys{SparseSym(ni, ipat),
                 SparseSym(nv, vpat),
                 SparseMatrix(ni, nv, cpat),
                 SparseMatrix(ni, nv, cpat),
                 SparseMatrix(ni, nv, cpat),
                 SparseMatrix(ni, nv, cpat),
                 Vector(ni, 0.0),
                 Vector(nv, 0.0),
                 Vector(nv, 0.0)};

    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto& t = mesh.cells()[c];
        const CellGeometry g = geometry(mesh, c);
        const double r[3] = {state.nodal(t[0]), state.nodal(t[1]), state.nodal(t[2])};
        const double drx = r[0] * g.gx[0] + r[1] * g.gx[1] + r[2] * g.gx[2];
        const double dry = r[0] * g.gy[0] + r[1] * g.gy[1] + r[2] * g.gy[2];

        double mass[3][3] = {};
        double dens[3][3] = {};
        double rho_phi[3] = {};
        double p_phi[3] = {};
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& l = rule.points[q];
            const double w = g.area * rule.weights[q];
            const double rho_h = l[0] * r[0] + l[1] * r[1] + l[2] * r[2];
            const double p = model.df_extended(rho_h);
            for (int a = 0; a < 3; ++a) {
                rho_phi[a] += w * rho_h * l[a];
                p_phi[a] += w * p * l[a];
                for (int b = 0; b < 3; ++b) {
                    mass[a][b] += w * l[a] * l[b];
                    dens[a][b] += w * rho_h * l[a] * l[b];
                }
            }
        }

        for (int a = 0; a < 3; ++a) {
            const std::size_t i = t[a];
            const std::size_t ki = mesh.interior_index(i);
            // grad_x_i = int f'(rho_h) psi_{x,i}
            sys.grad_x[i] += -drx * p_phi[a];
            sys.grad_y[i] += -dry * p_phi[a];
            if (ki != TriMesh::npos) {
                sys.grad_rho[ki] += p_phi[a];
            }
            for (int b = 0; b < 3; ++b) {
                const std::size_t j = t[b];
                if (j >= i) {
                    sys.D.add(i, j, dens[a][b]);
                }
                if (ki == TriMesh::npos) {
                    continue;
                }
                sys.Bx.add(ki, j, -drx * mass[a][b]);
                sys.By.add(ki, j, -dry * mass[a][b]);
                sys.Ex.add(ki, j, g.gx[a] * rho_phi[b]);
                sys.Ey.add(ki, j, g.gy[a] * rho_phi[b]);
                const std::size_t kj = mesh.interior_index(j);
                if (kj != TriMesh::npos && kj >= ki) {
                    sys.M.add(ki, kj, mass[a][b]);
                }
            }
        }
    }
    return sys;
}

void SchemeConfig2D::validate() const
{
    if (!(tau > 0.0)) {
        throw std::invalid_argument("scheme: tau must be positive");
    }
    if (!(T >= 0.0)) {
        throw std::invalid_argument("scheme: T must be nonnegative");
    }
    if (quad_degree != 1 && quad_degree != 2 && quad_degree != 5) {
        throw std::invalid_argument("scheme: triangle quadrature degree must be 1, 2 or 5");
    }
    if (!(cg_tol > 0.0)) {
        throw std::invalid_argument("scheme: cg_tol must be positive");
    }
}

namespace {

Vector solve_sym(const SparseSym& a, std::span<const double> b, double tol, StepReport2D& report)
{
    if (std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; })) {
        return Vector(b.size(), 0.0);
    }
    CgResult res = solve_cg(a, b, tol);
    report.cg_iterations += res.iterations;
    report.residual = std::max(report.residual, res.relative_residual);
    return std::move(res.x);
}

Vector subtract(const SparseMatrix& b, const SparseMatrix& e, std::span<const double> x, bool transposed)
{
    Vector out = transposed ? b.multiply_transposed(x) : b.multiply(x);
    const Vector ex = transposed ? e.multiply_transposed(x) : e.multiply(x);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= ex[i];
    }
    return out;
}

} // namespace

StepResult2D explicit_step_2d(const State2D& state, const PmeModel& model, const SchemeConfig2D& cfg)
{
    const TriangleRule rule = triangle_rule(cfg.quad_degree);
    const System2D sys = assemble_2d(state, model, rule);
    StepReport2D rep;
    rep.lambda = solve_sym(sys.M, sys.grad_rho, cfg.cg_tol, rep);

    Vector rhs_x = subtract(sys.Bx, sys.Ex, rep.lambda, true);
    Vector rhs_y = subtract(sys.By, sys.Ey, rep.lambda, true);
    for (std::size_t i = 0; i < rhs_x.size(); ++i) {
        rhs_x[i] -= sys.grad_x[i];
        rhs_y[i] -= sys.grad_y[i];
    }
    rep.vx = solve_sym(sys.D, rhs_x, cfg.cg_tol, rep);
    rep.vy = solve_sym(sys.D, rhs_y, cfg.cg_tol, rep);

    Vector rhs_rho = subtract(sys.Bx, sys.Ex, rep.vx, false);
    const Vector ry = subtract(sys.By, sys.Ey, rep.vy, false);
    for (std::size_t i = 0; i < rhs_rho.size(); ++i) {
        rhs_rho[i] = -(rhs_rho[i] + ry[i]);
    }
    rep.drho = solve_sym(sys.M, rhs_rho, cfg.cg_tol, rep);

    std::vector<Point2> verts = state.mesh.vertices();
    for (std::size_t v = 0; v < verts.size(); ++v) {
        verts[v].x += cfg.tau * rep.vx[v];
        verts[v].y += cfg.tau * rep.vy[v];
    }
    std::vector<double> rho = state.rho;
    for (std::size_t k = 0; k < rho.size(); ++k) {
        rho[k] += cfg.tau * rep.drho[k];
    }
    State2D next(TriMesh(std::move(verts), state.mesh.cells(), state.mesh.boundary()), std::move(rho));

    rep.quality = mesh_quality(next.mesh);
    rep.min_rho = next.rho.empty() ? 0.0 : *std::min_element(next.rho.begin(), next.rho.end());
    rep.energy_before = discrete_energy(state, model, rule);
    rep.energy_after = rep.quality.tangled ? std::numeric_limits<double>::quiet_NaN()
                                           : discrete_energy(next, model, rule);
    rep.mass_before = total_mass(state);
    rep.mass_after = total_mass(next);
    rep.dissipation = 0.5 * (dot(rep.vx, sys.D.multiply(rep.vx)) + dot(rep.vy, sys.D.multiply(rep.vy)));
    rep.energy_rate = dot(sys.grad_rho, rep.drho) + dot(sys.grad_x, rep.vx) + dot(sys.grad_y, rep.vy);
    return {std::move(next), std::move(rep)};
}

RunResult2D run2d(const State2D& state0, const PmeModel& model, const SchemeConfig2D& cfg, const RunOptions2D& opts)
{
    cfg.validate();
    if (opts.record_every < 1) {
        throw std::invalid_argument("run2d: record_every must be at least 1");
    }
    if (cfg.T < opts.t0) {
        throw std::invalid_argument("run2d: final time precedes the start time");
    }
    const TriangleRule rule = triangle_rule(cfg.quad_degree);
    RunResult2D out{RunRecord{}, state0};
    RunRecord& rec = out.record;
    rec.initial_diameter = support_diameter(state0.mesh);
    const Vector mass0 = mass_vector(state0);

    auto make_row = [&](double t, const State2D& s, double energy) {
        DiagRow row;
        row.t = t;
        row.energy = energy;
        row.total_mass = total_mass(s);
        const Vector mv = mass_vector(s);
        for (std::size_t k = 0; k < mv.size(); ++k) {
            row.mass_vector_norm = std::max(row.mass_vector_norm, std::abs(mv[k] - mass0[k]));
        }
        fill_boundary_stats(row, state0.mesh, s.mesh);
        return row;
    };

    const MeshQuality q0 = mesh_quality(state0.mesh);
    DiagRow first = make_row(opts.t0, state0, q0.tangled ? std::numeric_limits<double>::quiet_NaN()
                                                         : discrete_energy(state0, model, rule));
    const bool negative0 = std::any_of(state0.rho.begin(), state0.rho.end(), [](double r) { return r < 0.0; });
    if (q0.tangled) {
        append_flag(first.flags, "tangled");
    }
    if (negative0) {
        append_flag(first.flags, "A2");
    }
    rec.rows.push_back(first);
    for (const auto& obs : opts.observers) {
        obs(out.final_state, first);
    }
    if (q0.tangled || (opts.strict && negative0)) {
        rec.stopped_early = true;
        rec.stop_reason = q0.tangled ? "initial mesh is tangled" : "initial density is negative";
        return out;
    }

    const double span = cfg.T - opts.t0;
    const auto n_steps = static_cast<long>(std::ceil(span / cfg.tau - 1e-9));
    SchemeConfig2D step_cfg = cfg;
    for (long n = 0; n < n_steps; ++n) {
        const double t_prev = opts.t0 + static_cast<double>(n) * cfg.tau;
        const double t_next = (n + 1 == n_steps) ? cfg.T : opts.t0 + static_cast<double>(n + 1) * cfg.tau;
        step_cfg.tau = t_next - t_prev;
        StepResult2D res = explicit_step_2d(out.final_state, model, step_cfg);
        out.final_state = std::move(res.state);
        const StepReport2D& rep = res.report;

        DiagRow row = make_row(t_next, out.final_state, rep.energy_after);
        row.dissipation = rep.dissipation;
        row.fp_iters = 1;
        const double two_phi = 2.0 * rep.dissipation;
        row.energy_identity_residual =
            two_phi > 0.0 ? std::abs(rep.energy_rate + two_phi) / two_phi : std::abs(rep.energy_rate);
        const bool negative = rep.min_rho < 0.0;
        if (rep.quality.tangled) {
            append_flag(row.flags, "tangled");
        }
        if (negative) {
            append_flag(row.flags, "A2");
        }
        const bool stop = rep.quality.tangled || (opts.strict && negative);
        if (stop || n + 1 == n_steps || !row.flags.empty() || (n + 1) % opts.record_every == 0) {
            rec.rows.push_back(row);
        }
        rec.steps = static_cast<int>(n + 1);
        for (const auto& obs : opts.observers) {
            obs(out.final_state, row);
        }
        if (stop) {
            rec.stopped_early = true;
            rec.stop_reason = (rep.quality.tangled ? "mesh tangled at t=" : "density negative at t=") +
                              std::to_string(t_next);
            break;
        }
    }
    return out;
}

} // namespace pme
