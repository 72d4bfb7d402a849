#include "pme/mesh1d.hpp"

#include "pme/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pme {

Mesh1D::Mesh1D(std::vector<double> knots) : knots_(std::move(knots))
{
    if (knots_.size() < 3) {
        throw std::domain_error("Mesh1D: need at least two cells (three knots)");
    }
}

State1D::State1D(Mesh1D mesh_, std::vector<double> interior_rho) : mesh(std::move(mesh_)), rho(std::move(interior_rho))
{
    if (rho.size() + 1 != mesh.cells()) {
        throw std::invalid_argument("State1D: expected " + std::to_string(mesh.cells() - 1) +
                                    " interior values, got " + std::to_string(rho.size()));
    }
}

AssumptionReport check_assumptions(const State1D& state)
{
    AssumptionReport rep;
    rep.min_cell = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < state.mesh.cells(); ++c) {
        rep.min_cell = std::min(rep.min_cell, state.mesh.cell_length(c));
    }
    rep.a1_ok = rep.min_cell > 0.0;
    rep.min_rho = state.rho.empty() ? 0.0 : *std::min_element(state.rho.begin(), state.rho.end());
    rep.a2_ok = rep.min_rho >= 0.0;
    return rep;
}

void require_a1(const Mesh1D& mesh)
{
    for (std::size_t c = 0; c < mesh.cells(); ++c) {
        if (!(mesh.cell_length(c) > 0.0)) {
            throw std::domain_error("mesh violates (A1): knots " + std::to_string(c) + " and " +
                                    std::to_string(c + 1) + " are not increasing");
        }
    }
}

namespace {

// Cell c with x_c < x <= x_{c+1}; the first cell also owns x_0.
std::size_t locate_cell(const Mesh1D& mesh, double x)
{
    if (x < mesh.left() || x > mesh.right()) {
        throw std::domain_error("point " + std::to_string(x) + " lies outside the mesh");
    }
    const auto k = mesh.knots();
    const auto it = std::lower_bound(k.begin(), k.end(), x);
    std::size_t c = static_cast<std::size_t>(it - k.begin());
    c = c == 0 ? 0 : c - 1;
    return std::min(c, mesh.cells() - 1);
}

} // namespace

double eval_rho(const State1D& state, double x)
{
    const std::size_t c = locate_cell(state.mesh, x);
    const double s = (x - state.mesh[c]) / state.mesh.cell_length(c);
    return state.nodal(c) * (1.0 - s) + state.nodal(c + 1) * s;
}

double eval_psi(const State1D& state, std::size_t i, double x)
{
    const std::size_t n = state.mesh.cells();
    if (i > n) {
        throw std::out_of_range("eval_psi: knot index " + std::to_string(i) + " out of range");
    }
    const std::size_t c = locate_cell(state.mesh, x);
    const double s = (x - state.mesh[c]) / state.mesh.cell_length(c);
    // psi_i = -(slope of rho_h) * phi_i on the cells adjacent to knot i
    if (c + 1 == i) {
        return -cell_slope(state, c) * s;
    }
    if (c == i) {
        return -cell_slope(state, c) * (1.0 - s);
    }
    return 0.0;
}

double integrate_cell(const Mesh1D& mesh, std::size_t cell, const std::function<double(double)>& integrand,
                      const QuadratureRule& rule)
{
    if (cell >= mesh.cells()) {
        throw std::out_of_range("integrate_cell: cell index out of range");
    }
    const double a = mesh[cell];
    const double h = mesh.cell_length(cell);
    double s = 0.0;
    for (int q = 0; q < rule.order(); ++q) {
        s += rule.weights[q] * integrand(a + h * rule.nodes[q]);
    }
    return h * s;
}

Mesh1D uniform_mesh(double a, double b, std::size_t n_cells)
{
    if (!(a < b) || n_cells < 2) {
        throw std::domain_error("uniform_mesh: need a < b and at least two cells");
    }
    std::vector<double> k(n_cells + 1);
    const double h = (b - a) / static_cast<double>(n_cells);
    for (std::size_t i = 0; i <= n_cells; ++i) {
        k[i] = a + h * static_cast<double>(i);
    }
    k.back() = b;
    return Mesh1D(std::move(k));
}

State1D interpolate(const Mesh1D& mesh, const std::function<double(double)>& f)
{
    std::vector<double> rho(mesh.cells() - 1);
    for (std::size_t i = 1; i < mesh.cells(); ++i) {
        rho[i - 1] = f(mesh[i]);
    }
    return State1D(mesh, std::move(rho));
}

std::vector<double> l2_projection(const Mesh1D& mesh, const std::function<double(double)>& f,
                                  const QuadratureRule& rule)
{
    require_a1(mesh);
    const std::size_t n = mesh.cells();
    TriDiagMatrix m(n - 1);
    std::vector<double> rhs(n - 1, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        const double h = mesh.cell_length(c);
        double bl = 0.0;
        double br = 0.0;
        for (int q = 0; q < rule.order(); ++q) {
            const double s = rule.nodes[q];
            const double fv = f(mesh[c] + h * s);
            bl += rule.weights[q] * fv * (1.0 - s);
            br += rule.weights[q] * fv * s;
        }
        // cell c couples knots c and c+1; interior index = knot - 1
        if (c >= 1) {
            m.diag[c - 1] += h / 3.0;
            rhs[c - 1] += h * bl;
        }
        if (c + 1 <= n - 1) {
            m.diag[c] += h / 3.0;
            rhs[c] += h * br;
        }
        if (c >= 1 && c + 1 <= n - 1) {
            m.super[c - 1] += h / 6.0;
            m.sub[c - 1] += h / 6.0;
        }
    }
    return solve_tridiag_spd(m, rhs);
}

namespace {

// Reference-cell quadrature for the fit: plain Gauss inside, geometrically graded towards
// the support ends, where the target typically behaves like a fractional power of the
// distance to the free boundary.
struct FitQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

FitQuadrature graded_rule(const QuadratureRule& base, bool towards_left)
{
    constexpr int levels = 40;
    FitQuadrature q;
    double hi = 1.0;
    for (int l = 0; l < levels; ++l) {
        const double lo = (l + 1 == levels) ? 0.0 : 0.5 * hi;
        for (int k = 0; k < base.order(); ++k) {
            const double s = lo + (hi - lo) * base.nodes[k];
            q.nodes.push_back(towards_left ? s : 1.0 - s);
            q.weights.push_back((hi - lo) * base.weights[k]);
        }
        hi = lo;
    }
    return q;
}

struct FitRules {
    FitQuadrature inner;
    FitQuadrature first;
    FitQuadrature last;

    const FitQuadrature& for_cell(std::size_t c, std::size_t n) const
    {
        return c == 0 ? first : (c + 1 == n ? last : inner);
    }
};

FitRules make_fit_rules(const QuadratureRule& base)
{
    FitRules r;
    r.inner.nodes = base.nodes;
    r.inner.weights = base.weights;
    r.first = graded_rule(base, true);
    r.last = graded_rule(base, false);
    return r;
}

struct FitSample {
    std::vector<double> coeffs;
    double err2 = 0.0;
    std::vector<double> cell_err;
};

FitSample fit_on_knots(std::span<const double> x, const std::function<double(double)>& f, const FitRules& rules)
{
    const std::size_t n = x.size() - 1;
    TriDiagMatrix m(n - 1);
    std::vector<double> rhs(n - 1, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        const double h = x[c + 1] - x[c];
        const FitQuadrature& q = rules.for_cell(c, n);
        double bl = 0.0;
        double br = 0.0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            const double s = q.nodes[k];
            const double fv = f(x[c] + h * s);
            bl += q.weights[k] * fv * (1.0 - s);
            br += q.weights[k] * fv * s;
        }
        if (c >= 1) {
            m.diag[c - 1] += h / 3.0;
            rhs[c - 1] += h * bl;
        }
        if (c + 1 <= n - 1) {
            m.diag[c] += h / 3.0;
            rhs[c] += h * br;
        }
        if (c >= 1 && c + 1 <= n - 1) {
            m.super[c - 1] += h / 6.0;
            m.sub[c - 1] += h / 6.0;
        }
    }
    FitSample out;
    out.coeffs = solve_tridiag_spd(m, rhs);
    out.cell_err.assign(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        const double h = x[c + 1] - x[c];
        const double cl = c == 0 ? 0.0 : out.coeffs[c - 1];
        const double cr = c + 1 == n ? 0.0 : out.coeffs[c];
        const FitQuadrature& q = rules.for_cell(c, n);
        double e = 0.0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            const double s = q.nodes[k];
            const double d = f(x[c] + h * s) - (cl * (1.0 - s) + cr * s);
            e += q.weights[k] * d * d;
        }
        out.cell_err[c] = h * e;
        out.err2 += h * e;
    }
    return out;
}

// dE/dx_i at the optimal coefficients: 2 int (u - f) du/dx_i with du/dx_i = -u' phi_i.
std::vector<double> fit_gradient(std::span<const double> x, const std::vector<double>& coeffs,
                                 const std::function<double(double)>& f, const FitRules& rules)
{
    const std::size_t n = x.size() - 1;
    std::vector<double> g(n + 1, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        const double h = x[c + 1] - x[c];
        const double cl = c == 0 ? 0.0 : coeffs[c - 1];
        const double cr = c + 1 == n ? 0.0 : coeffs[c];
        const double slope = (cr - cl) / h;
        const FitQuadrature& q = rules.for_cell(c, n);
        double il = 0.0;
        double ir = 0.0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            const double s = q.nodes[k];
            const double r = (cl * (1.0 - s) + cr * s) - f(x[c] + h * s);
            il += q.weights[k] * r * (1.0 - s);
            ir += q.weights[k] * r * s;
        }
        g[c] += -2.0 * slope * h * il;
        g[c + 1] += -2.0 * slope * h * ir;
    }
    g.front() = 0.0;
    g.back() = 0.0;
    return g;
}

void enforce_spacing(std::vector<double>& x, double min_gap)
{
    const std::size_t n = x.size() - 1;
    for (std::size_t i = 1; i < n; ++i) {
        x[i] = std::max(x[i], x[i - 1] + min_gap);
    }
    for (std::size_t i = n - 1; i >= 1; --i) {
        x[i] = std::min(x[i], x[i + 1] - min_gap);
    }
}

// Redistribute knots so that each new cell carries an equal share of the monitor
// (e_c^2 / h_c^5)^(1/5), which approximates |f''|^(2/5) for a smooth target.
std::vector<double> equidistribute(std::span<const double> xk, const std::vector<double>& cell_err)
{
    const std::size_t n = xk.size() - 1;
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        const double h = xk[c + 1] - xk[c];
        w[c] = std::pow(std::max(cell_err[c], 0.0) / std::pow(h, 5.0), 0.2);
        total += w[c] * h;
    }
    const double length = xk[n] - xk[0];
    const double floor = 0.1 * total / length;
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        w[c] += floor;
        cum[c + 1] = cum[c] + w[c] * (xk[c + 1] - xk[c]);
    }
    std::vector<double> x(n + 1);
    x[0] = xk[0];
    x[n] = xk[n];
    std::size_t c = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const double target = cum[n] * static_cast<double>(i) / static_cast<double>(n);
        while (c + 1 < n && cum[c + 1] < target) {
            ++c;
        }
        x[i] = xk[c] + (target - cum[c]) / w[c];
    }
    return x;
}

// Knots from unconstrained log-width variables: h_c = gap + (L - n gap) softmax(z)_c.
std::vector<double> knots_from_z(const std::vector<double>& z, double a, double b, double gap)
{
    const std::size_t n = z.size();
    const double zmax = *std::max_element(z.begin(), z.end());
    std::vector<double> e(n);
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        e[c] = std::exp(z[c] - zmax);
        sum += e[c];
    }
    const double free_length = (b - a) - static_cast<double>(n) * gap;
    std::vector<double> x(n + 1);
    x[0] = a;
    for (std::size_t c = 0; c < n; ++c) {
        x[c + 1] = x[c] + gap + free_length * e[c] / sum;
    }
    x[n] = b;
    return x;
}

std::vector<double> z_from_knots(std::span<const double> x, double gap)
{
    std::vector<double> z(x.size() - 1);
    for (std::size_t c = 0; c < z.size(); ++c) {
        z[c] = std::log(std::max(x[c + 1] - x[c] - gap, 1e-300));
    }
    return z;
}

// Chain rule from dE/dx (interior knots) to dE/dz.
std::vector<double> gradient_in_z(const std::vector<double>& gx, std::span<const double> x, double gap)
{
    const std::size_t n = x.size() - 1;
    // dE/dh_c = sum_{i > c} dE/dx_i, with x_n fixed by the constraint
    std::vector<double> gh(n, 0.0);
    double acc = 0.0;
    for (std::size_t c = n; c-- > 0;) {
        acc += gx[c + 1];
        gh[c] = acc;
    }
    double free_length = 0.0;
    std::vector<double> share(n);
    for (std::size_t c = 0; c < n; ++c) {
        share[c] = x[c + 1] - x[c] - gap;
        free_length += share[c];
    }
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        share[c] /= free_length;
        mean += share[c] * gh[c];
    }
    std::vector<double> gz(n);
    for (std::size_t c = 0; c < n; ++c) {
        gz[c] = free_length * share[c] * (gh[c] - mean);
    }
    return gz;
}

} // namespace

BestFitResult best_fit_mesh(const std::function<double(double)>& f, double a, double b, std::size_t n_cells,
                            const BestFitOptions& opts)
{
    if (!(a < b) || n_cells < 2) {
        throw std::domain_error("best_fit_mesh: need a < b and at least two cells");
    }
    const FitRules rules = make_fit_rules(gauss_legendre(opts.quad_order));
    if (!(opts.min_gap_factor > 0.0 && opts.min_gap_factor < 1.0)) {
        throw std::domain_error("best_fit_mesh: min_gap_factor must lie in (0, 1)");
    }
    const double min_gap = opts.min_gap_factor * (b - a) / static_cast<double>(n_cells);

    BestFitResult res{uniform_mesh(a, b, n_cells), {}, 0.0, {}, 0, false};
    std::vector<double> x(res.mesh.knots().begin(), res.mesh.knots().end());
    FitSample cur = fit_on_knots(x, f, rules);
    res.history.push_back(std::sqrt(cur.err2));
    if (cur.err2 == 0.0) {
        res.coefficients = cur.coeffs;
        res.converged = true;
        return res;
    }

    auto accept = [&](std::vector<double> knots, FitSample sample) {
        x = std::move(knots);
        cur = std::move(sample);
        res.history.push_back(std::sqrt(cur.err2));
        ++res.iterations;
    };

    // Phase 1: error equidistribution, accepted only while it lowers the fit error.
    while (res.iterations < opts.max_iter) {
        const std::vector<double> target = equidistribute(x, cur.cell_err);
        bool improved = false;
        for (double omega = 1.0; omega > 0.05; omega *= 0.5) {
            std::vector<double> trial = x;
            for (std::size_t i = 1; i < n_cells; ++i) {
                trial[i] += omega * (target[i] - trial[i]);
            }
            enforce_spacing(trial, min_gap);
            FitSample s = fit_on_knots(trial, f, rules);
            if (s.err2 < cur.err2 * (1.0 - 1e-3)) {
                accept(std::move(trial), std::move(s));
                improved = true;
                break;
            }
        }
        if (!improved) {
            break;
        }
    }

    // Phase 2: quasi-Newton (BFGS) descent on the log cell widths with the exact gradient
    // of the projected error; every accepted iterate satisfies the Armijo condition.
    // Cells left at the floor by phase 1 would have a vanishing gradient in z.
    enforce_spacing(x, 2.0 * min_gap);
    std::vector<double> z = z_from_knots(x, min_gap);
    x = knots_from_z(z, a, b, min_gap);
    cur = fit_on_knots(x, f, rules);
    std::vector<double> g = gradient_in_z(fit_gradient(x, cur.coeffs, f, rules), x, min_gap);
    const std::size_t nz = z.size();
    std::vector<double> hinv(nz * nz, 0.0);
    for (std::size_t i = 0; i < nz; ++i) {
        hinv[i * nz + i] = 1.0;
    }
    bool scaled = false;
    while (res.iterations < opts.max_iter) {
        std::vector<double> d(nz, 0.0);
        for (std::size_t i = 0; i < nz; ++i) {
            for (std::size_t j = 0; j < nz; ++j) {
                d[i] -= hinv[i * nz + j] * g[j];
            }
        }
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            // lost descent: restart from steepest descent
            std::fill(hinv.begin(), hinv.end(), 0.0);
            for (std::size_t i = 0; i < nz; ++i) {
                hinv[i * nz + i] = 1.0;
                d[i] = -g[i];
            }
            scaled = false;
            slope = dot(g, d);
            if (!(slope < 0.0)) {
                res.converged = true;
                break;
            }
        }
        double step = 1.0;
        const double dmax = norm_inf(d);
        if (!scaled && dmax > 0.5) {
            step = 0.5 / dmax;
        }
        bool found = false;
        std::vector<double> z_new(nz);
        std::vector<double> x_new;
        FitSample s;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < nz; ++i) {
                z_new[i] = z[i] + step * d[i];
            }
            x_new = knots_from_z(z_new, a, b, min_gap);
            s = fit_on_knots(x_new, f, rules);
            if (s.err2 <= cur.err2 + 1e-4 * step * slope && s.err2 < cur.err2) {
                found = true;
                break;
            }
            step *= 0.5;
        }
        if (!found) {
            res.converged = true;
            break;
        }
        const double rel = (cur.err2 - s.err2) / cur.err2;
        std::vector<double> g_new = gradient_in_z(fit_gradient(x_new, s.coeffs, f, rules), x_new, min_gap);
        std::vector<double> sv(nz);
        std::vector<double> yv(nz);
        for (std::size_t i = 0; i < nz; ++i) {
            sv[i] = z_new[i] - z[i];
            yv[i] = g_new[i] - g[i];
        }
        const double sy = dot(sv, yv);
        if (sy > 1e-300) {
            if (!scaled) {
                const double gamma = sy / dot(yv, yv);
                for (std::size_t i = 0; i < nz; ++i) {
                    hinv[i * nz + i] = gamma;
                }
                scaled = true;
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            std::vector<double> hy(nz, 0.0);
            for (std::size_t i = 0; i < nz; ++i) {
                for (std::size_t j = 0; j < nz; ++j) {
                    hy[i] += hinv[i * nz + j] * yv[j];
                }
            }
            const double yhy = dot(yv, hy);
            for (std::size_t i = 0; i < nz; ++i) {
                for (std::size_t j = 0; j < nz; ++j) {
                    hinv[i * nz + j] += -rho * (sv[i] * hy[j] + hy[i] * sv[j]) + (rho * rho * yhy + rho) * sv[i] * sv[j];
                }
            }
        }
        z = std::move(z_new);
        g = std::move(g_new);
        accept(std::move(x_new), std::move(s));
        if (rel < opts.tol) {
            res.converged = true;
            break;
        }
    }
    res.mesh = Mesh1D(x);
    res.coefficients = cur.coeffs;
    res.l2_error = std::sqrt(cur.err2);
    return res;
}

} // namespace pme
