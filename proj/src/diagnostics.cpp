#include "pme/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pme {

void append_flag(std::string& flags, const std::string& token)
{
    if (flags.find(token) != std::string::npos) {
        return;
    }
    if (!flags.empty()) {
        flags += ' ';
    }
    flags += token;
}

double discrete_energy(const State1D& state, const PmeModel& model, const QuadratureRule& rule)
{
    double e = 0.0;
    for (std::size_t c = 0; c < state.mesh.cells(); ++c) {
        const double h = state.mesh.cell_length(c);
        const double r0 = state.nodal(c);
        const double r1 = state.nodal(c + 1);
        for (int q = 0; q < rule.order(); ++q) {
            const double s = rule.nodes[q];
            e += h * rule.weights[q] * model.f_extended(r0 * (1.0 - s) + r1 * s);
        }
    }
    return e;
}

double dissipation(const State1D& state, std::span<const double> v, const QuadratureRule& rule)
{
    if (v.size() != state.mesh.size()) {
        throw std::invalid_argument("dissipation: velocity must have one entry per knot");
    }
    double phi = 0.0;
    for (std::size_t c = 0; c < state.mesh.cells(); ++c) {
        const double h = state.mesh.cell_length(c);
        const double r0 = state.nodal(c);
        const double r1 = state.nodal(c + 1);
        for (int q = 0; q < rule.order(); ++q) {
            const double s = rule.nodes[q];
            const double vh = v[c] * (1.0 - s) + v[c + 1] * s;
            phi += h * rule.weights[q] * (r0 * (1.0 - s) + r1 * s) * vh * vh;
        }
    }
    return 0.5 * phi;
}

double total_mass(const State1D& state)
{
    double mass = 0.0;
    for (std::size_t c = 0; c < state.mesh.cells(); ++c) {
        mass += 0.5 * (state.nodal(c) + state.nodal(c + 1)) * state.mesh.cell_length(c);
    }
    return mass;
}

Vector mass_vector(const State1D& state)
{
    const std::size_t n = state.mesh.cells();
    Vector out(n - 1, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double hl = state.mesh.cell_length(i - 1);
        const double hr = state.mesh.cell_length(i);
        out[i - 1] = hl / 6.0 * state.nodal(i - 1) + (hl + hr) / 3.0 * state.nodal(i) + hr / 6.0 * state.nodal(i + 1);
    }
    return out;
}

double discrete_energy(const State2D& state, const PmeModel& model, const TriangleRule& rule)
{
    double e = 0.0;
    for (std::size_t c = 0; c < state.mesh.num_cells(); ++c) {
        const auto& t = state.mesh.cells()[c];
        const double area = std::abs(state.mesh.signed_area(c));
        const double r[3] = {state.nodal(t[0]), state.nodal(t[1]), state.nodal(t[2])};
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& l = rule.points[q];
            e += area * rule.weights[q] * model.f_extended(l[0] * r[0] + l[1] * r[1] + l[2] * r[2]);
        }
    }
    return e;
}

double dissipation(const State2D& state, std::span<const double> vx, std::span<const double> vy,
                   const TriangleRule& rule)
{
    const std::size_t nv = state.mesh.num_vertices();
    if (vx.size() != nv || vy.size() != nv) {
        throw std::invalid_argument("dissipation: velocity must have one entry per vertex");
    }
    double phi = 0.0;
    for (std::size_t c = 0; c < state.mesh.num_cells(); ++c) {
        const auto& t = state.mesh.cells()[c];
        const double area = std::abs(state.mesh.signed_area(c));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& l = rule.points[q];
            double rho = 0.0;
            double ux = 0.0;
            double uy = 0.0;
            for (int a = 0; a < 3; ++a) {
                rho += l[a] * state.nodal(t[a]);
                ux += l[a] * vx[t[a]];
                uy += l[a] * vy[t[a]];
            }
            phi += area * rule.weights[q] * rho * (ux * ux + uy * uy);
        }
    }
    return 0.5 * phi;
}

double total_mass(const State2D& state)
{
    double mass = 0.0;
    for (std::size_t c = 0; c < state.mesh.num_cells(); ++c) {
        const auto& t = state.mesh.cells()[c];
        mass += std::abs(state.mesh.signed_area(c)) *
                (state.nodal(t[0]) + state.nodal(t[1]) + state.nodal(t[2])) / 3.0;
    }
    return mass;
}

Vector mass_vector(const State2D& state)
{
    Vector out(state.mesh.num_interior(), 0.0);
    for (std::size_t c = 0; c < state.mesh.num_cells(); ++c) {
        const auto& t = state.mesh.cells()[c];
        const double area = std::abs(state.mesh.signed_area(c));
        for (int a = 0; a < 3; ++a) {
            const std::size_t k = state.mesh.interior_index(t[a]);
            if (k == TriMesh::npos) {
                continue;
            }
            for (int b = 0; b < 3; ++b) {
                out[k] += area / 12.0 * (a == b ? 2.0 : 1.0) * state.nodal(t[b]);
            }
        }
    }
    return out;
}

namespace {

constexpr int max_bisection_depth = 6;

// Integrates (exact - rho_h)^2 on [lo, hi] where rho_h is linear from r_lo to r_hi.
// Intervals on which the exact solution is zero at some samples and nonzero at others are
// bisected, since the free boundary makes the integrand non-smooth there.
double piece_error(const std::function<double(double)>& exact, const QuadratureRule& rule, double lo, double hi,
                   double r_lo, double r_hi, int depth)
{
    const double h = hi - lo;
    std::vector<double> values(rule.order());
    bool saw_zero = exact(lo) == 0.0 || exact(hi) == 0.0;
    bool saw_nonzero = exact(lo) != 0.0 || exact(hi) != 0.0;
    for (int q = 0; q < rule.order(); ++q) {
        values[q] = exact(lo + h * rule.nodes[q]);
        (values[q] == 0.0 ? saw_zero : saw_nonzero) = true;
    }
    // a sign change of rho_h marks a kink of the numerical solution as well
    const bool crossing = (saw_zero && saw_nonzero) || (r_lo * r_hi < 0.0);
    if (crossing && depth < max_bisection_depth) {
        const double mid = 0.5 * (lo + hi);
        const double r_mid = 0.5 * (r_lo + r_hi);
        return piece_error(exact, rule, lo, mid, r_lo, r_mid, depth + 1) +
               piece_error(exact, rule, mid, hi, r_mid, r_hi, depth + 1);
    }
    double sum = 0.0;
    for (int q = 0; q < rule.order(); ++q) {
        const double s = rule.nodes[q];
        const double d = values[q] - (r_lo * (1.0 - s) + r_hi * s);
        sum += rule.weights[q] * d * d;
    }
    return sum * h;
}

} // namespace

double l2_error(const State1D& state, const std::function<double(double)>& exact, const QuadratureRule& rule,
                double a, double b)
{
    const Mesh1D& mesh = state.mesh;
    if (!(a <= mesh.left()) || !(b >= mesh.right())) {
        throw std::invalid_argument("l2_error: enclosure does not contain the mesh");
    }
    if (exact(a) != 0.0 || exact(b) != 0.0) {
        throw std::invalid_argument("l2_error: exact solution is nonzero at the enclosure ends");
    }
    const double h_mean = (mesh.right() - mesh.left()) / static_cast<double>(mesh.cells());
    double sum = 0.0;
    auto outside = [&](double lo, double hi) {
        if (hi <= lo) {
            return;
        }
        const auto pieces = static_cast<std::size_t>(std::ceil((hi - lo) / h_mean));
        for (std::size_t p = 0; p < pieces; ++p) {
            const double x0 = lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(pieces);
            const double x1 = lo + (hi - lo) * static_cast<double>(p + 1) / static_cast<double>(pieces);
            sum += piece_error(exact, rule, x0, x1, 0.0, 0.0, 0);
        }
    };
    outside(a, mesh.left());
    for (std::size_t c = 0; c < mesh.cells(); ++c) {
        sum += piece_error(exact, rule, mesh[c], mesh[c + 1], state.nodal(c), state.nodal(c + 1), 0);
    }
    outside(mesh.right(), b);
    return std::sqrt(sum);
}

namespace {

using Tri = std::array<Point2, 3>;

double tri_area(const Tri& t)
{
    return 0.5 * std::abs((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y));
}

// (exact - rho_h)^2 over a sub-triangle; r holds rho_h at its corners.
double tri_error(const std::function<double(double, double)>& exact, const TriangleRule& rule, const Tri& t,
                 const std::array<double, 3>& r, int depth)
{
    bool saw_zero = false;
    bool saw_nonzero = false;
    std::vector<double> values(rule.points.size());
    for (const Point2& p : t) {
        (exact(p.x, p.y) == 0.0 ? saw_zero : saw_nonzero) = true;
    }
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& l = rule.points[q];
        values[q] = exact(l[0] * t[0].x + l[1] * t[1].x + l[2] * t[2].x, l[0] * t[0].y + l[1] * t[1].y + l[2] * t[2].y);
        (values[q] == 0.0 ? saw_zero : saw_nonzero) = true;
    }
    const bool rho_sign_change = std::min({r[0], r[1], r[2]}) < 0.0 && std::max({r[0], r[1], r[2]}) > 0.0;
    if (((saw_zero && saw_nonzero) || rho_sign_change) && depth < max_bisection_depth) {
        auto mid = [](Point2 p, Point2 q) { return Point2{0.5 * (p.x + q.x), 0.5 * (p.y + q.y)}; };
        const Point2 m01 = mid(t[0], t[1]);
        const Point2 m12 = mid(t[1], t[2]);
        const Point2 m20 = mid(t[2], t[0]);
        const double r01 = 0.5 * (r[0] + r[1]);
        const double r12 = 0.5 * (r[1] + r[2]);
        const double r20 = 0.5 * (r[2] + r[0]);
        return tri_error(exact, rule, {t[0], m01, m20}, {r[0], r01, r20}, depth + 1) +
               tri_error(exact, rule, {m01, t[1], m12}, {r01, r[1], r12}, depth + 1) +
               tri_error(exact, rule, {m20, m12, t[2]}, {r20, r12, r[2]}, depth + 1) +
               tri_error(exact, rule, {m01, m12, m20}, {r01, r12, r20}, depth + 1);
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& l = rule.points[q];
        const double d = values[q] - (l[0] * r[0] + l[1] * r[1] + l[2] * r[2]);
        sum += rule.weights[q] * d * d;
    }
    return sum * tri_area(t);
}

} // namespace

double l2_error(const State2D& state, const std::function<double(double, double)>& exact,
                const TriangleRule& rule, const Box& box)
{
    const TriMesh& mesh = state.mesh;
    for (const Point2& p : mesh.vertices()) {
        if (p.x < box.x0 || p.x > box.x1 || p.y < box.y0 || p.y > box.y1) {
            throw std::invalid_argument("l2_error: bounding box does not contain the mesh");
        }
    }
    double sum = 0.0;
    double edge_sum = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cells()[c];
        const Tri t{mesh.vertices()[cell[0]], mesh.vertices()[cell[1]], mesh.vertices()[cell[2]]};
        sum += tri_error(exact, rule, t, {state.nodal(cell[0]), state.nodal(cell[1]), state.nodal(cell[2])}, 0);
        edge_sum += std::sqrt(2.0 * tri_area(t));
    }

    // Part of the exact support not covered by the mesh: tensor Gauss rule on a grid four
    // times finer than the mesh, counting only points outside every triangle.
    const double h = 0.25 * edge_sum / static_cast<double>(std::max<std::size_t>(1, mesh.num_cells()));
    const auto nx = static_cast<std::size_t>(std::ceil((box.x1 - box.x0) / h));
    const auto ny = static_cast<std::size_t>(std::ceil((box.y1 - box.y0) / h));
    const double dx = (box.x1 - box.x0) / static_cast<double>(nx);
    const double dy = (box.y1 - box.y0) / static_cast<double>(ny);
    const QuadratureRule g = gauss_legendre(3);
    const TriLocator locator(mesh);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double x0 = box.x0 + dx * static_cast<double>(i);
            const double y0 = box.y0 + dy * static_cast<double>(j);
            for (int a = 0; a < g.order(); ++a) {
                for (int b = 0; b < g.order(); ++b) {
                    const double x = x0 + dx * g.nodes[a];
                    const double y = y0 + dy * g.nodes[b];
                    const double e = exact(x, y);
                    if (e == 0.0 || locator.locate({x, y})) {
                        continue;
                    }
                    sum += dx * dy * g.weights[a] * g.weights[b] * e * e;
                }
            }
        }
    }
    // Exact support touching the box edge means the box is too small.
    for (std::size_t i = 0; i <= nx; ++i) {
        const double x = box.x0 + dx * static_cast<double>(i);
        if (exact(x, box.y0) != 0.0 || exact(x, box.y1) != 0.0) {
            throw std::invalid_argument("l2_error: exact solution is nonzero on the bounding box");
        }
    }
    for (std::size_t j = 0; j <= ny; ++j) {
        const double y = box.y0 + dy * static_cast<double>(j);
        if (exact(box.x0, y) != 0.0 || exact(box.x1, y) != 0.0) {
            throw std::invalid_argument("l2_error: exact solution is nonzero on the bounding box");
        }
    }
    return std::sqrt(sum);
}

std::vector<double> convergence_order(std::span<const double> errors, std::span<const double> ns, int dim)
{
    if (errors.size() != ns.size() || errors.size() < 2) {
        throw std::invalid_argument("convergence_order: need two or more (error, N) pairs");
    }
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("convergence_order: dim must be 1 or 2");
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!(errors[i] > 0.0) || !(ns[i] > 0.0)) {
            throw std::invalid_argument("convergence_order: errors and N must be positive");
        }
    }
    std::vector<double> p;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        double ratio = std::log(ns[i + 1] / ns[i]);
        if (dim == 2) {
            ratio *= 0.5;
        }
        p.push_back(std::log(errors[i] / errors[i + 1]) / ratio);
    }
    return p;
}

std::optional<double> waiting_time_estimate(const RunRecord& record, double delta_frac)
{
    const double threshold = delta_frac * record.initial_diameter;
    for (const DiagRow& row : record.rows) {
        if (row.boundary_displacement > threshold) {
            return row.t;
        }
    }
    return std::nullopt;
}

double support_diameter(const TriMesh& mesh)
{
    const auto bnd = mesh.boundary_vertices();
    double d2 = 0.0;
    for (std::size_t a = 0; a < bnd.size(); ++a) {
        for (std::size_t b = a + 1; b < bnd.size(); ++b) {
            const Point2& p = mesh.vertices()[bnd[a]];
            const Point2& q = mesh.vertices()[bnd[b]];
            d2 = std::max(d2, (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y));
        }
    }
    return std::sqrt(d2);
}

void fill_boundary_stats(DiagRow& row, const TriMesh& initial, const TriMesh& current)
{
    const auto bnd = current.boundary_vertices();
    std::uint64_t hash = 1469598103934665603ULL;
    double cx = 0.0;
    double cy = 0.0;
    double disp = 0.0;
    for (std::size_t v : bnd) {
        hash = (hash ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
        const Point2& p = current.vertices()[v];
        const Point2& p0 = initial.vertices()[v];
        cx += p.x;
        cy += p.y;
        disp = std::max(disp, std::hypot(p.x - p0.x, p.y - p0.y));
    }
    row.boundary_hash = hash;
    row.boundary_displacement = disp;
    if (bnd.empty()) {
        return;
    }
    cx /= static_cast<double>(bnd.size());
    cy /= static_cast<double>(bnd.size());
    double rmin = std::numeric_limits<double>::infinity();
    double rmax = 0.0;
    double rsum = 0.0;
    for (std::size_t v : bnd) {
        const Point2& p = current.vertices()[v];
        const double r = std::hypot(p.x - cx, p.y - cy);
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        rsum += r;
    }
    row.radius_min = rmin;
    row.radius_max = rmax;
    row.radius_mean = rsum / static_cast<double>(bnd.size());
}

} // namespace pme
