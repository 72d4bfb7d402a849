#include "pme/mesh2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pme {

TriMesh::TriMesh(std::vector<Point2> vertices, std::vector<Cell> cells, std::vector<bool> boundary)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), boundary_(std::move(boundary))
{
    const std::size_t nv = vertices_.size();
    if (boundary_.size() != nv) {
        throw std::invalid_argument("TriMesh: boundary flag count does not match vertex count");
    }
    interior_index_.assign(nv, npos);
    for (std::size_t v = 0; v < nv; ++v) {
        if (!boundary_[v]) {
            interior_index_[v] = interior_vertices_.size();
            interior_vertices_.push_back(v);
        }
    }
    neighbours_.assign(nv, {});
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const Cell& t = cells_[c];
        for (std::size_t a = 0; a < 3; ++a) {
            if (t[a] >= nv) {
                throw std::out_of_range("TriMesh: cell " + std::to_string(c) + " references missing vertex");
            }
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
            throw std::invalid_argument("TriMesh: cell " + std::to_string(c) + " repeats a vertex");
        }
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) {
                if (a != b) {
                    neighbours_[t[a]].push_back(t[b]);
                }
            }
        }
    }
    for (auto& nb : neighbours_) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
}

std::vector<std::size_t> TriMesh::boundary_vertices() const
{
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
        if (boundary_[v]) {
            out.push_back(v);
        }
    }
    return out;
}

double TriMesh::signed_area(std::size_t c) const
{
    const Point2& a = vertices_[cells_[c][0]];
    const Point2& b = vertices_[cells_[c][1]];
    const Point2& d = vertices_[cells_[c][2]];
    return 0.5 * ((b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y));
}

State2D::State2D(TriMesh mesh_, std::vector<double> interior_rho) : mesh(std::move(mesh_)), rho(std::move(interior_rho))
{
    if (rho.size() != mesh.num_interior()) {
        throw std::invalid_argument("State2D: expected " + std::to_string(mesh.num_interior()) +
                                    " interior values, got " + std::to_string(rho.size()));
    }
}

MeshQuality mesh_quality(const TriMesh& mesh)
{
    MeshQuality q;
    q.min_area = std::numeric_limits<double>::infinity();
    q.min_angle_deg = 180.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const double area = mesh.signed_area(c);
        q.min_area = std::min(q.min_area, area);
        if (area <= 0.0) {
            q.tangled = true;
        }
        const auto& t = mesh.cells()[c];
        for (int a = 0; a < 3; ++a) {
            const Point2& p = mesh.vertices()[t[a]];
            const Point2& u = mesh.vertices()[t[(a + 1) % 3]];
            const Point2& w = mesh.vertices()[t[(a + 2) % 3]];
            const double ux = u.x - p.x;
            const double uy = u.y - p.y;
            const double wx = w.x - p.x;
            const double wy = w.y - p.y;
            const double ang = std::atan2(std::abs(ux * wy - uy * wx), ux * wx + uy * wy);
            q.min_angle_deg = std::min(q.min_angle_deg, ang * 180.0 / std::numbers::pi);
        }
    }
    if (mesh.num_cells() == 0) {
        q.min_area = 0.0;
    }
    return q;
}

namespace {

void push_ccw(std::vector<Cell>& cells, const std::vector<Point2>& v, std::size_t a, std::size_t b, std::size_t c)
{
    const double area = (v[b].x - v[a].x) * (v[c].y - v[a].y) - (v[c].x - v[a].x) * (v[b].y - v[a].y);
    if (area >= 0.0) {
        cells.push_back({a, b, c});
    } else {
        cells.push_back({a, c, b});
    }
}

// Triangulates the strip between two polylines ordered by a common parameter in [0, 1].
// inner/outer hold vertex ids and their parameters; both polylines are open.
void zip_strip(std::vector<Cell>& cells, const std::vector<Point2>& v, const std::vector<std::size_t>& inner,
               const std::vector<double>& t_inner, const std::vector<std::size_t>& outer,
               const std::vector<double>& t_outer)
{
    std::size_t i = 0;
    std::size_t o = 0;
    while (i + 1 < inner.size() || o + 1 < outer.size()) {
        const bool advance_outer =
            i + 1 >= inner.size() || (o + 1 < outer.size() && t_outer[o + 1] <= t_inner[i + 1] + 1e-12);
        if (advance_outer) {
            push_ccw(cells, v, inner[i], outer[o], outer[o + 1]);
            ++o;
        } else {
            push_ccw(cells, v, inner[i], outer[o], inner[i + 1]);
            ++i;
        }
    }
}

} // namespace

TriMesh disk_mesh(double radius, int n_rings)
{
    if (n_rings < 1 || !(radius > 0.0)) {
        throw std::domain_error("disk_mesh: need radius > 0 and at least one ring");
    }
    std::vector<Point2> v{{0.0, 0.0}};
    std::vector<bool> boundary{n_rings == 0};
    std::vector<Cell> cells;
    std::vector<std::size_t> prev{0};
    for (int k = 1; k <= n_rings; ++k) {
        const double r = radius * k / n_rings;
        const int count = 6 * k;
        std::vector<std::size_t> ring;
        for (int i = 0; i < count; ++i) {
            const double th = 2.0 * std::numbers::pi * i / count;
            ring.push_back(v.size());
            v.push_back({r * std::cos(th), r * std::sin(th)});
            boundary.push_back(k == n_rings);
        }
        if (k == 1) {
            for (int i = 0; i < count; ++i) {
                push_ccw(cells, v, 0, ring[i], ring[(i + 1) % count]);
            }
        } else {
            // close both rings by repeating the first vertex at parameter 1
            std::vector<std::size_t> inner = prev;
            std::vector<std::size_t> outer = ring;
            std::vector<double> ti;
            std::vector<double> to;
            for (std::size_t i = 0; i < prev.size(); ++i) {
                ti.push_back(static_cast<double>(i) / prev.size());
            }
            for (std::size_t i = 0; i < ring.size(); ++i) {
                to.push_back(static_cast<double>(i) / ring.size());
            }
            inner.push_back(prev.front());
            ti.push_back(1.0);
            outer.push_back(ring.front());
            to.push_back(1.0);
            zip_strip(cells, v, inner, ti, outer, to);
        }
        prev = std::move(ring);
    }
    return TriMesh(std::move(v), std::move(cells), std::move(boundary));
}

TriMesh square_mesh(double x0, double x1, double y0, double y1, int n)
{
    if (n < 1 || !(x0 < x1) || !(y0 < y1)) {
        throw std::domain_error("square_mesh: need n >= 1 and a non-empty box");
    }
    std::vector<Point2> v;
    std::vector<bool> boundary;
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            v.push_back({x0 + (x1 - x0) * i / n, y0 + (y1 - y0) * j / n});
            boundary.push_back(i == 0 || j == 0 || i == n || j == n);
        }
    }
    auto id = [n](int i, int j) { return static_cast<std::size_t>(j * (n + 1) + i); };
    std::vector<Cell> cells;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return TriMesh(std::move(v), std::move(cells), std::move(boundary));
}

TriMesh horseshoe_mesh(int n_radial)
{
    if (n_radial < 2 || n_radial % 2 != 0) {
        throw std::domain_error("horseshoe_mesh: n_radial must be an even number >= 2");
    }
    const int nr = n_radial;
    const double dr = 0.5 / nr;
    const int nt = std::max(2, static_cast<int>(std::lround(1.5 * std::numbers::pi * 0.75 / dr)));
    const double th0 = 0.5 * std::numbers::pi;
    const double th1 = 2.0 * std::numbers::pi;

    std::vector<Point2> v;
    std::vector<bool> boundary;
    std::vector<Cell> cells;
    auto sector_id = [nr](int it, int ir) { return static_cast<std::size_t>(it * (nr + 1) + ir); };
    for (int it = 0; it <= nt; ++it) {
        const double th = th0 + (th1 - th0) * it / nt;
        for (int ir = 0; ir <= nr; ++ir) {
            const double r = 0.5 + ir * dr;
            double x = r * std::cos(th);
            double y = r * std::sin(th);
            if (it == 0) {
                x = 0.0;
            }
            if (it == nt) {
                y = 0.0;
            }
            v.push_back({x, y});
            boundary.push_back(ir == 0 || ir == nr);
        }
    }
    for (int it = 0; it < nt; ++it) {
        for (int ir = 0; ir < nr; ++ir) {
            const std::size_t a = sector_id(it, ir);
            const std::size_t b = sector_id(it, ir + 1);
            const std::size_t c = sector_id(it + 1, ir + 1);
            const std::size_t d = sector_id(it + 1, ir);
            push_ccw(cells, v, a, b, c);
            push_ccw(cells, v, a, c, d);
        }
    }

    // Half-disk caps glued to the two straight ends of the arc. The cap diameter reuses
    // the sector's end vertices; half-ring j has 3j segments.
    const int rings = nr / 2;
    auto build_cap = [&](int it_end, Point2 centre, double start_angle, double sweep) {
        std::vector<std::size_t> prev{sector_id(it_end, rings)};
        std::vector<double> tprev{0.5};
        for (int j = 1; j <= rings; ++j) {
            const double rad = j * dr;
            const int segs = 3 * j;
            std::vector<std::size_t> ring;
            std::vector<double> tring;
            for (int s = 0; s <= segs; ++s) {
                const double t = static_cast<double>(s) / segs;
                if (s == 0) {
                    ring.push_back(sector_id(it_end, rings - j));
                } else if (s == segs) {
                    ring.push_back(sector_id(it_end, rings + j));
                } else {
                    const double ang = start_angle + sweep * t;
                    ring.push_back(v.size());
                    v.push_back({centre.x + rad * std::cos(ang), centre.y + rad * std::sin(ang)});
                    boundary.push_back(j == rings);
                }
                tring.push_back(t);
            }
            if (j == 1) {
                for (int s = 0; s < segs; ++s) {
                    push_ccw(cells, v, prev[0], ring[s], ring[s + 1]);
                }
            } else {
                zip_strip(cells, v, prev, tprev, ring, tring);
            }
            prev = std::move(ring);
            tprev = std::move(tring);
        }
    };
    // end at theta = pi/2 lies on x = 0 with radius running along +y; cap bulges to x > 0
    build_cap(0, {0.0, 0.75}, -0.5 * std::numbers::pi, std::numbers::pi);
    // end at theta = 2 pi lies on y = 0 with radius running along +x; cap bulges to y > 0
    build_cap(nt, {0.75, 0.0}, std::numbers::pi, -std::numbers::pi);
    return TriMesh(std::move(v), std::move(cells), std::move(boundary));
}

std::array<double, 3> barycentric(const TriMesh& mesh, std::size_t c, Point2 p)
{
    const auto& t = mesh.cells()[c];
    const Point2& a = mesh.vertices()[t[0]];
    const Point2& b = mesh.vertices()[t[1]];
    const Point2& d = mesh.vertices()[t[2]];
    const double det = (b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y);
    const double l1 = ((p.x - a.x) * (d.y - a.y) - (d.x - a.x) * (p.y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
    return {1.0 - l1 - l2, l1, l2};
}

TriLocator::TriLocator(const TriMesh& mesh) : mesh_(&mesh)
{
    double xmin = std::numeric_limits<double>::infinity();
    double ymin = xmin;
    double xmax = -xmin;
    double ymax = -xmin;
    for (const Point2& p : mesh.vertices()) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double pad = 1e-9 * std::max(1.0, std::max(xmax - xmin, ymax - ymin));
    xmin -= pad;
    ymin -= pad;
    xmax += pad;
    ymax += pad;
    const std::size_t side = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(mesh.num_cells() / 2.0)));
    nx_ = side;
    ny_ = side;
    x0_ = xmin;
    y0_ = ymin;
    dx_ = (xmax - xmin) / static_cast<double>(nx_);
    dy_ = (ymax - ymin) / static_cast<double>(ny_);
    buckets_.assign(nx_ * ny_, {});
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        double cx0 = std::numeric_limits<double>::infinity();
        double cy0 = cx0;
        double cx1 = -cx0;
        double cy1 = -cx0;
        for (std::size_t v : mesh.cells()[c]) {
            const Point2& p = mesh.vertices()[v];
            cx0 = std::min(cx0, p.x);
            cx1 = std::max(cx1, p.x);
            cy0 = std::min(cy0, p.y);
            cy1 = std::max(cy1, p.y);
        }
        auto clampi = [](double t, std::size_t n) {
            return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(n - 1)));
        };
        const std::size_t i0 = clampi(std::floor((cx0 - x0_) / dx_), nx_);
        const std::size_t i1 = clampi(std::floor((cx1 - x0_) / dx_), nx_);
        const std::size_t j0 = clampi(std::floor((cy0 - y0_) / dy_), ny_);
        const std::size_t j1 = clampi(std::floor((cy1 - y0_) / dy_), ny_);
        for (std::size_t j = j0; j <= j1; ++j) {
            for (std::size_t i = i0; i <= i1; ++i) {
                buckets_[j * nx_ + i].push_back(c);
            }
        }
    }
}

std::optional<TriLocator::Hit> TriLocator::locate(Point2 p) const
{
    const double fi = std::floor((p.x - x0_) / dx_);
    const double fj = std::floor((p.y - y0_) / dy_);
    if (fi < 0.0 || fj < 0.0 || fi >= static_cast<double>(nx_) || fj >= static_cast<double>(ny_)) {
        return std::nullopt;
    }
    const auto& bucket = buckets_[static_cast<std::size_t>(fj) * nx_ + static_cast<std::size_t>(fi)];
    constexpr double tol = -1e-12;
    for (std::size_t c : bucket) {
        const auto l = barycentric(*mesh_, c, p);
        if (l[0] >= tol && l[1] >= tol && l[2] >= tol) {
            return Hit{c, l};
        }
    }
    return std::nullopt;
}

double eval_rho(const State2D& state, const TriLocator& locator, Point2 p)
{
    const auto hit = locator.locate(p);
    if (!hit) {
        return 0.0;
    }
    const auto& t = state.mesh.cells()[hit->cell];
    return hit->bary[0] * state.nodal(t[0]) + hit->bary[1] * state.nodal(t[1]) + hit->bary[2] * state.nodal(t[2]);
}

} // namespace pme
