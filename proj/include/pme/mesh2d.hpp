#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace pme {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

using Cell = std::array<std::size_t, 3>;

/// Moving triangulation. Vertices flagged as boundary carry a zero density.
class TriMesh {
public:
    TriMesh() = default;
    TriMesh(std::vector<Point2> vertices, std::vector<Cell> cells, std::vector<bool> boundary);

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_interior() const { return interior_vertices_.size(); }

    const std::vector<Point2>& vertices() const { return vertices_; }
    std::vector<Point2>& mutable_vertices() { return vertices_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<bool>& boundary() const { return boundary_; }
    bool is_boundary(std::size_t v) const { return boundary_[v]; }

    /// Interior numbering of vertex v, or npos for boundary vertices.
    std::size_t interior_index(std::size_t v) const { return interior_index_[v]; }
    const std::vector<std::size_t>& interior_vertices() const { return interior_vertices_; }
    std::vector<std::size_t> boundary_vertices() const;

    /// Vertex adjacency through shared cells (excluding the vertex itself).
    const std::vector<std::vector<std::size_t>>& neighbours() const { return neighbours_; }

    double signed_area(std::size_t c) const;

    bool operator==(const TriMesh& o) const
    {
        return vertices_ == o.vertices_ && cells_ == o.cells_ && boundary_ == o.boundary_;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<Point2> vertices_;
    std::vector<Cell> cells_;
    std::vector<bool> boundary_;
    std::vector<std::size_t> interior_index_;
    std::vector<std::size_t> interior_vertices_;
    std::vector<std::vector<std::size_t>> neighbours_;
};

/// Nodal density on the interior vertices (in interior numbering); zero on the boundary.
struct State2D {
    State2D(TriMesh mesh, std::vector<double> interior_rho);

    TriMesh mesh;
    std::vector<double> rho;

    double nodal(std::size_t v) const
    {
        const std::size_t k = mesh.interior_index(v);
        return k == TriMesh::npos ? 0.0 : rho[k];
    }

    bool operator==(const State2D&) const = default;
};

struct MeshQuality {
    double min_area = 0.0;
    double min_angle_deg = 0.0;
    bool tangled = false;
};

MeshQuality mesh_quality(const TriMesh& mesh);

/// Concentric rings; ring k holds 6k vertices. 1 + 3n(n+1) vertices and 6n^2 cells.
TriMesh disk_mesh(double radius, int n_rings);

/// n x n squares on [x0,x1] x [y0,y1], each split into two right triangles.
TriMesh square_mesh(double x0, double x1, double y0, double y1, int n);

/// Three-quarter annulus 0.5 < r < 1 (x < 0 or y < 0) closed by two half-disk caps of
/// radius 1/4; n_radial (even) intervals across the arc width.
TriMesh horseshoe_mesh(int n_radial);

/// Interpolates f at the interior vertices.
template <class F>
State2D interpolate(const TriMesh& mesh, F&& f)
{
    std::vector<double> rho(mesh.num_interior());
    for (std::size_t k = 0; k < rho.size(); ++k) {
        const Point2& p = mesh.vertices()[mesh.interior_vertices()[k]];
        rho[k] = f(p.x, p.y);
    }
    return State2D(mesh, std::move(rho));
}

/// Uniform bucket grid for point location in a fixed snapshot of the mesh.
class TriLocator {
public:
    explicit TriLocator(const TriMesh& mesh);

    struct Hit {
        std::size_t cell;
        std::array<double, 3> bary;
    };

    /// Cell containing p (with a small tolerance), or nullopt when p is outside the mesh.
    std::optional<Hit> locate(Point2 p) const;

private:
    const TriMesh* mesh_;
    double x0_, y0_, dx_, dy_;
    std::size_t nx_, ny_;
    std::vector<std::vector<std::size_t>> buckets_;
};

double eval_rho(const State2D& state, const TriLocator& locator, Point2 p);

/// Barycentric coordinates of p with respect to cell c.
std::array<double, 3> barycentric(const TriMesh& mesh, std::size_t c, Point2 p);

} // namespace pme
