#include "pme/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pme {

ParseError::ParseError(const std::string& source, int line, const std::string& msg)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string(": end of input")) + ": " +
                         msg),
      line_(line)
{
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

// Line reader that skips blank lines and keeps the line number for messages.
class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(std::vector<std::string>& tokens)
    {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            std::istringstream ss(line);
            tokens.clear();
            std::string tok;
            while (ss >> tok) {
                tokens.push_back(tok);
            }
            if (!tokens.empty()) {
                return true;
            }
        }
        return false;
    }

    std::vector<std::string> expect(const std::string& what)
    {
        std::vector<std::string> tokens;
        if (!next(tokens)) {
            throw ParseError(source_, 0, "truncated file, expected " + what);
        }
        return tokens;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(source_, line_no_, msg); }

    double to_double(const std::string& s) const
    {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
            fail("invalid number '" + s + "'");
        }
        return v;
    }

    std::size_t to_index(const std::string& s) const
    {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
            fail("invalid index '" + s + "'");
        }
        return static_cast<std::size_t>(std::stoull(s));
    }

    std::size_t section(const std::string& keyword)
    {
        const auto tok = expect("section " + keyword);
        if (tok.size() != 2 || tok[0] != keyword) {
            fail("expected section '" + keyword + " <count>'");
        }
        return to_index(tok[1]);
    }

private:
    std::istream& in_;
    std::string source_;
    int line_no_ = 0;
};

TriMesh read_mesh_body(LineReader& rd)
{
    const auto head = rd.expect("header 'pme-mesh v1'");
    if (head.size() != 2 || head[0] != "pme-mesh" || head[1] != "v1") {
        rd.fail("expected header 'pme-mesh v1'");
    }
    const std::size_t nv = rd.section("V");
    std::vector<Point2> verts(nv);
    std::vector<bool> boundary(nv);
    for (std::size_t k = 0; k < nv; ++k) {
        const auto tok = rd.expect("vertex line");
        if (tok.size() != 4) {
            rd.fail("vertex line needs '<id> <x> <y> <boundary>'");
        }
        if (rd.to_index(tok[0]) != k) {
            rd.fail("vertex ids must be consecutive from 0");
        }
        verts[k] = {rd.to_double(tok[1]), rd.to_double(tok[2])};
        if (tok[3] != "0" && tok[3] != "1") {
            rd.fail("boundary flag must be 0 or 1");
        }
        boundary[k] = tok[3] == "1";
    }
    const std::size_t nc = rd.section("C");
    std::vector<Cell> cells(nc);
    for (std::size_t k = 0; k < nc; ++k) {
        const auto tok = rd.expect("cell line");
        if (tok.size() != 4) {
            rd.fail("cell line needs '<id> <v1> <v2> <v3>'");
        }
        if (rd.to_index(tok[0]) != k) {
            rd.fail("cell ids must be consecutive from 0");
        }
        for (int a = 0; a < 3; ++a) {
            cells[k][a] = rd.to_index(tok[a + 1]);
            if (cells[k][a] >= nv) {
                rd.fail("cell refers to a missing vertex");
            }
        }
    }
    TriMesh mesh(std::move(verts), std::move(cells), std::move(boundary));
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        if (!(mesh.signed_area(c) > 0.0)) {
            rd.fail("cell " + std::to_string(c) + " is not positively oriented");
        }
    }
    return mesh;
}

} // namespace

void write_mesh(std::ostream& out, const TriMesh& mesh)
{
    out << "pme-mesh v1\n";
    out << "V " << mesh.num_vertices() << "\n";
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const Point2& p = mesh.vertices()[v];
        out << v << ' ' << format_double(p.x) << ' ' << format_double(p.y) << ' ' << (mesh.is_boundary(v) ? 1 : 0)
            << "\n";
    }
    out << "C " << mesh.num_cells() << "\n";
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const Cell& t = mesh.cells()[c];
        out << c << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
    }
}

TriMesh read_mesh(std::istream& in, const std::string& source)
{
    LineReader rd(in, source);
    return read_mesh_body(rd);
}

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_mesh(out, mesh);
}

TriMesh load_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return read_mesh(in, path.string());
}

void write_snapshot(std::ostream& out, const State1D& state, double m, double t)
{
    out << "pme-snapshot v1 dim=1 m=" << format_double(m) << " t=" << format_double(t) << "\n";
    for (std::size_t i = 0; i <= state.mesh.cells(); ++i) {
        out << format_double(state.mesh[i]) << ' ' << format_double(state.nodal(i)) << "\n";
    }
}

void write_snapshot(std::ostream& out, const State2D& state, double m, double t)
{
    out << "pme-snapshot v1 dim=2 m=" << format_double(m) << " t=" << format_double(t) << "\n";
    write_mesh(out, state.mesh);
    out << "RHO " << state.rho.size() << "\n";
    for (std::size_t k = 0; k < state.rho.size(); ++k) {
        out << state.mesh.interior_vertices()[k] << ' ' << format_double(state.rho[k]) << "\n";
    }
}

Snapshot read_snapshot(std::istream& in, const std::string& source)
{
    LineReader rd(in, source);
    const auto head = rd.expect("header 'pme-snapshot v1'");
    if (head.size() != 5 || head[0] != "pme-snapshot" || head[1] != "v1") {
        rd.fail("expected header 'pme-snapshot v1 dim=<d> m=<m> t=<t>'");
    }
    auto field = [&](const std::string& tok, const std::string& key) {
        if (tok.rfind(key + "=", 0) != 0) {
            rd.fail("expected field '" + key + "='");
        }
        return tok.substr(key.size() + 1);
    };
    const std::string dim = field(head[2], "dim");
    const double m = rd.to_double(field(head[3], "m"));
    const double t = rd.to_double(field(head[4], "t"));

    if (dim == "1") {
        std::vector<double> x;
        std::vector<double> rho;
        std::vector<std::string> tok;
        while (rd.next(tok)) {
            if (tok.size() != 2) {
                rd.fail("1D snapshot lines need '<x> <rho>'");
            }
            x.push_back(rd.to_double(tok[0]));
            rho.push_back(rd.to_double(tok[1]));
        }
        if (x.size() < 3) {
            throw ParseError(source, 0, "truncated file, expected at least three knot lines");
        }
        if (rho.front() != 0.0 || rho.back() != 0.0) {
            throw ParseError(source, 0, "end knots must carry rho = 0");
        }
        for (std::size_t i = 1; i < x.size(); ++i) {
            if (!(x[i] > x[i - 1])) {
                throw ParseError(source, 0, "knots must be strictly increasing");
            }
        }
        std::vector<double> interior(rho.begin() + 1, rho.end() - 1);
        return {m, t, State1D(Mesh1D(std::move(x)), std::move(interior))};
    }
    if (dim != "2") {
        rd.fail("dim must be 1 or 2");
    }
    TriMesh mesh = read_mesh_body(rd);
    const std::size_t n = rd.section("RHO");
    if (n != mesh.num_interior()) {
        rd.fail("RHO count must equal the number of interior vertices");
    }
    std::vector<double> rho(n);
    std::vector<bool> seen(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        const auto tok = rd.expect("RHO line");
        if (tok.size() != 2) {
            rd.fail("RHO line needs '<vertex id> <value>'");
        }
        const std::size_t v = rd.to_index(tok[0]);
        if (v >= mesh.num_vertices() || mesh.interior_index(v) == TriMesh::npos) {
            rd.fail("RHO entry for a vertex that is not interior");
        }
        const std::size_t ki = mesh.interior_index(v);
        if (seen[ki]) {
            rd.fail("duplicate RHO entry");
        }
        seen[ki] = true;
        rho[ki] = rd.to_double(tok[1]);
    }
    return {m, t, State2D(std::move(mesh), std::move(rho))};
}

void save_snapshot(const std::filesystem::path& path, const Snapshot& snap)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    std::visit([&](const auto& s) { write_snapshot(out, s, snap.m, snap.t); }, snap.state);
}

Snapshot load_snapshot(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return read_snapshot(in, path.string());
}

void write_diag_csv(std::ostream& out, const std::vector<DiagRow>& rows)
{
    out << "t,energy,dissipation,total_mass,mass_vector_norm,left,right,boundary_displacement,"
           "radius_mean,radius_min,radius_max,boundary_hash,fp_iters,energy_identity_residual,flags\n";
    for (const DiagRow& r : rows) {
        out << format_double(r.t) << ',' << format_double(r.energy) << ',' << format_double(r.dissipation) << ','
            << format_double(r.total_mass) << ',' << format_double(r.mass_vector_norm) << ','
            << format_double(r.left) << ',' << format_double(r.right) << ','
            << format_double(r.boundary_displacement) << ',' << format_double(r.radius_mean) << ','
            << format_double(r.radius_min) << ',' << format_double(r.radius_max) << ',' << r.boundary_hash << ','
            << r.fp_iters << ',' << format_double(r.energy_identity_residual) << ',' << r.flags << "\n";
    }
}

} // namespace pme
