#pragma once

#include "pme/diagnostics.hpp"
#include "pme/mesh1d.hpp"
#include "pme/mesh2d.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace pme {

/// Malformed input file; line() is 1-based (0 when the input ended early).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, int line, const std::string& msg);
    int line() const { return line_; }

private:
    int line_;
};

/// 17 significant digits, enough for an exact round trip through strtod.
std::string format_double(double v);

void write_mesh(std::ostream& out, const TriMesh& mesh);
TriMesh read_mesh(std::istream& in, const std::string& source = "<stream>");
void save_mesh(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh load_mesh(const std::filesystem::path& path);

struct Snapshot {
    double m = 0.0;
    double t = 0.0;
    std::variant<State1D, State2D> state;

    int dim() const { return state.index() == 0 ? 1 : 2; }
};

void write_snapshot(std::ostream& out, const State1D& state, double m, double t);
void write_snapshot(std::ostream& out, const State2D& state, double m, double t);
Snapshot read_snapshot(std::istream& in, const std::string& source = "<stream>");
void save_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot load_snapshot(const std::filesystem::path& path);

/// Diagnostics table with a header row.
void write_diag_csv(std::ostream& out, const std::vector<DiagRow>& rows);

} // namespace pme
