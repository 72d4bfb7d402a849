#pragma once

#include "pme/scheme1d.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pme {

/// Invalid configuration. line() is 0 for cross-field errors found after parsing.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& field, const std::string& msg);
    int line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    int line_;
    std::string field_;
};

struct ProblemConfig {
    int dim = 1;
    double m = 2.0;
    /// barenblatt | waiting1d | waiting2d | horseshoe | two-peak | snapshot
    std::string initial = "barenblatt";
    double C = 1.0;
    /// Start time; defaults to 1 for barenblatt and 0 otherwise (snapshots carry their own).
    std::optional<double> t0;
    double theta = 0.0;
    std::string snapshot;
};

struct MeshConfig {
    /// 1D: uniform | bestfit | file; 2D: disk | square | horseshoe | file; snapshot for snapshot data.
    std::string kind = "uniform";
    /// Cells (1D), rings (disk), squares per side (square) or radial intervals (horseshoe).
    int n = 48;
    std::string path;
    /// bestfit only: spacing floor factor and whether the initial data are the fitted
    /// coefficients ("fit") or nodal interpolation on the fitted knots ("interpolate").
    double min_gap = 1e-3;
    std::string data = "fit";
    int max_iter = 200;
    /// Disk radius override (0: support radius of the initial data).
    double radius = 0.0;
    double x0 = -1.5, x1 = 1.5, y0 = -1.5, y1 = 1.5;
};

struct OutputConfig {
    std::string dir = "out";
    /// Write a snapshot every k steps (0: only the final state).
    long snapshot_every = 0;
    /// Keep every k-th step in diag.csv (flagged and final rows are always kept).
    long record_every = 1;
    std::vector<std::string> formats = {"csv", "json"};
};

struct ExperimentConfig {
    std::string source = "<config>";
    ProblemConfig problem;
    MeshConfig mesh;
    SchemeConfig scheme;
    /// 2D triangle quadrature degree and CG tolerance.
    int tri_degree = 5;
    double cg_tol = 1e-12;
    OutputConfig output;
    /// Level sizes for converge and mass-table (mesh.n per level; tau / 4 per level).
    std::vector<int> levels;
    double waiting_delta = 0.0025;
    bool strict = false;

    double start_time() const;
    bool has_csv() const;
    bool has_json() const;
};

/// Line-oriented "key = value" text with [section] headers; '#' starts a comment.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-field checks (dimension against initial data and mesh kinds, ranges).
void validate(const ExperimentConfig& cfg);

} // namespace pme
