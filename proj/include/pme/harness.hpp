#pragma once

#include "pme/config.hpp"
#include "pme/model.hpp"
#include "pme/scheme1d.hpp"
#include "pme/solver2d.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

namespace pme {

/// Exit statuses of the command line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_runtime = 1,
    exit_config = 2,
    /// The run stopped before T (assumption violation or tangled mesh).
    exit_stopped = 3,
};

struct InitialData {
    PmeModel model;
    double t0;
    std::variant<State1D, State2D> state;
};

/// Builds the mesh and initial density described by a validated config. Problems with
/// referenced input files surface as ConfigError so that nothing is written.
InitialData prepare(const ExperimentConfig& cfg);

SchemeConfig2D scheme_2d(const ExperimentConfig& cfg);

/// Each command expects a validated config and writes into out_dir (created when missing).
/// The returned value is an ExitCode.
int cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_waiting_time(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_converge(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_mass_table(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_mesh_gen(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

struct CliRequest {
    std::string command;
    std::filesystem::path config;
    /// Overrides output.dir when non-empty.
    std::string out;
    bool strict = false;
    /// Overrides the quadrature order (1D) or triangle degree (2D) when positive.
    int quad_order = 0;
};

/// Loads and validates the config, runs the command and maps exceptions to exit codes.
/// Error messages go to err.
int dispatch(const CliRequest& req, std::ostream& log, std::ostream& err);

} // namespace pme
