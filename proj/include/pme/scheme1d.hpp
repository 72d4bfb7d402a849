#pragma once

#include "pme/assembly1d.hpp"
#include "pme/diagnostics.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pme {

enum class SchemeKind { explicit_euler, implicit, modified_explicit, modified_implicit };

std::string to_string(SchemeKind kind);
/// Accepts "explicit", "implicit", "modified-explicit", "modified-implicit".
SchemeKind parse_scheme_kind(const std::string& name);

struct SchemeConfig {
    SchemeKind kind = SchemeKind::implicit;
    double tau = 1e-3;
    double T = 1.0;
    double eps = 1e-6;
    int max_fp_iter = 100;
    int quad_order = 5;

    /// Throws std::invalid_argument on tau <= 0, T < 0, eps <= 0, max_fp_iter < 1, quad_order < 1.
    void validate() const;
};

struct StepReport {
    Vector lambda;
    Vector v;
    Vector drho;
    int fp_iters = 0;
    double energy_before = 0.0;
    double energy_after = 0.0;
    /// Phi_h = 1/2 v^T D v at the old state.
    double dissipation = 0.0;
    double mass_before = 0.0;
    double mass_after = 0.0;
    /// grad_rho . drho + grad_x . v with the old-state gradients.
    double energy_rate = 0.0;
    /// Largest relative residual among the linear solves of the step.
    double residual = 0.0;
    bool rank_deficient = false;
    bool solver_fallback = false;
    AssumptionReport assumptions;
};

struct StepResult {
    State1D state;
    StepReport report;
};

/// Picard iteration failed to reach the tolerance; history holds the l_inf change per pass.
class FixedPointError : public std::runtime_error {
public:
    FixedPointError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history))
    {
    }
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

StepResult explicit_step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg);
StepResult implicit_step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg);
StepResult modified_explicit_step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg);
StepResult modified_implicit_step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg);

StepResult step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg);

/// Coupled matrix of the modified schemes, unknowns ordered [lambda_hat (N+1), v (N+1), drho (N-1)].
DenseMatrix modified_system_matrix(const System1D& sys);

using Observer1D = std::function<void(const State1D&, const DiagRow&)>;

struct RunOptions1D {
    double t0 = 0.0;
    /// Stop at the first step that violates (A1) or (A2). Without it only (A1) stops the run,
    /// because no further step can be assembled on an unordered mesh.
    bool strict = false;
    /// Keep every k-th step row in the record; flagged rows and the final row are always kept.
    /// Observers still see every step.
    long record_every = 1;
    std::vector<Observer1D> observers;
};

struct RunResult1D {
    RunRecord record;
    State1D final_state;
};

/// Fixed-step time loop from t0 to cfg.T. The step count is ceil((T - t0) / tau); the last
/// step is shortened when T - t0 is not a multiple of tau.
RunResult1D run(const State1D& state0, const PmeModel& model, const SchemeConfig& cfg, const RunOptions1D& opts = {});

} // namespace pme
