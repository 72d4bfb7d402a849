#include "pme/scheme1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pme {

std::string to_string(SchemeKind kind)
{
    switch (kind) {
    case SchemeKind::explicit_euler:
        return "explicit";
    case SchemeKind::implicit:
        return "implicit";
    case SchemeKind::modified_explicit:
        return "modified-explicit";
    case SchemeKind::modified_implicit:
        return "modified-implicit";
    }
    return "unknown";
}

SchemeKind parse_scheme_kind(const std::string& name)
{
    if (name == "explicit") {
        return SchemeKind::explicit_euler;
    }
    if (name == "implicit") {
        return SchemeKind::implicit;
    }
    if (name == "modified-explicit") {
        return SchemeKind::modified_explicit;
    }
    if (name == "modified-implicit") {
        return SchemeKind::modified_implicit;
    }
    throw std::invalid_argument("unknown scheme kind '" + name + "'");
}

void SchemeConfig::validate() const
{
    if (!(tau > 0.0)) {
        throw std::invalid_argument("scheme: tau must be positive");
    }
    if (!(T >= 0.0)) {
        throw std::invalid_argument("scheme: T must be nonnegative");
    }
    if (!(eps > 0.0)) {
        throw std::invalid_argument("scheme: eps must be positive");
    }
    if (max_fp_iter < 1) {
        throw std::invalid_argument("scheme: max_fp_iter must be at least 1");
    }
    if (quad_order < 1) {
        throw std::invalid_argument("scheme: quad_order must be at least 1");
    }
}

namespace {

bool all_zero(std::span<const double> b)
{
    return std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; });
}

// Tridiagonal SPD solve; a failed pivot falls back to the dense minimum-norm solution.
Vector solve_spd(const TriDiagMatrix& a, std::span<const double> b, StepReport& report)
{
    if (all_zero(b)) {
        return Vector(b.size(), 0.0);
    }
    try {
        Vector x = solve_tridiag_spd(a, b);
        const Vector ax = a.multiply(x);
        double r = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            r = std::max(r, std::abs(ax[i] - b[i]));
        }
        report.residual = std::max(report.residual, r / std::max(norm_inf(b), std::numeric_limits<double>::min()));
        return x;
    } catch (const PivotError&) {
        report.solver_fallback = true;
        DenseSolveResult res = solve_dense_lu(to_dense(a), b);
        report.rank_deficient = report.rank_deficient || res.rank_deficient;
        report.residual = std::max(report.residual, res.relative_residual);
        return std::move(res.x);
    }
}

State1D advance(const State1D& state, std::span<const double> drho, std::span<const double> v, double tau)
{
    std::vector<double> knots(state.mesh.knots().begin(), state.mesh.knots().end());
    for (std::size_t i = 0; i < knots.size(); ++i) {
        knots[i] += tau * v[i];
    }
    std::vector<double> rho = state.rho;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        rho[i] += tau * drho[i];
    }
    return State1D(Mesh1D(std::move(knots)), std::move(rho));
}

double linf_diff(std::span<const double> a, std::span<const double> b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

void finish_report(StepReport& report, const State1D& before, const State1D& after, const System1D& sys,
                   const PmeModel& model, const QuadratureRule& rule)
{
    report.energy_before = discrete_energy(before, model, rule);
    report.energy_after = discrete_energy(after, model, rule);
    report.mass_before = total_mass(before);
    report.mass_after = total_mass(after);
    report.dissipation = 0.5 * dot(report.v, sys.D.multiply(report.v));
    report.energy_rate = dot(sys.grad_rho, report.drho) + dot(sys.grad_x, report.v);
    report.assumptions = check_assumptions(after);
}

// One pass of the base scheme with a given right-hand side for the multiplier system.
void base_pass(const System1D& sys, std::span<const double> grad_rho, StepReport& report)
{
    report.lambda = solve_spd(sys.M, grad_rho, report);
    const BandedRect bme = sys.B - sys.E;
    Vector rhs_v = bme.multiply_transposed(report.lambda);
    for (std::size_t i = 0; i < rhs_v.size(); ++i) {
        rhs_v[i] -= sys.grad_x[i];
    }
    report.v = solve_spd(sys.D, rhs_v, report);
    Vector rhs_rho = bme.multiply(report.v);
    for (double& r : rhs_rho) {
        r = -r;
    }
    report.drho = solve_spd(sys.M, rhs_rho, report);
}

QuadratureRule rule_for(const SchemeConfig& cfg)
{
    return gauss_legendre(cfg.quad_order);
}

Vector modified_rhs(const System1D& sys, std::span<const double> grad_rho)
{
    const std::size_t n1 = sys.D.size();
    const std::size_t ni = sys.M.size();
    Vector rhs(ni + n1 + n1, 0.0);
    std::copy(grad_rho.begin(), grad_rho.end(), rhs.begin());
    for (std::size_t i = 0; i < n1; ++i) {
        rhs[ni + i] = -sys.grad_x[i];
    }
    return rhs;
}

void unpack_modified(const System1D& sys, const DenseSolveResult& sol, StepReport& report)
{
    const std::size_t n1 = sys.D.size();
    const std::size_t ni = sys.M.size();
    report.lambda.assign(sol.x.begin(), sol.x.begin() + static_cast<long>(n1));
    report.v.assign(sol.x.begin() + static_cast<long>(n1), sol.x.begin() + static_cast<long>(2 * n1));
    report.drho.assign(sol.x.begin() + static_cast<long>(2 * n1), sol.x.begin() + static_cast<long>(2 * n1 + ni));
    report.rank_deficient = report.rank_deficient || sol.rank_deficient;
    report.residual = std::max(report.residual, sol.relative_residual);
}

} // namespace

DenseMatrix modified_system_matrix(const System1D& sys)
{
    const std::size_t n1 = sys.D.size();
    const std::size_t ni = sys.M.size();
    if (sys.Bhat.rows() != n1) {
        throw std::invalid_argument("modified_system_matrix: system assembled without the full multiplier space");
    }
    const std::size_t n = 2 * n1 + ni;
    DenseMatrix k(n, n);
    const BandedRect bme = sys.Bhat - sys.Ehat;
    for (std::size_t r = 0; r < ni; ++r) {
        for (std::size_t c = 0; c < n1; ++c) {
            const double m = sys.Mhat.at(r, c);
            k(r, c) = m;
            // transpose block: row (v-equation block 3) c, column drho r
            k(ni + n1 + c, 2 * n1 + r) = m;
        }
    }
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n1; ++j) {
            const double b = bme.at(i, j);
            // -(Bhat - Ehat)^T lambda_hat + D v = -grad_x
            k(ni + j, i) = -b;
            k(ni + i, n1 + j) = sys.D.at(i, j);
            // (Bhat - Ehat) v + Mhat^T drho = 0
            k(ni + n1 + i, n1 + j) = b;
        }
    }
    return k;
}

StepResult explicit_step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg)
{
    const QuadratureRule rule = rule_for(cfg);
    const System1D sys = assemble_system(state, model, rule);
    StepReport report;
    base_pass(sys, sys.grad_rho, report);
    report.fp_iters = 1;
    State1D next = advance(state, report.drho, report.v, cfg.tau);
    finish_report(report, state, next, sys, model, rule);
    return {std::move(next), std::move(report)};
}

StepResult implicit_step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg)
{
    const QuadratureRule rule = rule_for(cfg);
    const System1D sys = assemble_system(state, model, rule);
    std::vector<double> history;
    State1D iterate = state;
    for (int k = 1; k <= cfg.max_fp_iter; ++k) {
        StepReport report;
        Vector grad_rho = sys.grad_rho;
        if (k > 1) {
            try {
                grad_rho = grad_energy_rho(iterate, model, rule);
            } catch (const std::domain_error& e) {
                throw FixedPointError(std::string("implicit_step: iterate left the admissible set: ") + e.what(),
                                      history);
            }
        }
        base_pass(sys, grad_rho, report);
        State1D next = advance(state, report.drho, report.v, cfg.tau);
        const double change =
            std::max(linf_diff(next.rho, iterate.rho), linf_diff(next.mesh.knots(), iterate.mesh.knots()));
        history.push_back(change);
        iterate = std::move(next);
        if (change <= cfg.eps) {
            report.fp_iters = k;
            finish_report(report, state, iterate, sys, model, rule);
            return {std::move(iterate), std::move(report)};
        }
    }
    std::ostringstream msg;
    msg << "implicit_step: fixed-point iteration did not converge in " << cfg.max_fp_iter
        << " iterations (last change " << history.back() << ")";
    throw FixedPointError(msg.str(), history);
}

StepResult modified_explicit_step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg)
{
    const QuadratureRule rule = rule_for(cfg);
    const System1D sys = assemble_system(state, model, rule, true);
    const DenseLU lu(modified_system_matrix(sys));
    StepReport report;
    unpack_modified(sys, lu.solve(modified_rhs(sys, sys.grad_rho)), report);
    report.fp_iters = 1;
    State1D next = advance(state, report.drho, report.v, cfg.tau);
    finish_report(report, state, next, sys, model, rule);
    return {std::move(next), std::move(report)};
}

StepResult modified_implicit_step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg)
{
    const QuadratureRule rule = rule_for(cfg);
    const System1D sys = assemble_system(state, model, rule, true);
    const DenseLU lu(modified_system_matrix(sys));
    std::vector<double> history;
    State1D iterate = state;
    for (int k = 1; k <= cfg.max_fp_iter; ++k) {
        StepReport report;
        Vector grad_rho = sys.grad_rho;
        if (k > 1) {
            try {
                grad_rho = grad_energy_rho(iterate, model, rule);
            } catch (const std::domain_error& e) {
                throw FixedPointError(
                    std::string("modified_implicit_step: iterate left the admissible set: ") + e.what(), history);
            }
        }
        unpack_modified(sys, lu.solve(modified_rhs(sys, grad_rho)), report);
        State1D next = advance(state, report.drho, report.v, cfg.tau);
        const double change =
            std::max(linf_diff(next.rho, iterate.rho), linf_diff(next.mesh.knots(), iterate.mesh.knots()));
        history.push_back(change);
        iterate = std::move(next);
        if (change <= cfg.eps) {
            report.fp_iters = k;
            finish_report(report, state, iterate, sys, model, rule);
            return {std::move(iterate), std::move(report)};
        }
    }
    std::ostringstream msg;
    msg << "modified_implicit_step: fixed-point iteration did not converge in " << cfg.max_fp_iter
        << " iterations (last change " << history.back() << ")";
    throw FixedPointError(msg.str(), history);
}

StepResult step(const State1D& state, const PmeModel& model, const SchemeConfig& cfg)
{
    switch (cfg.kind) {
    case SchemeKind::explicit_euler:
        return explicit_step(state, model, cfg);
    case SchemeKind::implicit:
        return implicit_step(state, model, cfg);
    case SchemeKind::modified_explicit:
        return modified_explicit_step(state, model, cfg);
    case SchemeKind::modified_implicit:
        return modified_implicit_step(state, model, cfg);
    }
    throw std::invalid_argument("step: unknown scheme kind");
}

namespace {

DiagRow make_row(double t, const State1D& state, double energy, const Vector& mass0, double a0, double b0)
{
    DiagRow row;
    row.t = t;
    row.energy = energy;
    row.total_mass = total_mass(state);
    const Vector mv = mass_vector(state);
    row.mass_vector_norm = linf_diff(mv, mass0);
    row.left = state.mesh.left();
    row.right = state.mesh.right();
    row.boundary_displacement = std::max(std::abs(row.left - a0), std::abs(row.right - b0));
    return row;
}

} // namespace

RunResult1D run(const State1D& state0, const PmeModel& model, const SchemeConfig& cfg, const RunOptions1D& opts)
{
    cfg.validate();
    if (opts.record_every < 1) {
        throw std::invalid_argument("run: record_every must be at least 1");
    }
    if (cfg.T < opts.t0) {
        throw std::invalid_argument("run: final time precedes the start time");
    }
    const QuadratureRule rule = rule_for(cfg);
    RunResult1D out{RunRecord{}, state0};
    RunRecord& rec = out.record;
    rec.initial_diameter = state0.mesh.right() - state0.mesh.left();
    const Vector mass0 = mass_vector(state0);
    const double a0 = state0.mesh.left();
    const double b0 = state0.mesh.right();

    DiagRow first = make_row(opts.t0, state0, discrete_energy(state0, model, rule), mass0, a0, b0);
    const AssumptionReport initial_check = check_assumptions(state0);
    if (!initial_check.a1_ok) {
        append_flag(first.flags, "A1");
    }
    if (!initial_check.a2_ok) {
        append_flag(first.flags, "A2");
    }
    rec.rows.push_back(first);
    for (const auto& obs : opts.observers) {
        obs(out.final_state, first);
    }
    if (!initial_check.a1_ok || (opts.strict && !initial_check.a2_ok)) {
        rec.stopped_early = true;
        rec.stop_reason = !initial_check.a1_ok ? "initial mesh violates A1" : "initial density violates A2";
        return out;
    }

    const double span = cfg.T - opts.t0;
    const auto n_steps = static_cast<long>(std::ceil(span / cfg.tau - 1e-9));
    SchemeConfig step_cfg = cfg;
    for (long n = 0; n < n_steps; ++n) {
        const double t_prev = opts.t0 + static_cast<double>(n) * cfg.tau;
        const double t_next = (n + 1 == n_steps) ? cfg.T : opts.t0 + static_cast<double>(n + 1) * cfg.tau;
        step_cfg.tau = t_next - t_prev;
        StepResult res = step(out.final_state, model, step_cfg);
        out.final_state = std::move(res.state);
        const StepReport& rep = res.report;

        DiagRow row = make_row(t_next, out.final_state, rep.energy_after, mass0, a0, b0);
        row.dissipation = rep.dissipation;
        row.fp_iters = rep.fp_iters;
        const double two_phi = 2.0 * rep.dissipation;
        row.energy_identity_residual =
            two_phi > 0.0 ? std::abs(rep.energy_rate + two_phi) / two_phi : std::abs(rep.energy_rate);
        if (!rep.assumptions.a1_ok) {
            append_flag(row.flags, "A1");
        }
        if (!rep.assumptions.a2_ok) {
            append_flag(row.flags, "A2");
        }
        if (rep.rank_deficient) {
            append_flag(row.flags, "rank-deficient");
        }
        if (rep.solver_fallback) {
            append_flag(row.flags, "fallback");
        }
        if (rep.energy_after > rep.energy_before + 1e-10 * std::abs(rep.energy_before)) {
            append_flag(row.flags, "energy-increase");
        }
        const bool last = n + 1 == n_steps || !rep.assumptions.a1_ok || (opts.strict && !rep.assumptions.a2_ok);
        if (last || !row.flags.empty() || (n + 1) % opts.record_every == 0) {
            rec.rows.push_back(row);
        }
        rec.steps = static_cast<int>(n + 1);
        for (const auto& obs : opts.observers) {
            obs(out.final_state, row);
        }
        if (!rep.assumptions.a1_ok) {
            rec.stopped_early = true;
            rec.stop_reason = "mesh violates A1 at t=" + std::to_string(t_next);
            break;
        }
        if (opts.strict && !rep.assumptions.a2_ok) {
            rec.stopped_early = true;
            rec.stop_reason = "density violates A2 at t=" + std::to_string(t_next);
            break;
        }
    }
    return out;
}

} // namespace pme
