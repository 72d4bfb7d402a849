#include "pme/harness.hpp"

#include "pme/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace pme {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json number(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

std::function<double(double)> profile_1d(const ExperimentConfig& cfg, double t0)
{
    const ProblemConfig& p = cfg.problem;
    if (p.initial == "barenblatt") {
        const BarenblattParams bp(p.m, 1, p.C);
        return [bp, t0](double x) {
            const double q[1] = {x};
            return barenblatt(q, t0, bp);
        };
    }
    const WaitingTimeParams1D wp{p.theta, p.m};
    return [wp](double x) { return waiting_time_initial_1d(x, wp); };
}

std::function<double(double, double)> profile_2d(const ExperimentConfig& cfg, double t0)
{
    const ProblemConfig& p = cfg.problem;
    if (p.initial == "barenblatt") {
        const BarenblattParams bp(p.m, 2, p.C);
        return [bp, t0](double x, double y) {
            const double q[2] = {x, y};
            return barenblatt(q, t0, bp);
        };
    }
    if (p.initial == "waiting2d") {
        return waiting_time_initial_2d;
    }
    if (p.initial == "horseshoe") {
        return horseshoe_initial;
    }
    return two_peak_initial;
}

Snapshot load_snapshot_for(const ExperimentConfig& cfg, const std::string& field, const std::string& path)
{
    try {
        return load_snapshot(path);
    } catch (const std::exception& e) {
        throw ConfigError(cfg.source, 0, field, e.what());
    }
}

State1D initial_1d(const ExperimentConfig& cfg, double t0)
{
    const MeshConfig& mc = cfg.mesh;
    const auto f = profile_1d(cfg, t0);
    double a = -M_PI;
    double b = 0.0;
    if (cfg.problem.initial == "barenblatt") {
        b = barenblatt_support_radius(t0, BarenblattParams(cfg.problem.m, 1, cfg.problem.C));
        a = -b;
    }
    if (mc.kind == "uniform") {
        return interpolate(uniform_mesh(a, b, static_cast<std::size_t>(mc.n)), f);
    }
    if (mc.kind == "bestfit") {
        BestFitOptions opts;
        opts.max_iter = mc.max_iter;
        opts.min_gap_factor = mc.min_gap;
        BestFitResult fit = best_fit_mesh(f, a, b, static_cast<std::size_t>(mc.n), opts);
        if (mc.data == "fit") {
            return State1D(std::move(fit.mesh), std::move(fit.coefficients));
        }
        return interpolate(fit.mesh, f);
    }
    const Snapshot snap = load_snapshot_for(cfg, "mesh.path", mc.path);
    if (snap.dim() != 1) {
        throw ConfigError(cfg.source, 0, "mesh.path", "expected a 1D snapshot");
    }
    return interpolate(std::get<State1D>(snap.state).mesh, f);
}

State2D initial_2d(const ExperimentConfig& cfg, double t0)
{
    const MeshConfig& mc = cfg.mesh;
    const auto f = profile_2d(cfg, t0);
    TriMesh mesh;
    if (mc.kind == "disk") {
        double radius = mc.radius;
        if (radius == 0.0) {
            radius = cfg.problem.initial == "barenblatt"
                         ? barenblatt_support_radius(t0, BarenblattParams(cfg.problem.m, 2, cfg.problem.C))
                         : M_PI;
        }
        mesh = disk_mesh(radius, mc.n);
    } else if (mc.kind == "square") {
        mesh = square_mesh(mc.x0, mc.x1, mc.y0, mc.y1, mc.n);
    } else if (mc.kind == "horseshoe") {
        mesh = horseshoe_mesh(mc.n);
    } else {
        try {
            mesh = load_mesh(mc.path);
        } catch (const std::exception& e) {
            throw ConfigError(cfg.source, 0, "mesh.path", e.what());
        }
    }
    return interpolate(mesh, f);
}

struct Outcome {
    RunRecord record;
    std::variant<State1D, State2D> final_state;
};

// Runs the time loop; snapshots go to snap_dir every `every` steps when every > 0.
Outcome execute(const ExperimentConfig& cfg, const InitialData& init, const fs::path& snap_dir, long every,
                long record_every)
{
    long count = 0;
    auto should_write = [&]() {
        const bool w = every > 0 && count % every == 0;
        ++count;
        return w;
    };
    auto snap_path = [&](long k) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%07ld.txt", k);
        return snap_dir / name;
    };
    if (const auto* s1 = std::get_if<State1D>(&init.state)) {
        SchemeConfig sc = cfg.scheme;
        RunOptions1D opts;
        opts.t0 = init.t0;
        opts.strict = cfg.strict;
        opts.record_every = record_every;
        if (every > 0) {
            opts.observers.push_back([&](const State1D& s, const DiagRow& row) {
                const long k = count;
                if (should_write()) {
                    std::ofstream out(snap_path(k), std::ios::binary);
                    write_snapshot(out, s, init.model.m(), row.t);
                }
            });
        }
        RunResult1D res = run(*s1, init.model, sc, opts);
        return {std::move(res.record), std::move(res.final_state)};
    }
    RunOptions2D opts;
    opts.t0 = init.t0;
    opts.strict = cfg.strict;
    opts.record_every = record_every;
    if (every > 0) {
        opts.observers.push_back([&](const State2D& s, const DiagRow& row) {
            const long k = count;
            if (should_write()) {
                std::ofstream out(snap_path(k), std::ios::binary);
                write_snapshot(out, s, init.model.m(), row.t);
            }
        });
    }
    RunResult2D res = run2d(std::get<State2D>(init.state), init.model, scheme_2d(cfg), opts);
    return {std::move(res.record), std::move(res.final_state)};
}

double final_error(const ExperimentConfig& cfg, const std::variant<State1D, State2D>& state)
{
    const double T = cfg.scheme.T;
    const ProblemConfig& p = cfg.problem;
    if (const auto* s1 = std::get_if<State1D>(&state)) {
        const BarenblattParams bp(p.m, 1, p.C);
        const double r = barenblatt_support_radius(T, bp);
        const double L = 1.5 * std::max({r, std::abs(s1->mesh.left()), std::abs(s1->mesh.right())}) + 1.0;
        return l2_error(*s1, profile_1d(cfg, T), gauss_legendre(cfg.scheme.quad_order), -L, L);
    }
    const auto& s2 = std::get<State2D>(state);
    const BarenblattParams bp(p.m, 2, p.C);
    double L = barenblatt_support_radius(T, bp);
    for (const Point2& q : s2.mesh.vertices()) {
        L = std::max({L, std::abs(q.x), std::abs(q.y)});
    }
    L = 1.3 * L + 0.1;
    return l2_error(s2, profile_2d(cfg, T), triangle_rule(cfg.tri_degree), Box{-L, L, -L, L});
}

std::size_t unknown_count(const std::variant<State1D, State2D>& state)
{
    if (const auto* s1 = std::get_if<State1D>(&state)) {
        return s1->mesh.cells();
    }
    return std::get<State2D>(state).mesh.num_vertices();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

void write_json(const fs::path& path, const Json& j)
{
    write_text(path, j.dump(2) + "\n");
}

std::string csv_number(double v)
{
    return std::isfinite(v) ? format_double(v) : std::string();
}

Json config_json(const ExperimentConfig& cfg)
{
    Json j;
    j["dim"] = cfg.problem.dim;
    j["m"] = cfg.problem.m;
    j["initial"] = cfg.problem.initial;
    if (cfg.problem.initial == "barenblatt") {
        j["C"] = cfg.problem.C;
    }
    if (cfg.problem.initial == "waiting1d") {
        j["theta"] = cfg.problem.theta;
    }
    j["mesh"] = cfg.mesh.kind;
    j["n"] = cfg.mesh.n;
    j["scheme"] = to_string(cfg.scheme.kind);
    j["tau"] = cfg.scheme.tau;
    j["T"] = cfg.scheme.T;
    j["strict"] = cfg.strict;
    return j;
}

Json flags_json(const RunRecord& rec)
{
    std::set<std::string> seen;
    for (const DiagRow& r : rec.rows) {
        std::istringstream ss(r.flags);
        std::string tok;
        while (ss >> tok) {
            seen.insert(tok);
        }
    }
    return Json(std::vector<std::string>(seen.begin(), seen.end()));
}

Json row_json(const DiagRow& r)
{
    Json j;
    j["t"] = number(r.t);
    j["energy"] = number(r.energy);
    j["total_mass"] = number(r.total_mass);
    j["mass_vector_norm"] = number(r.mass_vector_norm);
    j["left"] = number(r.left);
    j["right"] = number(r.right);
    j["boundary_displacement"] = number(r.boundary_displacement);
    j["radius_mean"] = number(r.radius_mean);
    j["radius_min"] = number(r.radius_min);
    j["radius_max"] = number(r.radius_max);
    return j;
}

int run_like(const std::string& name, const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log,
             long record_every)
{
    const InitialData init = prepare(cfg);
    fs::create_directories(out_dir);
    const fs::path snap_dir = out_dir / "snapshots";
    if (cfg.output.snapshot_every > 0) {
        fs::create_directories(snap_dir);
    }
    const Outcome res = execute(cfg, init, snap_dir, cfg.output.snapshot_every, record_every);
    const RunRecord& rec = res.record;

    std::visit([&](const auto& s) { save_snapshot(out_dir / "final.txt", Snapshot{cfg.problem.m, rec.rows.back().t, s}); },
               res.final_state);
    if (cfg.has_csv()) {
        std::ofstream out(out_dir / "diag.csv", std::ios::binary);
        write_diag_csv(out, rec.rows);
    }

    const auto wt = waiting_time_estimate(rec, cfg.waiting_delta);
    bool monotone = true;
    double worst_identity = 0.0;
    for (std::size_t i = 1; i < rec.rows.size(); ++i) {
        monotone = monotone && rec.rows[i].energy <= rec.rows[i - 1].energy + 1e-10 * std::abs(rec.rows[i - 1].energy);
        worst_identity = std::max(worst_identity, rec.rows[i].energy_identity_residual);
    }
    if (cfg.has_json()) {
        Json j;
        j["command"] = name;
        j["config"] = config_json(cfg);
        j["t0"] = init.t0;
        j["steps"] = rec.steps;
        j["stopped_early"] = rec.stopped_early;
        j["stop_reason"] = rec.stop_reason;
        j["initial"] = row_json(rec.rows.front());
        j["final"] = row_json(rec.rows.back());
        j["mass_drift"] = number(std::abs(rec.rows.back().total_mass - rec.rows.front().total_mass));
        j["energy_monotone"] = monotone;
        if (cfg.problem.dim == 2 || cfg.scheme.kind == SchemeKind::explicit_euler) {
            j["max_energy_identity_residual"] = number(worst_identity);
        }
        j["initial_diameter"] = rec.initial_diameter;
        j["waiting_delta"] = cfg.waiting_delta;
        j["waiting_time"] = wt ? Json(*wt - init.t0) : Json(nullptr);
        if (cfg.problem.initial == "waiting1d" && cfg.problem.theta <= 0.25) {
            j["critical_waiting_time"] = critical_waiting_time({cfg.problem.theta, cfg.problem.m});
        }
        j["flags"] = flags_json(rec);
        write_json(out_dir / "summary.json", j);
    }

    log << name << ": " << rec.steps << " steps, t=" << format_double(rec.rows.back().t);
    if (wt) {
        log << ", waiting time " << format_double(*wt - init.t0);
    }
    log << "\n";
    if (rec.stopped_early) {
        log << name << ": stopped early: " << rec.stop_reason << "\n";
        return exit_stopped;
    }
    return exit_ok;
}

void require_levels(const ExperimentConfig& cfg)
{
    if (cfg.levels.size() < 2) {
        throw ConfigError(cfg.source, 0, "converge.levels", "at least two levels are needed");
    }
}

struct LevelResult {
    int level;
    std::size_t n;
    double tau;
    double mass_t0;
    double mass_T;
    double error;
    bool stopped;
    std::string stop_reason;
};

std::vector<LevelResult> run_levels(const ExperimentConfig& cfg, bool want_error, std::ostream& log,
                                    const std::string& name)
{
    std::vector<LevelResult> out;
    for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
        ExperimentConfig c = cfg;
        c.mesh.n = cfg.levels[l];
        c.scheme.tau = cfg.scheme.tau / std::pow(4.0, static_cast<double>(l));
        const InitialData init = prepare(c);
        const Outcome res = execute(c, init, {}, 0, 1L << 40);
        LevelResult r{static_cast<int>(l),
                      unknown_count(init.state),
                      c.scheme.tau,
                      res.record.rows.front().total_mass,
                      res.record.rows.back().total_mass,
                      std::nan(""),
                      res.record.stopped_early,
                      res.record.stop_reason};
        if (want_error && !r.stopped) {
            r.error = final_error(c, res.final_state);
        }
        log << name << ": level " << l << " N=" << r.n << " tau=" << format_double(r.tau)
            << (r.stopped ? " stopped: " + r.stop_reason : std::string()) << "\n";
        out.push_back(r);
    }
    return out;
}

std::vector<double> orders_of(const std::vector<double>& values, const std::vector<LevelResult>& levels, int dim)
{
    std::vector<double> ns;
    for (const auto& l : levels) {
        ns.push_back(static_cast<double>(l.n));
    }
    return convergence_order(values, ns, dim);
}

} // namespace

InitialData prepare(const ExperimentConfig& cfg)
{
    const ProblemConfig& p = cfg.problem;
    if (p.initial == "snapshot") {
        Snapshot snap = load_snapshot_for(cfg, "problem.snapshot", p.snapshot);
        if (snap.dim() != p.dim) {
            throw ConfigError(cfg.source, 0, "problem.snapshot", "snapshot dimension differs from problem.dim");
        }
        if (snap.m != p.m) {
            throw ConfigError(cfg.source, 0, "problem.m", "differs from the snapshot exponent");
        }
        const double t0 = p.t0 ? *p.t0 : snap.t;
        if (cfg.scheme.T < t0) {
            throw ConfigError(cfg.source, 0, "scheme.T", "final time precedes the snapshot time");
        }
        return {PmeModel(p.m, p.dim), t0, std::move(snap.state)};
    }
    const double t0 = cfg.start_time();
    if (p.dim == 1) {
        return {PmeModel(p.m, 1), t0, initial_1d(cfg, t0)};
    }
    return {PmeModel(p.m, 2), t0, initial_2d(cfg, t0)};
}

SchemeConfig2D scheme_2d(const ExperimentConfig& cfg)
{
    SchemeConfig2D s;
    s.tau = cfg.scheme.tau;
    s.T = cfg.scheme.T;
    s.quad_degree = cfg.tri_degree;
    s.cg_tol = cfg.cg_tol;
    return s;
}

int cmd_run(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log)
{
    return run_like("run", cfg, out_dir, log, cfg.output.record_every);
}

int cmd_waiting_time(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log)
{
    // every step is kept so that the first crossing is resolved to one step
    return run_like("waiting-time", cfg, out_dir, log, 1);
}

int cmd_converge(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log)
{
    require_levels(cfg);
    if (cfg.problem.initial != "barenblatt") {
        throw ConfigError(cfg.source, 0, "problem.initial", "convergence studies need Barenblatt data");
    }
    const auto levels = run_levels(cfg, true, log, "converge");
    std::vector<double> errors;
    for (const auto& l : levels) {
        errors.push_back(l.error);
    }
    const auto orders = orders_of(errors, levels, cfg.problem.dim);

    fs::create_directories(out_dir);
    if (cfg.has_csv()) {
        std::ostringstream csv;
        csv << "N,tau,err_L2,order\n";
        for (std::size_t l = 0; l < levels.size(); ++l) {
            csv << levels[l].n << ',' << format_double(levels[l].tau) << ',' << csv_number(errors[l]) << ','
                << (l == 0 ? std::string() : csv_number(orders[l - 1])) << "\n";
        }
        write_text(out_dir / "converge.csv", csv.str());
    }
    bool stopped = false;
    if (cfg.has_json()) {
        Json j;
        j["command"] = "converge";
        j["config"] = config_json(cfg);
        Json rows = Json::array();
        for (std::size_t l = 0; l < levels.size(); ++l) {
            Json r;
            r["N"] = levels[l].n;
            r["tau"] = levels[l].tau;
            r["err_L2"] = number(errors[l]);
            r["order"] = l == 0 ? Json(nullptr) : number(orders[l - 1]);
            r["stopped_early"] = levels[l].stopped;
            r["stop_reason"] = levels[l].stop_reason;
            rows.push_back(r);
        }
        j["levels"] = rows;
        write_json(out_dir / "summary.json", j);
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
        stopped = stopped || levels[l].stopped;
        log << "N=" << levels[l].n << " err=" << csv_number(errors[l])
            << (l == 0 ? std::string() : " order=" + csv_number(orders[l - 1])) << "\n";
    }
    return stopped ? exit_stopped : exit_ok;
}

int cmd_mass_table(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log)
{
    require_levels(cfg);
    if (cfg.problem.dim != 1 || cfg.problem.m != 2.0 || cfg.problem.initial != "barenblatt") {
        throw ConfigError(cfg.source, 0, "problem", "the mass table is defined for 1D Barenblatt data with m = 2");
    }
    const auto levels = run_levels(cfg, false, log, "mass-table");
    std::vector<double> drift;
    std::vector<double> unit;
    for (const auto& l : levels) {
        drift.push_back(std::abs(l.mass_T - l.mass_t0));
        unit.push_back(std::abs(l.mass_T - 1.0));
    }
    const auto drift_order = orders_of(drift, levels, 1);
    const auto unit_order = orders_of(unit, levels, 1);

    fs::create_directories(out_dir);
    if (cfg.has_csv()) {
        std::ostringstream csv;
        csv << "N,tau,mass_t0,mass_T,drift,drift_order,unit_error,unit_order\n";
        for (std::size_t l = 0; l < levels.size(); ++l) {
            csv << levels[l].n << ',' << format_double(levels[l].tau) << ',' << format_double(levels[l].mass_t0) << ','
                << format_double(levels[l].mass_T) << ',' << format_double(drift[l]) << ','
                << (l == 0 ? std::string() : csv_number(drift_order[l - 1])) << ',' << format_double(unit[l]) << ','
                << (l == 0 ? std::string() : csv_number(unit_order[l - 1])) << "\n";
        }
        write_text(out_dir / "mass_table.csv", csv.str());
    }
    bool stopped = false;
    if (cfg.has_json()) {
        Json j;
        j["command"] = "mass-table";
        j["config"] = config_json(cfg);
        Json rows = Json::array();
        for (std::size_t l = 0; l < levels.size(); ++l) {
            Json r;
            r["N"] = levels[l].n;
            r["tau"] = levels[l].tau;
            r["mass_t0"] = levels[l].mass_t0;
            r["mass_T"] = levels[l].mass_T;
            r["drift"] = drift[l];
            r["drift_order"] = l == 0 ? Json(nullptr) : number(drift_order[l - 1]);
            r["unit_error"] = unit[l];
            r["unit_order"] = l == 0 ? Json(nullptr) : number(unit_order[l - 1]);
            r["stopped_early"] = levels[l].stopped;
            rows.push_back(r);
        }
        j["levels"] = rows;
        write_json(out_dir / "summary.json", j);
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
        stopped = stopped || levels[l].stopped;
        log << "N=" << levels[l].n << " drift=" << format_double(drift[l]) << " |M-1|=" << format_double(unit[l])
            << "\n";
    }
    return stopped ? exit_stopped : exit_ok;
}

int cmd_mesh_gen(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log)
{
    const InitialData init = prepare(cfg);
    fs::create_directories(out_dir);
    if (const auto* s2 = std::get_if<State2D>(&init.state)) {
        save_mesh(out_dir / "mesh.txt", s2->mesh);
        const MeshQuality q = mesh_quality(s2->mesh);
        log << "mesh-gen: " << s2->mesh.num_vertices() << " vertices, " << s2->mesh.num_cells()
            << " cells, min angle " << format_double(q.min_angle_deg) << "\n";
    } else {
        log << "mesh-gen: " << std::get<State1D>(init.state).mesh.cells() << " cells\n";
    }
    std::visit([&](const auto& s) { save_snapshot(out_dir / "initial.txt", Snapshot{cfg.problem.m, init.t0, s}); },
               init.state);
    return exit_ok;
}

int dispatch(const CliRequest& req, std::ostream& log, std::ostream& err)
{
    try {
        ExperimentConfig cfg = load_config(req.config);
        if (!req.out.empty()) {
            cfg.output.dir = req.out;
        }
        cfg.strict = cfg.strict || req.strict;
        if (req.quad_order > 0) {
            if (cfg.problem.dim == 2) {
                cfg.tri_degree = req.quad_order;
            } else {
                cfg.scheme.quad_order = req.quad_order;
            }
        }
        validate(cfg);
        const fs::path out = cfg.output.dir;
        if (req.command == "run") {
            return cmd_run(cfg, out, log);
        }
        if (req.command == "waiting-time") {
            return cmd_waiting_time(cfg, out, log);
        }
        if (req.command == "converge") {
            return cmd_converge(cfg, out, log);
        }
        if (req.command == "mass-table") {
            return cmd_mass_table(cfg, out, log);
        }
        if (req.command == "mesh-gen") {
            return cmd_mesh_gen(cfg, out, log);
        }
        err << "unknown command '" << req.command << "'\n";
        return exit_config;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_runtime;
    }
}

} // namespace pme
