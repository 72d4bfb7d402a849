#include "pme/config.hpp"
#include "pme/diagnostics.hpp"
#include "pme/harness.hpp"
#include "pme/mesh1d.hpp"
#include "pme/mesh2d.hpp"
#include "pme/model.hpp"
#include "pme/scheme1d.hpp"
#include "pme/solver2d.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace pme;

namespace {

py::dict row_dict(const DiagRow& r)
{
    py::dict d;
    d["t"] = r.t;
    d["energy"] = r.energy;
    d["dissipation"] = r.dissipation;
    d["total_mass"] = r.total_mass;
    d["mass_vector_norm"] = r.mass_vector_norm;
    d["left"] = r.left;
    d["right"] = r.right;
    d["boundary_displacement"] = r.boundary_displacement;
    d["radius_mean"] = r.radius_mean;
    d["radius_min"] = r.radius_min;
    d["radius_max"] = r.radius_max;
    d["fp_iters"] = r.fp_iters;
    d["energy_identity_residual"] = r.energy_identity_residual;
    d["flags"] = r.flags;
    return d;
}

py::dict record_dict(const RunRecord& rec)
{
    py::list rows;
    for (const DiagRow& r : rec.rows) {
        rows.append(row_dict(r));
    }
    py::dict d;
    d["rows"] = rows;
    d["initial_diameter"] = rec.initial_diameter;
    d["stopped_early"] = rec.stopped_early;
    d["stop_reason"] = rec.stop_reason;
    d["steps"] = rec.steps;
    return d;
}

std::vector<std::array<double, 2>> vertex_list(const TriMesh& mesh)
{
    std::vector<std::array<double, 2>> out;
    out.reserve(mesh.num_vertices());
    for (const Point2& p : mesh.vertices()) {
        out.push_back({p.x, p.y});
    }
    return out;
}

TriMesh make_trimesh(const std::vector<std::array<double, 2>>& verts, std::vector<Cell> cells,
                     std::vector<bool> boundary)
{
    std::vector<Point2> pts;
    pts.reserve(verts.size());
    for (const auto& v : verts) {
        pts.push_back({v[0], v[1]});
    }
    return TriMesh(std::move(pts), std::move(cells), std::move(boundary));
}

} // namespace

PYBIND11_MODULE(pme, mod)
{
    mod.doc() = "Moving-mesh finite elements for the porous medium equation";

    py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
    py::register_exception<FixedPointError>(mod, "FixedPointError", PyExc_RuntimeError);

    py::class_<PmeModel>(mod, "PmeModel")
        .def(py::init<double, int>(), py::arg("m"), py::arg("dim") = 1)
        .def_property_readonly("m", &PmeModel::m)
        .def_property_readonly("dim", &PmeModel::dim)
        .def("f", &PmeModel::f)
        .def("df", &PmeModel::df);

    py::class_<BarenblattParams>(mod, "BarenblattParams")
        .def(py::init<double, int, double>(), py::arg("m"), py::arg("dim"), py::arg("C"))
        .def_readonly("m", &BarenblattParams::m)
        .def_readonly("dim", &BarenblattParams::dim)
        .def_readonly("C", &BarenblattParams::C)
        .def_readonly("alpha", &BarenblattParams::alpha)
        .def_readonly("beta", &BarenblattParams::beta)
        .def_readonly("k", &BarenblattParams::k);

    mod.def(
        "barenblatt",
        [](const std::vector<double>& point, double t, const BarenblattParams& p) { return barenblatt(point, t, p); },
        py::arg("point"), py::arg("t"), py::arg("params"));
    mod.def("barenblatt_support_radius", &barenblatt_support_radius, py::arg("t"), py::arg("params"));
    mod.def(
        "critical_waiting_time",
        [](double theta, double m) { return critical_waiting_time({theta, m}); }, py::arg("theta"), py::arg("m"));

    py::class_<Mesh1D>(mod, "Mesh1D")
        .def(py::init<std::vector<double>>(), py::arg("knots"))
        .def_property_readonly("knots",
                               [](const Mesh1D& m) { return std::vector<double>(m.knots().begin(), m.knots().end()); })
        .def_property_readonly("cells", &Mesh1D::cells);

    py::class_<State1D>(mod, "State1D")
        .def(py::init<Mesh1D, std::vector<double>>(), py::arg("mesh"), py::arg("rho"))
        .def(py::init([](std::vector<double> knots, std::vector<double> rho) {
                 return State1D(Mesh1D(std::move(knots)), std::move(rho));
             }),
             py::arg("knots"), py::arg("rho"))
        .def_readonly("mesh", &State1D::mesh)
        .def_readonly("rho", &State1D::rho)
        .def_property_readonly("knots",
                               [](const State1D& s) {
                                   return std::vector<double>(s.mesh.knots().begin(), s.mesh.knots().end());
                               })
        .def("eval", [](const State1D& s, double x) { return eval_rho(s, x); }, py::arg("x"));

    mod.def("uniform_mesh", &uniform_mesh, py::arg("a"), py::arg("b"), py::arg("n_cells"));
    mod.def(
        "interpolate_1d", [](const Mesh1D& mesh, const std::function<double(double)>& f) { return interpolate(mesh, f); },
        py::arg("mesh"), py::arg("f"));
    mod.def(
        "best_fit_mesh",
        [](const std::function<double(double)>& f, double a, double b, std::size_t n, double min_gap_factor) {
            BestFitOptions o;
            o.min_gap_factor = min_gap_factor;
            const BestFitResult r = best_fit_mesh(f, a, b, n, o);
            return py::make_tuple(State1D(r.mesh, r.coefficients), r.l2_error, r.converged);
        },
        py::arg("f"), py::arg("a"), py::arg("b"), py::arg("n_cells"), py::arg("min_gap_factor") = 1e-3);

    py::enum_<SchemeKind>(mod, "SchemeKind")
        .value("explicit", SchemeKind::explicit_euler)
        .value("implicit", SchemeKind::implicit)
        .value("modified_explicit", SchemeKind::modified_explicit)
        .value("modified_implicit", SchemeKind::modified_implicit);

    py::class_<SchemeConfig>(mod, "SchemeConfig")
        .def(py::init<>())
        .def_readwrite("kind", &SchemeConfig::kind)
        .def_readwrite("tau", &SchemeConfig::tau)
        .def_readwrite("T", &SchemeConfig::T)
        .def_readwrite("eps", &SchemeConfig::eps)
        .def_readwrite("max_fp_iter", &SchemeConfig::max_fp_iter)
        .def_readwrite("quad_order", &SchemeConfig::quad_order);

    py::class_<StepReport>(mod, "StepReport")
        .def_readonly("lam", &StepReport::lambda)
        .def_readonly("v", &StepReport::v)
        .def_readonly("drho", &StepReport::drho)
        .def_readonly("fp_iters", &StepReport::fp_iters)
        .def_readonly("energy_before", &StepReport::energy_before)
        .def_readonly("energy_after", &StepReport::energy_after)
        .def_readonly("dissipation", &StepReport::dissipation)
        .def_readonly("mass_before", &StepReport::mass_before)
        .def_readonly("mass_after", &StepReport::mass_after)
        .def_readonly("energy_rate", &StepReport::energy_rate)
        .def_readonly("rank_deficient", &StepReport::rank_deficient);

    mod.def(
        "step",
        [](const State1D& s, const PmeModel& model, const SchemeConfig& cfg) {
            StepResult r = step(s, model, cfg);
            return py::make_tuple(std::move(r.state), std::move(r.report));
        },
        py::arg("state"), py::arg("model"), py::arg("config"));
    mod.def(
        "run",
        [](const State1D& s, const PmeModel& model, const SchemeConfig& cfg, double t0, long record_every, bool strict) {
            RunOptions1D o;
            o.t0 = t0;
            o.record_every = record_every;
            o.strict = strict;
            std::optional<RunResult1D> r;
            {
                py::gil_scoped_release release;
                r = run(s, model, cfg, o);
            }
            return py::make_tuple(std::move(r->final_state), record_dict(r->record));
        },
        py::arg("state"), py::arg("model"), py::arg("config"), py::arg("t0") = 0.0, py::arg("record_every") = 1,
        py::arg("strict") = false);

    mod.def("discrete_energy",
            [](const State1D& s, const PmeModel& model) { return discrete_energy(s, model, default_rule_1d()); });
    mod.def("discrete_energy", [](const State2D& s, const PmeModel& model) {
        return discrete_energy(s, model, triangle_rule(5));
    });
    mod.def("total_mass", py::overload_cast<const State1D&>(&total_mass));
    mod.def("total_mass", py::overload_cast<const State2D&>(&total_mass));
    mod.def(
        "convergence_order",
        [](const std::vector<double>& errors, const std::vector<double>& ns, int dim) {
            return convergence_order(errors, ns, dim);
        },
        py::arg("errors"), py::arg("ns"), py::arg("dim") = 1);

    py::class_<TriMesh>(mod, "TriMesh")
        .def(py::init(&make_trimesh), py::arg("vertices"), py::arg("cells"), py::arg("boundary"))
        .def_property_readonly("vertices", &vertex_list)
        .def_property_readonly("cells", &TriMesh::cells)
        .def_property_readonly("boundary", &TriMesh::boundary)
        .def_property_readonly("num_vertices", &TriMesh::num_vertices)
        .def_property_readonly("num_cells", &TriMesh::num_cells)
        .def_property_readonly("num_interior", &TriMesh::num_interior);

    py::class_<State2D>(mod, "State2D")
        .def(py::init<TriMesh, std::vector<double>>(), py::arg("mesh"), py::arg("rho"))
        .def_readonly("mesh", &State2D::mesh)
        .def_readonly("rho", &State2D::rho);

    mod.def("disk_mesh", &disk_mesh, py::arg("radius"), py::arg("rings"));
    mod.def("square_mesh", &square_mesh, py::arg("x0"), py::arg("x1"), py::arg("y0"), py::arg("y1"), py::arg("n"));
    mod.def(
        "interpolate_2d",
        [](const TriMesh& mesh, const std::function<double(double, double)>& f) { return interpolate(mesh, f); },
        py::arg("mesh"), py::arg("f"));

    py::class_<SchemeConfig2D>(mod, "SchemeConfig2D")
        .def(py::init<>())
        .def_readwrite("tau", &SchemeConfig2D::tau)
        .def_readwrite("T", &SchemeConfig2D::T)
        .def_readwrite("quad_degree", &SchemeConfig2D::quad_degree)
        .def_readwrite("cg_tol", &SchemeConfig2D::cg_tol);

    mod.def(
        "step_2d",
        [](const State2D& s, const PmeModel& model, const SchemeConfig2D& cfg) {
            StepResult2D r = explicit_step_2d(s, model, cfg);
            py::dict rep;
            rep["lam"] = r.report.lambda;
            rep["vx"] = r.report.vx;
            rep["vy"] = r.report.vy;
            rep["drho"] = r.report.drho;
            rep["energy_before"] = r.report.energy_before;
            rep["energy_after"] = r.report.energy_after;
            rep["dissipation"] = r.report.dissipation;
            rep["energy_rate"] = r.report.energy_rate;
            rep["tangled"] = r.report.quality.tangled;
            return py::make_tuple(std::move(r.state), rep);
        },
        py::arg("state"), py::arg("model"), py::arg("config"));
    mod.def(
        "run_2d",
        [](const State2D& s, const PmeModel& model, const SchemeConfig2D& cfg, double t0, long record_every,
           bool strict) {
            RunOptions2D o;
            o.t0 = t0;
            o.record_every = record_every;
            o.strict = strict;
            std::optional<RunResult2D> r;
            {
                py::gil_scoped_release release;
                r = run2d(s, model, cfg, o);
            }
            return py::make_tuple(std::move(r->final_state), record_dict(r->record));
        },
        py::arg("state"), py::arg("model"), py::arg("config"), py::arg("t0") = 0.0, py::arg("record_every") = 1,
        py::arg("strict") = false);

    // Same entry point as the command line tool; returns (exit status, log, error text).
    mod.def(
        "command",
        [](const std::string& name, const std::filesystem::path& config, const std::string& out, bool strict,
           int quad_order) {
            CliRequest req;
            req.command = name;
            req.config = config;
            req.out = out;
            req.strict = strict;
            req.quad_order = quad_order;
            std::ostringstream log, err;
            int rc = 0;
            {
                py::gil_scoped_release release;
                rc = dispatch(req, log, err);
            }
            return py::make_tuple(rc, log.str(), err.str());
        },
        py::arg("name"), py::arg("config"), py::arg("out") = "", py::arg("strict") = false, py::arg("quad_order") = 0);
}
