#include "doctest.h"
#include "support.hpp"

#include "pme/diagnostics.hpp"
#include "pme/solver2d.hpp"

#include <cmath>
#include <numbers>

using namespace pme;
using doctest::Approx;

namespace {

double mat_diff(const DenseMatrix& a, const Eigen::MatrixXd& b)
{
    return (testing::to_eigen(a) - b).cwiseAbs().maxCoeff();
}

State2D transformed(const State2D& s, double angle, double dx, double dy)
{
    std::vector<Point2> v = s.mesh.vertices();
    const double c = std::cos(angle), sn = std::sin(angle);
    for (Point2& p : v) {
        p = {c * p.x - sn * p.y + dx, sn * p.x + c * p.y + dy};
    }
    return State2D(TriMesh(std::move(v), s.mesh.cells(), s.mesh.boundary()), s.rho);
}

State2D barenblatt_disk(int rings)
{
    const BarenblattParams p(2.0, 2, 0.1);
    const double r = barenblatt_support_radius(1.0, p);
    return interpolate(disk_mesh(r, rings), [&](double x, double y) {
        const double q[2] = {x, y};
        return barenblatt(q, 1.0, p);
    });
}

} // namespace

TEST_CASE("mesh generators")
{
    const TriMesh one = disk_mesh(std::numbers::pi, 1);
    CHECK(one.num_vertices() == 7);
    CHECK(one.num_cells() == 6);
    for (int k = 1; k <= 8; ++k) {
        const TriMesh d = disk_mesh(std::numbers::pi, k);
        CHECK(d.num_vertices() == static_cast<std::size_t>(1 + 3 * k * (k + 1)));
        CHECK(d.num_cells() == static_cast<std::size_t>(6 * k * k));
        CHECK(d.boundary_vertices().size() == static_cast<std::size_t>(6 * k));
        for (std::size_t v : d.boundary_vertices()) {
            const Point2& p = d.vertices()[v];
            CHECK(std::hypot(p.x, p.y) == Approx(std::numbers::pi).epsilon(1e-14));
        }
        CHECK_FALSE(mesh_quality(d).tangled);
    }
    const TriMesh sq = square_mesh(-1.5, 1.5, -1.5, 1.5, 30);
    CHECK(sq.num_vertices() == 961);
    CHECK(sq.num_cells() == 1800);
    CHECK(sq.boundary_vertices().size() == 120);
    CHECK(mesh_quality(disk_mesh(1.0, 2)).min_angle_deg > 20.0);

    const TriMesh hs = horseshoe_mesh(8);
    CHECK_FALSE(mesh_quality(hs).tangled);
    CHECK(hs.num_interior() > 0);
}

TEST_CASE("mesh quality")
{
    const TriMesh t({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {true, true, true});
    const MeshQuality q = mesh_quality(t);
    CHECK(q.min_area == Approx(0.5));
    CHECK_FALSE(q.tangled);
    CHECK(q.min_angle_deg == Approx(45.0));
    const TriMesh r({{0, 0}, {1, 0}, {0, 1}}, {{0, 2, 1}}, {true, true, true});
    CHECK(mesh_quality(r).tangled);
}

TEST_CASE("point location and evaluation")
{
    const State2D s = interpolate(disk_mesh(1.0, 4), [](double x, double y) { return 1.0 + 0.3 * x - 0.2 * y; });
    const TriLocator loc(s.mesh);
    // interior cells reproduce the linear function exactly away from the boundary ring
    const double v = eval_rho(s, loc, {0.1, -0.2});
    CHECK(v == Approx(1.0 + 0.03 + 0.04).epsilon(1e-13));
    CHECK_FALSE(loc.locate({2.0, 0.0}).has_value());
}

TEST_CASE("psi on a single triangle")
{
    // rho = g . (x, y) restricted to the interior vertex: use a triangle with one interior vertex
    const TriMesh mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {false, true, true});
    const State2D s(mesh, {0.8});
    const TriLocator loc(s.mesh);
    const double g1 = -0.8, g2 = -0.8; // gradient of 0.8 (1 - x - y)
    const Point2 p{0.2, 0.3};
    const auto bary = barycentric(mesh, 0, p);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto [px, py] = eval_psi_xy(s, loc, i, p);
        CHECK(px == Approx(-g1 * bary[i]).epsilon(1e-13));
        CHECK(py == Approx(-g2 * bary[i]).epsilon(1e-13));
        // finite difference of rho_h(p) under a perturbation of vertex i
        const double d = 1e-6;
        for (int dir = 0; dir < 2; ++dir) {
            std::vector<Point2> a = mesh.vertices(), b = mesh.vertices();
            (dir == 0 ? a[i].x : a[i].y) += d;
            (dir == 0 ? b[i].x : b[i].y) -= d;
            const State2D sa(TriMesh(a, mesh.cells(), mesh.boundary()), s.rho);
            const State2D sb(TriMesh(b, mesh.cells(), mesh.boundary()), s.rho);
            const double fd = (eval_rho(sa, TriLocator(sa.mesh), p) - eval_rho(sb, TriLocator(sb.mesh), p)) / (2 * d);
            CHECK(fd == Approx(dir == 0 ? px : py).epsilon(1e-6).scale(1.0));
        }
    }
    const State2D zero(mesh, {0.0});
    const auto [zx, zy] = eval_psi_xy(zero, TriLocator(zero.mesh), 0, p);
    CHECK(zx == 0.0);
    CHECK(zy == 0.0);
    CHECK_THROWS_AS(eval_psi_xy(s, loc, 0, {2.0, 2.0}), std::domain_error);
}

TEST_CASE("psi matches finite differences on random states")
{
    testing::Gen gen(51);
    for (int trial = 0; trial < 10; ++trial) {
        const State2D s = gen.state2d(3);
        const TriLocator loc(s.mesh);
        for (int k = 0; k < 10; ++k) {
            const std::size_t c = static_cast<std::size_t>(gen.integer(0, static_cast<int>(s.mesh.num_cells()) - 1));
            const Cell& t = s.mesh.cells()[c];
            double l[3] = {gen.uniform(0.1, 1.0), gen.uniform(0.1, 1.0), gen.uniform(0.1, 1.0)};
            const double sum = l[0] + l[1] + l[2];
            Point2 p{0, 0};
            for (int a = 0; a < 3; ++a) {
                p.x += l[a] / sum * s.mesh.vertices()[t[a]].x;
                p.y += l[a] / sum * s.mesh.vertices()[t[a]].y;
            }
            for (int a = 0; a < 3; ++a) {
                const std::size_t v = t[a];
                const auto [px, py] = eval_psi_xy(s, loc, v, p);
                const double d = 1e-7;
                std::vector<Point2> va = s.mesh.vertices(), vb = s.mesh.vertices();
                va[v].x += d;
                vb[v].x -= d;
                const State2D sa(TriMesh(va, s.mesh.cells(), s.mesh.boundary()), s.rho);
                const State2D sb(TriMesh(vb, s.mesh.cells(), s.mesh.boundary()), s.rho);
                const double fd = (eval_rho(sa, TriLocator(sa.mesh), p) - eval_rho(sb, TriLocator(sb.mesh), p)) / (2 * d);
                CHECK(fd == Approx(px).epsilon(1e-5).scale(1.0));
                (void)py;
            }
        }
    }
}

TEST_CASE("assembly matches exact barycentric oracles")
{
    testing::Gen gen(52);
    const PmeModel model(2.0, 2);
    for (int trial = 0; trial < 10; ++trial) {
        const State2D s = gen.state2d(gen.integer(1, 4));
        const System2D sys = assemble_2d(s, model, triangle_rule(5));
        const testing::Oracle2D o(s);
        CHECK(mat_diff(to_dense(sys.M), o.M) < 1e-13);
        CHECK(mat_diff(to_dense(sys.D), o.D) < 1e-13);
        CHECK(mat_diff(to_dense(sys.Bx), o.Bx) < 1e-13);
        CHECK(mat_diff(to_dense(sys.By), o.By) < 1e-13);
        CHECK(mat_diff(to_dense(sys.Ex), o.Ex) < 1e-13);
        CHECK(mat_diff(to_dense(sys.Ey), o.Ey) < 1e-13);
    }
}

TEST_CASE("single-triangle mass matrix and zero density")
{
    const TriMesh mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {false, false, false});
    const State2D zero(mesh, {0.0, 0.0, 0.0});
    const System2D sys = assemble_2d(zero, PmeModel(2.0, 2), triangle_rule(5));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(sys.M.at(i, j) == Approx(i == j ? 0.5 / 6.0 : 0.5 / 12.0).epsilon(1e-14));
            CHECK(sys.D.at(i, j) == 0.0);
            CHECK(sys.Bx.at(i, j) == 0.0);
            CHECK(sys.Ey.at(i, j) == 0.0);
        }
    }
    const TriMesh bad({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}, {false, true, true});
    CHECK_THROWS_AS(assemble_2d(State2D(bad, {1.0}), PmeModel(2.0, 2), triangle_rule(5)), std::domain_error);
}

TEST_CASE("2D energy gradients match finite differences")
{
    testing::Gen gen(53);
    for (double m : {2.0, 3.0}) {
        const PmeModel model(m, 2);
        const TriangleRule rule = triangle_rule(5);
        for (int trial = 0; trial < 5; ++trial) {
            const State2D s = gen.state2d(2);
            const System2D sys = assemble_2d(s, model, rule);
            double worst = 0.0;
            const double scale = std::max(norm_inf(sys.grad_x), norm_inf(sys.grad_y));
            for (std::size_t v = 0; v < s.mesh.num_vertices(); ++v) {
                for (int dir = 0; dir < 2; ++dir) {
                    const double d = 1e-6;
                    std::vector<Point2> a = s.mesh.vertices(), b = s.mesh.vertices();
                    (dir == 0 ? a[v].x : a[v].y) += d;
                    (dir == 0 ? b[v].x : b[v].y) -= d;
                    const double fd = (discrete_energy(State2D(TriMesh(a, s.mesh.cells(), s.mesh.boundary()), s.rho), model, rule) -
                                       discrete_energy(State2D(TriMesh(b, s.mesh.cells(), s.mesh.boundary()), s.rho), model, rule)) /
                                      (2 * d);
                    const double an = dir == 0 ? sys.grad_x[v] : sys.grad_y[v];
                    worst = std::max(worst, std::abs(fd - an) / scale);
                }
            }
            CHECK(worst < 1e-5);
            worst = 0.0;
            for (std::size_t k = 0; k < s.rho.size(); ++k) {
                const double d = 1e-6;
                State2D a = s, b = s;
                a.rho[k] += d;
                b.rho[k] -= d;
                const double fd = (discrete_energy(a, model, rule) - discrete_energy(b, model, rule)) / (2 * d);
                worst = std::max(worst, std::abs(fd - sys.grad_rho[k]) / norm_inf(sys.grad_rho));
            }
            CHECK(worst < 1e-6);
        }
    }
}

TEST_CASE("2D explicit step matches a dense oracle")
{
    testing::Gen gen(54);
    const PmeModel model(2.0, 2);
    for (int trial = 0; trial < 10; ++trial) {
        const State2D s = gen.state2d(gen.integer(2, 3));
        REQUIRE(s.mesh.num_vertices() <= 50);
        SchemeConfig2D cfg;
        cfg.tau = 1e-4;
        cfg.cg_tol = 1e-14;
        const StepResult2D r = explicit_step_2d(s, model, cfg);
        const System2D sys = assemble_2d(s, model, triangle_rule(5));
        const testing::Oracle2D o(s);
        const Eigen::MatrixXd BEx = o.Bx - o.Ex;
        const Eigen::MatrixXd BEy = o.By - o.Ey;
        const Eigen::VectorXd lam = testing::dense_solve(o.M, testing::to_eigen(sys.grad_rho));
        const Eigen::VectorXd vx = testing::dense_solve(o.D, -testing::to_eigen(sys.grad_x) + BEx.transpose() * lam);
        const Eigen::VectorXd vy = testing::dense_solve(o.D, -testing::to_eigen(sys.grad_y) + BEy.transpose() * lam);
        const Eigen::VectorXd dr = testing::dense_solve(o.M, -BEx * vx - BEy * vy);
        CHECK(testing::max_abs_diff(r.report.lambda, testing::to_std(lam)) < 1e-10);
        CHECK(testing::max_abs_diff(r.report.vx, testing::to_std(vx)) < 1e-10);
        CHECK(testing::max_abs_diff(r.report.vy, testing::to_std(vy)) < 1e-10);
        CHECK(testing::max_abs_diff(r.report.drho, testing::to_std(dr)) < 1e-10);

        // energy-rate identity and the per-step mass-vector identity
        const double two_phi = 2.0 * r.report.dissipation;
        CHECK(std::abs(r.report.energy_rate + two_phi) <= 1e-10 * two_phi);
        const Vector m0 = sys.M.multiply(s.rho);
        const Vector m1 = sys.M.multiply(r.state.rho);
        const Eigen::VectorXd flux = BEx * vx + BEy * vy;
        for (std::size_t i = 0; i < m0.size(); ++i) {
            CHECK(m1[i] - m0[i] == Approx(-cfg.tau * flux(static_cast<Eigen::Index>(i))).scale(1e-4).epsilon(1e-8));
        }
    }
}

TEST_CASE("zero density leaves the 2D state unchanged")
{
    const State2D zero = interpolate(disk_mesh(1.0, 3), [](double, double) { return 0.0; });
    const StepResult2D r = explicit_step_2d(zero, PmeModel(2.0, 2), SchemeConfig2D{});
    CHECK(r.state == zero);
}

TEST_CASE("translation invariance and rotation equivariance")
{
    testing::Gen gen(55);
    const PmeModel model(2.0, 2);
    SchemeConfig2D cfg;
    cfg.tau = 1e-4;
    for (int trial = 0; trial < 5; ++trial) {
        const State2D s = gen.state2d(3);
        const StepResult2D r = explicit_step_2d(s, model, cfg);

        const StepResult2D t = explicit_step_2d(transformed(s, 0.0, 3.0, -2.0), model, cfg);
        CHECK(testing::max_abs_diff(r.report.vx, t.report.vx) < 1e-8);
        CHECK(testing::max_abs_diff(r.report.vy, t.report.vy) < 1e-8);
        CHECK(testing::max_abs_diff(r.report.drho, t.report.drho) < 1e-8);

        const double phi = gen.uniform(0.0, 2.0 * std::numbers::pi);
        const StepResult2D q = explicit_step_2d(transformed(s, phi, 0.0, 0.0), model, cfg);
        for (std::size_t v = 0; v < s.mesh.num_vertices(); ++v) {
            const double ex = std::cos(phi) * r.report.vx[v] - std::sin(phi) * r.report.vy[v];
            const double ey = std::sin(phi) * r.report.vx[v] + std::cos(phi) * r.report.vy[v];
            CHECK(std::abs(q.report.vx[v] - ex) < 1e-8);
            CHECK(std::abs(q.report.vy[v] - ey) < 1e-8);
        }
        CHECK(testing::max_abs_diff(r.report.drho, q.report.drho) < 1e-8);
    }
}

TEST_CASE("radial Barenblatt data move radially")
{
    const State2D s = barenblatt_disk(6);
    const StepResult2D r = explicit_step_2d(s, PmeModel(2.0, 2), SchemeConfig2D{});
    CHECK(std::hypot(r.report.vx[0], r.report.vy[0]) < 1e-8);
    double mean_angle = 0.0;
    const auto bnd = s.mesh.boundary_vertices();
    for (std::size_t v : bnd) {
        const Point2& p = s.mesh.vertices()[v];
        const double vr = (p.x * r.report.vx[v] + p.y * r.report.vy[v]) / std::hypot(p.x, p.y);
        CHECK(vr > 0.0);
        const double cosang = vr / std::hypot(r.report.vx[v], r.report.vy[v]);
        mean_angle += std::acos(std::min(1.0, cosang)) * 180.0 / std::numbers::pi;
    }
    CHECK(mean_angle / static_cast<double>(bnd.size()) < 2.0);
}

TEST_CASE("run2d records rows and stops on tangling")
{
    const PmeModel model(2.0, 2);
    SchemeConfig2D cfg;
    cfg.tau = 1e-2;
    cfg.T = 1.1;
    RunOptions2D o;
    o.t0 = 1.0;
    const RunResult2D r = run2d(barenblatt_disk(3), model, cfg, o);
    CHECK_FALSE(r.record.stopped_early);
    CHECK(r.record.rows.size() == 11);
    for (std::size_t k = 1; k < r.record.rows.size(); ++k) {
        CHECK(r.record.rows[k].energy_identity_residual < 1e-10);
        CHECK(r.record.rows[k].radius_mean > r.record.rows[k - 1].radius_mean);
    }

    // a jittered mesh with a large step folds over in the first step
    testing::Gen gen(55);
    cfg.tau = 0.2;
    cfg.T = 3.0;
    const RunResult2D bad = run2d(gen.state2d(3), model, cfg, o);
    CHECK(bad.record.steps == 1);
    CHECK(bad.record.stopped_early);
    CHECK(bad.record.rows.back().flags.find("tangled") != std::string::npos);
}
