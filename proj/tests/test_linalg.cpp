#include "doctest.h"
#include "support.hpp"

#include "pme/assembly1d.hpp"
#include "pme/linalg.hpp"
#include "pme/mesh2d.hpp"
#include "pme/solver2d.hpp"

#include <cmath>

using namespace pme;
using doctest::Approx;

TEST_CASE("tridiagonal SPD solve")
{
    TriDiagMatrix id(4);
    for (double& d : id.diag) {
        d = 3.0;
    }
    const Vector b{1.0, -2.0, 0.5, 4.0};
    const Vector x = solve_tridiag_spd(id, b);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(x[i] == Approx(b[i] / 3.0));
    }

    const TriDiagMatrix m = assemble_M(Mesh1D({0.0, 1.0, 2.0}));
    CHECK(solve_tridiag_spd(m, Vector{4.0 / 3.0})[0] == Approx(2.0).epsilon(1e-15));

    testing::Gen gen(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = static_cast<std::size_t>(gen.integer(1, 30));
        TriDiagMatrix a(n);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            a.sub[i] = a.super[i] = gen.uniform(-1.0, 1.0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            a.diag[i] = 2.5 + gen.uniform(0.0, 1.0);
        }
        Vector rhs(n);
        for (double& v : rhs) {
            v = gen.uniform(-1.0, 1.0);
        }
        const Vector got = solve_tridiag_spd(a, rhs);
        const Vector expect =
            testing::to_std(testing::dense_solve(testing::to_eigen(to_dense(a)), testing::to_eigen(rhs)));
        CHECK(testing::max_abs_diff(got, expect) < 1e-12);
    }
}

TEST_CASE("tridiagonal solve reports the failing pivot")
{
    TriDiagMatrix a(3);
    a.diag = {1.0, 0.0, 1.0};
    try {
        solve_tridiag_spd(a, Vector{1.0, 1.0, 1.0});
        FAIL("expected a pivot error");
    } catch (const PivotError& e) {
        CHECK(e.index() == 1);
    }
}

TEST_CASE("dense LU")
{
    DenseMatrix one(1, 1);
    one(0, 0) = 2.0;
    const DenseSolveResult r = solve_dense_lu(one, Vector{4.0});
    CHECK(r.x[0] == Approx(2.0));
    CHECK_FALSE(r.rank_deficient);

    // zero row: minimum-norm least-squares solution, flagged
    DenseMatrix s(2, 2);
    s(0, 0) = 1.0;
    s(0, 1) = 1.0;
    const DenseSolveResult z = solve_dense_lu(s, Vector{2.0, 0.0});
    CHECK(z.rank_deficient);
    CHECK(z.rank == 1);
    CHECK(z.x[0] == Approx(1.0));
    CHECK(z.x[1] == Approx(1.0));

    testing::Gen gen(32);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = static_cast<std::size_t>(gen.integer(1, 25));
        DenseMatrix a(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                a(i, j) = gen.uniform(-1.0, 1.0) + (i == j ? 3.0 : 0.0);
            }
        }
        Vector b(n);
        for (double& v : b) {
            v = gen.uniform(-1.0, 1.0);
        }
        const DenseSolveResult got = solve_dense_lu(a, b);
        CHECK(got.relative_residual < 1e-12);
        const DenseLU lu(a);
        CHECK(testing::max_abs_diff(lu.solve(b).x, got.x) == 0.0);
        CHECK(testing::max_abs_diff(
                  got.x, testing::to_std(testing::dense_solve(testing::to_eigen(a), testing::to_eigen(b)))) < 1e-12);
    }
}

TEST_CASE("sparse storage")
{
    SparseSym a(3, {{1}, {0, 2}, {1}});
    a.add(0, 0, 2.0);
    a.add(1, 0, -1.0);
    a.add(1, 1, 2.0);
    a.add(1, 2, -1.0);
    a.add(2, 2, 2.0);
    CHECK(a.at(0, 1) == -1.0);
    CHECK(a.at(1, 0) == -1.0);
    CHECK(a.at(0, 2) == 0.0);
    const Vector y = a.multiply(Vector{1.0, 1.0, 1.0});
    CHECK(y == Vector{1.0, 0.0, 1.0});
    CHECK_THROWS(a.add(0, 2, 1.0));

    SparseMatrix r(2, 3, {{0, 2}, {1}});
    r.add(0, 2, 5.0);
    r.add(1, 1, -2.0);
    CHECK(r.multiply(Vector{1.0, 1.0, 1.0}) == Vector{5.0, -2.0});
    CHECK(r.multiply_transposed(Vector{1.0, 1.0}) == Vector{0.0, -2.0, 5.0});
}

TEST_CASE("conjugate gradients")
{
    SparseSym diag(3, {{}, {}, {}});
    diag.add(0, 0, 2.0);
    diag.add(1, 1, 5.0);
    diag.add(2, 2, 0.5);
    const CgResult r = solve_cg(diag, Vector{2.0, 5.0, 1.0});
    CHECK(r.iterations <= 2);
    CHECK(r.x[0] == Approx(1.0));
    CHECK(r.x[2] == Approx(2.0));

    const CgResult zero = solve_cg(diag, Vector{0.0, 0.0, 0.0});
    CHECK(zero.iterations == 0);
    CHECK(norm_inf(zero.x) == 0.0);

    // P1 mass matrix on a disk against the dense oracle
    const State2D s = interpolate(disk_mesh(1.0, 3), [](double, double) { return 0.0; });
    const System2D sys = assemble_2d(s, PmeModel(2.0, 2), triangle_rule(5));
    testing::Gen gen(33);
    Vector b(s.mesh.num_interior());
    for (double& v : b) {
        v = gen.uniform(-1.0, 1.0);
    }
    const CgResult cg = solve_cg(sys.M, b);
    CHECK(cg.relative_residual < 1e-12);
    const Vector expect =
        testing::to_std(testing::dense_solve(testing::to_eigen(to_dense(sys.M)), testing::to_eigen(b)));
    CHECK(testing::max_abs_diff(cg.x, expect) < 1e-10);

    CHECK_THROWS_AS(solve_cg(sys.M, b, 1e-14, 1), CgError);
}

TEST_CASE("solvers are deterministic")
{
    testing::Gen gen(34);
    const State2D s = gen.state2d(3);
    const System2D sys = assemble_2d(s, PmeModel(2.0, 2), triangle_rule(5));
    Vector b(s.mesh.num_vertices());
    for (double& v : b) {
        v = gen.uniform(-1.0, 1.0);
    }
    const CgResult a = solve_cg(sys.D, b);
    const CgResult c = solve_cg(sys.D, b);
    CHECK(a.x == c.x);
    CHECK(a.iterations == c.iterations);
}
