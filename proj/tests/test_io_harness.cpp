#include "doctest.h"

#include "pme/config.hpp"
#include "pme/harness.hpp"
#include "pme/io.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace pme;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("pme_tests_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text)
{
    const fs::path p = scratch(name + ".ini");
    std::ofstream(p) << text;
    return p;
}

int run_cli(const std::string& cmd, const fs::path& cfg, const fs::path& out, std::string* err_text = nullptr)
{
    CliRequest req;
    req.command = cmd;
    req.config = cfg;
    req.out = out.string();
    std::ostringstream log, err;
    const int code = dispatch(req, log, err);
    if (err_text) {
        *err_text = err.str();
    }
    return code;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        rows.push_back(cells);
    }
    return rows;
}

const char* waiting_cfg = R"(# small waiting-time run
[problem]
dim = 1
m = 4
initial = waiting1d
theta = 0

[mesh]
kind = uniform
n = 16

[scheme]
kind = implicit
tau = 1e-3
T = 0.02
)";

} // namespace

TEST_CASE("number formatting round trips")
{
    for (double v : {0.1, 1.0 / 3.0, std::numbers::pi, -1e-300, 6.02214076e23}) {
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("mesh round trip and malformed meshes")
{
    const TriMesh m = disk_mesh(std::numbers::pi, 3);
    std::stringstream ss;
    write_mesh(ss, m);
    CHECK(read_mesh(ss) == m);

    std::istringstream trunc("pme-mesh v1\nV 2\n0 0 0 1\n");
    try {
        read_mesh(trunc, "t.mesh");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 0);
        CHECK(std::string(e.what()).find("vertex line") != std::string::npos);
    }
    std::istringstream nosec("pme-mesh v1\nV 1\n0 0 0 1\n");
    try {
        read_mesh(nosec, "t.mesh");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("section C") != std::string::npos);
    }
    std::istringstream badnum("pme-mesh v1\nV 1\n0 abc 0 1\nC 0\n");
    try {
        read_mesh(badnum, "t.mesh");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::istringstream inverted("pme-mesh v1\nV 3\n0 0 0 1\n1 1 0 1\n2 0 1 1\nC 1\n0 0 2 1\n");
    CHECK_THROWS_AS(read_mesh(inverted), ParseError);
}

TEST_CASE("snapshot round trips")
{
    const State1D hat(Mesh1D({0.0, 1.0, 2.0}), {1.0});
    std::stringstream a;
    write_snapshot(a, hat, 2.0, 1.5);
    const Snapshot s1 = read_snapshot(a);
    CHECK(s1.dim() == 1);
    CHECK(s1.m == 2.0);
    CHECK(s1.t == 1.5);
    CHECK(std::get<State1D>(s1.state) == hat);

    const State2D disk = interpolate(disk_mesh(std::numbers::pi, 5), [](double x, double y) {
        return waiting_time_initial_2d(x, y) + 1e-3 * std::sin(7.0 * x * y);
    });
    std::stringstream b;
    write_snapshot(b, disk, 2.0, 0.123456789);
    const Snapshot s2 = read_snapshot(b);
    CHECK(s2.dim() == 2);
    CHECK(std::get<State2D>(s2.state) == disk);

    const fs::path f = scratch("snap.txt");
    save_snapshot(f, Snapshot{3.0, 0.25, disk});
    CHECK(std::get<State2D>(load_snapshot(f).state) == disk);

    std::stringstream trunc;
    write_snapshot(trunc, disk, 2.0, 0.0);
    std::string text = trunc.str();
    text = text.substr(0, text.find("RHO"));
    std::istringstream t(text);
    try {
        read_snapshot(t, "cut.snap");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("section RHO") != std::string::npos);
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
    std::istringstream badhead("pme-snapshot v2 dim=1 m=2 t=0\n");
    CHECK_THROWS_AS(read_snapshot(badhead), ParseError);
}

TEST_CASE("config parsing")
{
    std::istringstream in(waiting_cfg);
    const ExperimentConfig c = parse_config(in, "w.ini");
    CHECK(c.problem.m == 4.0);
    CHECK(c.problem.initial == "waiting1d");
    CHECK(c.mesh.n == 16);
    CHECK(c.scheme.kind == SchemeKind::implicit);
    CHECK(c.start_time() == 0.0);
    CHECK_NOTHROW(validate(c));

    auto error_line = [](const std::string& text) {
        std::istringstream s(text);
        try {
            parse_config(s, "x.ini");
        } catch (const ConfigError& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(error_line("[problem]\nm = two\n") == 2);
    CHECK(error_line("[problem]\n\n# c\nbogus = 1\n") == 4);
    CHECK(error_line("m = 2\n") == 1);
    CHECK(error_line("[nowhere]\n") == 1);
    CHECK(error_line("[problem]\nm = 2\nm = 3\n") == 3);
    CHECK(error_line("[scheme]\nkind = leapfrog\n") == 2);
    CHECK(error_line("[problem]\nm 2\n") == 2);

    ExperimentConfig bad = c;
    bad.problem.dim = 2;
    try {
        validate(bad);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "problem.initial");
    }
    bad = c;
    bad.scheme.tau = -1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = c;
    bad.problem.dim = 2;
    bad.problem.initial = "waiting2d";
    bad.mesh.kind = "disk";
    bad.scheme.kind = SchemeKind::implicit;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("run with T at the start time writes a single row")
{
    std::string text = waiting_cfg;
    text.replace(text.find("T = 0.02"), 8, "T = 0");
    const fs::path cfg = write_config("t0", text);
    const fs::path out = scratch("t0_out");
    CHECK(run_cli("run", cfg, out) == exit_ok);
    const auto rows = read_csv(out / "diag.csv");
    CHECK(rows.size() == 2);
    CHECK(rows[0][0] == "t");
    CHECK(fs::exists(out / "summary.json"));
    CHECK(fs::exists(out / "final.txt"));
}

TEST_CASE("invalid config exits with status 2 and writes nothing")
{
    std::string text = waiting_cfg;
    text.replace(text.find("dim = 1"), 7, "dim = 2");
    const fs::path cfg = write_config("bad", text);
    const fs::path out = scratch("bad_out");
    std::string err;
    CHECK(run_cli("run", cfg, out, &err) == exit_config);
    CHECK_FALSE(fs::exists(out));
    CHECK(err.find("problem.initial") != std::string::npos);

    CHECK(run_cli("run", scratch("missing.ini"), out) == exit_config);
    CHECK(run_cli("explode", write_config("ok", waiting_cfg), out) == exit_config);
}

TEST_CASE("reruns are bit-identical")
{
    std::string text = waiting_cfg;
    text += "\n[output]\nsnapshot_every = 5\n";
    const fs::path cfg = write_config("det", text);
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    CHECK(run_cli("run", cfg, a) == exit_ok);
    CHECK(run_cli("run", cfg, b) == exit_ok);
    for (const char* f : {"diag.csv", "summary.json", "final.txt", "snapshots/snap_0000005.txt"}) {
        CHECK(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    // snapshot of the final step equals final.txt
    CHECK(slurp(a / "snapshots/snap_0000020.txt") == slurp(a / "final.txt"));
}

TEST_CASE("converge orders equal convergence_order of the emitted errors")
{
    const fs::path cfg = write_config("conv", R"([problem]
dim = 1
m = 2
initial = barenblatt
C = 1
[mesh]
kind = uniform
[scheme]
kind = explicit
tau = 0.01
T = 1.2
[converge]
levels = 6, 12, 24
)");
    const fs::path out = scratch("conv_out");
    CHECK(run_cli("converge", cfg, out) == exit_ok);
    const auto rows = read_csv(out / "converge.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"N", "tau", "err_L2", "order"});
    std::vector<double> errs, ns;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ns.push_back(std::stod(rows[i][0]));
        errs.push_back(std::stod(rows[i][2]));
    }
    CHECK(rows[2][1] == format_double(0.01 / 4.0));
    const auto orders = convergence_order(errs, ns, 1);
    CHECK(rows[1][3].empty());
    CHECK(rows[2][3] == format_double(orders[0]));
    CHECK(rows[3][3] == format_double(orders[1]));
}

TEST_CASE("mass-table requires 1D m = 2 Barenblatt data")
{
    std::string text = waiting_cfg;
    text += "\n[converge]\nlevels = 8, 16\n";
    const fs::path out = scratch("mt_out");
    CHECK(run_cli("mass-table", write_config("mt", text), out) == exit_config);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("mesh-gen output feeds a file-mesh run")
{
    const fs::path cfg = write_config("mg", R"([problem]
dim = 2
m = 2
initial = waiting2d
[mesh]
kind = disk
n = 4
[scheme]
kind = explicit
tau = 1e-3
T = 0.002
)");
    const fs::path out = scratch("mg_out");
    CHECK(run_cli("mesh-gen", cfg, out) == exit_ok);
    const TriMesh m = load_mesh(out / "mesh.txt");
    CHECK(m.num_vertices() == 61);
    const Snapshot s = load_snapshot(out / "initial.txt");
    CHECK(std::get<State2D>(s.state).mesh == m);

    const fs::path cfg2 = write_config("mg2", "[problem]\ndim = 2\ninitial = waiting2d\n[mesh]\nkind = file\npath = " +
                                                  (out / "mesh.txt").string() +
                                                  "\n[scheme]\nkind = explicit\ntau = 1e-3\nT = 0.002\n");
    const fs::path o1 = scratch("mg_run1");
    const fs::path o2 = scratch("mg_run2");
    CHECK(run_cli("run", cfg, o1) == exit_ok);
    CHECK(run_cli("run", cfg2, o2) == exit_ok);
    CHECK(slurp(o1 / "diag.csv") == slurp(o2 / "diag.csv"));

    // snapshot restart
    const fs::path cfg3 = write_config("mg3", "[problem]\ndim = 2\ninitial = snapshot\nsnapshot = " +
                                                  (out / "initial.txt").string() +
                                                  "\n[mesh]\nkind = snapshot\n[scheme]\nkind = explicit\ntau = 1e-3\nT = 0.002\n");
    const fs::path o3 = scratch("mg_run3");
    CHECK(run_cli("run", cfg3, o3) == exit_ok);
    CHECK(slurp(o1 / "diag.csv") == slurp(o3 / "diag.csv"));

    const fs::path broken = write_config("mg4", "[problem]\ndim = 2\ninitial = waiting2d\n[mesh]\nkind = file\npath = /nonexistent/mesh.txt\n[scheme]\nkind = explicit\n");
    CHECK(run_cli("run", broken, scratch("mg_run4")) == exit_config);
}

TEST_CASE("strict runs that stop early return status 3")
{
    const fs::path cfg = write_config("strict", R"([problem]
dim = 1
m = 2
initial = waiting1d
theta = 0.5
[mesh]
kind = uniform
n = 6
[scheme]
kind = explicit
tau = 1
T = 5
)");
    const fs::path out = scratch("strict_out");
    CHECK(run_cli("run", cfg, out) == exit_stopped);
    CHECK(fs::exists(out / "summary.json"));
}
