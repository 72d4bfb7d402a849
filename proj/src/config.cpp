#include "pme/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace pme {

ConfigError::ConfigError(const std::string& source, int line, const std::string& field, const std::string& msg)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         (field.empty() ? std::string() : ": " + field) + ": " + msg),
      line_(line),
      field_(field)
{
}

double ExperimentConfig::start_time() const
{
    if (problem.t0) {
        return *problem.t0;
    }
    return problem.initial == "barenblatt" ? 1.0 : 0.0;
}

bool ExperimentConfig::has_csv() const
{
    return std::find(output.formats.begin(), output.formats.end(), "csv") != output.formats.end();
}

bool ExperimentConfig::has_json() const
{
    return std::find(output.formats.begin(), output.formats.end(), "json") != output.formats.end();
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Context {
    const std::string& source;
    int line;
    std::string field;

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(source, line, field, msg); }

    double real(const std::string& v) const
    {
        errno = 0;
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (v.empty() || *end != '\0' || errno == ERANGE) {
            fail("expected a number, got '" + v + "'");
        }
        return x;
    }

    long integer(const std::string& v) const
    {
        errno = 0;
        char* end = nullptr;
        const long x = std::strtol(v.c_str(), &end, 10);
        if (v.empty() || *end != '\0' || errno == ERANGE) {
            fail("expected an integer, got '" + v + "'");
        }
        return x;
    }

    bool boolean(const std::string& v) const
    {
        if (v == "true" || v == "1" || v == "yes") {
            return true;
        }
        if (v == "false" || v == "0" || v == "no") {
            return false;
        }
        fail("expected true or false, got '" + v + "'");
    }

    std::vector<std::string> list(const std::string& v) const
    {
        std::vector<std::string> out;
        std::string item;
        std::istringstream ss(v);
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) {
                fail("empty list item");
            }
            out.push_back(item);
        }
        return out;
    }
};

using Setter = std::function<void(ExperimentConfig&, const Context&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"problem.dim", [](auto& c, auto& x, auto& v) { c.problem.dim = static_cast<int>(x.integer(v)); }},
        {"problem.m", [](auto& c, auto& x, auto& v) { c.problem.m = x.real(v); }},
        {"problem.initial", [](auto& c, auto&, auto& v) { c.problem.initial = v; }},
        {"problem.C", [](auto& c, auto& x, auto& v) { c.problem.C = x.real(v); }},
        {"problem.t0", [](auto& c, auto& x, auto& v) { c.problem.t0 = x.real(v); }},
        {"problem.theta", [](auto& c, auto& x, auto& v) { c.problem.theta = x.real(v); }},
        {"problem.snapshot", [](auto& c, auto&, auto& v) { c.problem.snapshot = v; }},
        {"mesh.kind", [](auto& c, auto&, auto& v) { c.mesh.kind = v; }},
        {"mesh.n", [](auto& c, auto& x, auto& v) { c.mesh.n = static_cast<int>(x.integer(v)); }},
        {"mesh.path", [](auto& c, auto&, auto& v) { c.mesh.path = v; }},
        {"mesh.min_gap", [](auto& c, auto& x, auto& v) { c.mesh.min_gap = x.real(v); }},
        {"mesh.data", [](auto& c, auto&, auto& v) { c.mesh.data = v; }},
        {"mesh.max_iter", [](auto& c, auto& x, auto& v) { c.mesh.max_iter = static_cast<int>(x.integer(v)); }},
        {"mesh.radius", [](auto& c, auto& x, auto& v) { c.mesh.radius = x.real(v); }},
        {"mesh.x0", [](auto& c, auto& x, auto& v) { c.mesh.x0 = x.real(v); }},
        {"mesh.x1", [](auto& c, auto& x, auto& v) { c.mesh.x1 = x.real(v); }},
        {"mesh.y0", [](auto& c, auto& x, auto& v) { c.mesh.y0 = x.real(v); }},
        {"mesh.y1", [](auto& c, auto& x, auto& v) { c.mesh.y1 = x.real(v); }},
        {"scheme.kind",
         [](auto& c, auto& x, auto& v) {
             try {
                 c.scheme.kind = parse_scheme_kind(v);
             } catch (const std::invalid_argument& e) {
                 x.fail(e.what());
             }
         }},
        {"scheme.tau", [](auto& c, auto& x, auto& v) { c.scheme.tau = x.real(v); }},
        {"scheme.T", [](auto& c, auto& x, auto& v) { c.scheme.T = x.real(v); }},
        {"scheme.eps", [](auto& c, auto& x, auto& v) { c.scheme.eps = x.real(v); }},
        {"scheme.max_fp_iter",
         [](auto& c, auto& x, auto& v) { c.scheme.max_fp_iter = static_cast<int>(x.integer(v)); }},
        {"scheme.quad_order", [](auto& c, auto& x, auto& v) { c.scheme.quad_order = static_cast<int>(x.integer(v)); }},
        {"scheme.tri_degree", [](auto& c, auto& x, auto& v) { c.tri_degree = static_cast<int>(x.integer(v)); }},
        {"scheme.cg_tol", [](auto& c, auto& x, auto& v) { c.cg_tol = x.real(v); }},
        {"scheme.strict", [](auto& c, auto& x, auto& v) { c.strict = x.boolean(v); }},
        {"output.dir", [](auto& c, auto&, auto& v) { c.output.dir = v; }},
        {"output.snapshot_every", [](auto& c, auto& x, auto& v) { c.output.snapshot_every = x.integer(v); }},
        {"output.record_every", [](auto& c, auto& x, auto& v) { c.output.record_every = x.integer(v); }},
        {"output.formats", [](auto& c, auto& x, auto& v) { c.output.formats = x.list(v); }},
        {"converge.levels",
         [](auto& c, auto& x, auto& v) {
             c.levels.clear();
             for (const auto& item : x.list(v)) {
                 c.levels.push_back(static_cast<int>(x.integer(item)));
             }
         }},
        {"waiting.delta_frac", [](auto& c, auto& x, auto& v) { c.waiting_delta = x.real(v); }},
    };
    return table;
}

} // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source)
{
    ExperimentConfig cfg;
    cfg.source = source;
    std::string section;
    std::set<std::string> seen;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        Context ctx{source, line_no, ""};
        if (line.front() == '[') {
            if (line.back() != ']') {
                ctx.fail("unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> known = {"problem", "mesh", "scheme", "output", "converge", "waiting"};
            if (!known.count(section)) {
                ctx.fail("unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            ctx.fail("expected 'key = value'");
        }
        if (section.empty()) {
            ctx.fail("key outside of any section");
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        ctx.field = key;
        const auto it = setters().find(key);
        if (it == setters().end()) {
            ctx.fail("unknown key");
        }
        if (!seen.insert(key).second) {
            ctx.fail("duplicate key");
        }
        it->second(cfg, ctx, value);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string(), 0, "", "cannot open config file");
    }
    return parse_config(in, path.string());
}

void validate(const ExperimentConfig& cfg)
{
    auto fail = [&](const std::string& field, const std::string& msg) {
        throw ConfigError(cfg.source, 0, field, msg);
    };
    const ProblemConfig& p = cfg.problem;
    if (p.dim != 1 && p.dim != 2) {
        fail("problem.dim", "must be 1 or 2");
    }
    if (!(p.m > 1.0)) {
        fail("problem.m", "must be > 1");
    }
    static const std::set<std::string> init1 = {"barenblatt", "waiting1d", "snapshot"};
    static const std::set<std::string> init2 = {"barenblatt", "waiting2d", "horseshoe", "two-peak", "snapshot"};
    if (!(p.dim == 1 ? init1 : init2).count(p.initial)) {
        fail("problem.initial", "'" + p.initial + "' is not available in " + std::to_string(p.dim) + "D");
    }
    if (p.initial == "barenblatt") {
        if (!(p.C > 0.0)) {
            fail("problem.C", "must be positive");
        }
        if (!(cfg.start_time() > 0.0)) {
            fail("problem.t0", "Barenblatt data need t0 > 0");
        }
    }
    if (p.initial == "waiting1d" && !(p.theta >= 0.0 && p.theta < 1.0)) {
        fail("problem.theta", "must lie in [0, 1)");
    }
    if (p.initial == "snapshot" && p.snapshot.empty()) {
        fail("problem.snapshot", "snapshot initial data need a path");
    }

    const MeshConfig& m = cfg.mesh;
    static const std::set<std::string> mesh1 = {"uniform", "bestfit", "file"};
    static const std::set<std::string> mesh2 = {"disk", "square", "horseshoe", "file"};
    if (p.initial == "snapshot") {
        if (m.kind != "snapshot") {
            fail("mesh.kind", "snapshot initial data require mesh kind 'snapshot'");
        }
    } else {
        if (!(p.dim == 1 ? mesh1 : mesh2).count(m.kind)) {
            fail("mesh.kind", "'" + m.kind + "' is not available in " + std::to_string(p.dim) + "D");
        }
        if ((m.kind == "horseshoe") != (p.initial == "horseshoe")) {
            fail("mesh.kind", "the horseshoe mesh goes with horseshoe initial data");
        }
        if (m.kind == "file" && m.path.empty()) {
            fail("mesh.path", "file meshes need a path");
        }
        if (m.kind != "file" && m.n < (m.kind == "disk" || m.kind == "square" ? 1 : 2)) {
            fail("mesh.n", "too small");
        }
        if (m.kind == "horseshoe" && m.n % 2 != 0) {
            fail("mesh.n", "horseshoe meshes need an even radial count");
        }
        if (m.kind == "square" && !(m.x0 < m.x1 && m.y0 < m.y1)) {
            fail("mesh.x0", "empty square");
        }
        if (m.radius < 0.0) {
            fail("mesh.radius", "must be nonnegative");
        }
    }
    if (m.kind == "bestfit") {
        if (!(m.min_gap > 0.0 && m.min_gap < 1.0)) {
            fail("mesh.min_gap", "must lie in (0, 1)");
        }
        if (m.data != "fit" && m.data != "interpolate") {
            fail("mesh.data", "must be 'fit' or 'interpolate'");
        }
        if (m.max_iter < 1) {
            fail("mesh.max_iter", "must be at least 1");
        }
    }

    try {
        cfg.scheme.validate();
    } catch (const std::invalid_argument& e) {
        fail("scheme", e.what());
    }
    if (p.dim == 2 && cfg.scheme.kind != SchemeKind::explicit_euler) {
        fail("scheme.kind", "only the explicit scheme is available in 2D");
    }
    if (cfg.tri_degree != 1 && cfg.tri_degree != 2 && cfg.tri_degree != 5) {
        fail("scheme.tri_degree", "must be 1, 2 or 5");
    }
    if (!(cfg.cg_tol > 0.0)) {
        fail("scheme.cg_tol", "must be positive");
    }
    if (p.initial != "snapshot" && cfg.scheme.T < cfg.start_time()) {
        fail("scheme.T", "final time precedes the start time");
    }
    if (cfg.output.dir.empty()) {
        fail("output.dir", "must not be empty");
    }
    if (cfg.output.snapshot_every < 0) {
        fail("output.snapshot_every", "must be nonnegative");
    }
    if (cfg.output.record_every < 1) {
        fail("output.record_every", "must be at least 1");
    }
    for (const auto& f : cfg.output.formats) {
        if (f != "csv" && f != "json") {
            fail("output.formats", "unknown format '" + f + "'");
        }
    }
    for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
        if (cfg.levels[i] < 1 || (i > 0 && cfg.levels[i] <= cfg.levels[i - 1])) {
            fail("converge.levels", "levels must be positive and increasing");
        }
    }
    if (!(cfg.waiting_delta > 0.0)) {
        fail("waiting.delta_frac", "must be positive");
    }
}

} // namespace pme
