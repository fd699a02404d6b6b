#include <polyext/catalog.hh>
#include <polyext/closedness.hh>
#include <polyext/error.hh>
#include <polyext/extend.hh>
#include <polyext/scenario.hh>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace polyext::cli {

namespace fs = std::filesystem;

SchemaError::SchemaError(std::vector<std::string> problems) :
    std::runtime_error([&] {
        std::string msg = "scenario does not match the schema:";
        for (const auto & p : problems)
            msg += "\n  " + p;
        return msg;
    }()),
    problems_(std::move(problems))
{
}

namespace {

const std::set<std::string> kAnalyses = {"bundle", "strips", "cole", "ah", "corollary3", "lemma4", "closedness"};

std::string escape_key(const std::string & key)
{
    std::string out;
    for (char ch : key) {
        if (ch == '~')
            out += "~0";
        else if (ch == '/')
            out += "~1";
        else
            out += ch;
    }
    return out;
}

std::string at(const std::string & ptr, const std::string & key) { return ptr + "/" + escape_key(key); }
std::string at(const std::string & ptr, size_t index) { return ptr + "/" + std::to_string(index); }

class Checker {
public:
    std::vector<std::string> problems;

    void fail(const std::string & ptr, const std::string & msg) { problems.push_back((ptr.empty() ? "/" : ptr) + ": " + msg); }

    bool object(const json & j, const std::string & ptr, const std::set<std::string> & allowed,
        const std::set<std::string> & required = {})
    {
        if (! j.is_object()) {
            fail(ptr, "expected an object");
            return false;
        }
        for (const auto & [k, v] : j.items())
            if (! allowed.count(k))
                fail(at(ptr, k), "unknown key");
        for (const auto & k : required)
            if (! j.contains(k))
                fail(at(ptr, k), "required key is missing");
        return true;
    }

    bool integer(const json & j, const std::string & ptr, long lo)
    {
        if (! j.is_number_integer()) {
            fail(ptr, "expected an integer");
            return false;
        }
        if (j.get<long>() < lo) {
            fail(ptr, "must be at least " + std::to_string(lo));
            return false;
        }
        return true;
    }

    void boolean(const json & j, const std::string & ptr)
    {
        if (! j.is_boolean())
            fail(ptr, "expected true or false");
    }

    void positive(const json & j, const std::string & ptr)
    {
        if (! j.is_number() || ! (j.get<double>() > 0.0))
            fail(ptr, "expected a positive number");
    }

    void expression(const json & j, const std::string & ptr, std::optional<BaseKind> kind)
    {
        if (! j.is_string()) {
            fail(ptr, "expected an expression string");
            return;
        }
        try {
            auto e = parse(j.get<std::string>());
            if (kind)
                check_variables(e, *kind);
        } catch (const ParseError & e) {
            fail(ptr, e.what());
        } catch (const EvalError & e) {
            fail(ptr, e.what());
        }
    }

    void expressions(const json & j, const std::string & ptr, std::optional<BaseKind> kind, size_t min, size_t max)
    {
        if (! j.is_array()) {
            fail(ptr, "expected an array of expression strings");
            return;
        }
        if (j.size() < min || j.size() > max) {
            fail(ptr, min == max ? "expected " + std::to_string(min) + " expressions"
                                 : "expected " + std::to_string(min) + " to " + std::to_string(max) + " expressions");
            return;
        }
        for (size_t i = 0; i < j.size(); ++i)
            expression(j[i], at(ptr, i), kind);
    }

    void graph(const json & j, const std::string & ptr, bool named)
    {
        std::set<std::string> keys{"vertices", "edges", "samples_per_edge"};
        if (named)
            keys.insert("name");
        auto req = keys;
        if (! object(j, ptr, keys, req))
            return;
        if (named && ! j["name"].is_string())
            fail(at(ptr, "name"), "expected a string");
        bool nv_ok = integer(j["vertices"], at(ptr, "vertices"), 1);
        integer(j["samples_per_edge"], at(ptr, "samples_per_edge"), 1);
        const auto & edges = j["edges"];
        if (! edges.is_array()) {
            fail(at(ptr, "edges"), "expected an array of [tail, head] pairs");
            return;
        }
        for (size_t i = 0; i < edges.size(); ++i) {
            const auto & e = edges[i];
            if (! e.is_array() || e.size() != 2 || ! e[0].is_number_integer() || ! e[1].is_number_integer()) {
                fail(at(at(ptr, "edges"), i), "expected [tail, head]");
                continue;
            }
            if (nv_ok) {
                long nv = j["vertices"].get<long>();
                for (int k = 0; k < 2; ++k)
                    if (e[k].get<long>() < 0 || e[k].get<long>() >= nv)
                        fail(at(at(at(ptr, "edges"), i), k), "vertex index out of range");
            }
        }
    }

    // Returns the base kind when the base spec is usable.
    std::optional<BaseKind> base(const json & j, const std::string & ptr)
    {
        if (! j.is_object()) {
            fail(ptr, "expected an object");
            return std::nullopt;
        }
        if (! j.contains("kind") || ! j["kind"].is_string()) {
            fail(at(ptr, "kind"), "expected one of interval, circle, torus2, graph");
            return std::nullopt;
        }
        auto kind = j["kind"].get<std::string>();
        if (kind == "interval" || kind == "circle") {
            if (object(j, ptr, {"kind", "samples"}, {"samples"})
                && integer(j["samples"], at(ptr, "samples"), kind == "interval" ? 2 : 3))
                return kind == "interval" ? BaseKind::interval : BaseKind::circle;
            return std::nullopt;
        }
        if (kind == "torus2") {
            if (! object(j, ptr, {"kind", "grid"}, {"grid"}))
                return std::nullopt;
            const auto & g = j["grid"];
            if (! g.is_array() || g.size() != 2) {
                fail(at(ptr, "grid"), "expected [n, m]");
                return std::nullopt;
            }
            bool ok = integer(g[0], at(at(ptr, "grid"), 0), 3);
            ok = integer(g[1], at(at(ptr, "grid"), 1), 3) && ok;
            return ok ? std::optional(BaseKind::torus2) : std::nullopt;
        }
        if (kind == "graph") {
            json rest = j;
            rest.erase("kind");
            size_t before = problems.size();
            graph(rest, ptr, false);
            return problems.size() == before ? std::optional(BaseKind::graph) : std::nullopt;
        }
        fail(at(ptr, "kind"), "expected one of interval, circle, torus2, graph");
        return std::nullopt;
    }

    void polynomial(const json & j, const std::string & ptr, std::optional<BaseKind> kind)
    {
        if (! object(j, ptr, {"coefficients", "roots", "assert", "jump_bound"}))
            return;
        bool c = j.contains("coefficients"), r = j.contains("roots");
        if (c == r) {
            fail(ptr, "give exactly one of coefficients or roots");
            return;
        }
        if (c)
            expressions(j["coefficients"], at(ptr, "coefficients"), kind, 2, 31);
        else
            expressions(j["roots"], at(ptr, "roots"), kind, 2, 31);
        if (j.contains("assert")) {
            if (j["assert"] != "example2")
                fail(at(ptr, "assert"), "the only assertion set is \"example2\"");
            else if (! r)
                fail(at(ptr, "assert"), "the example2 assertions apply to a factored form");
        }
        if (j.contains("jump_bound"))
            positive(j["jump_bound"], at(ptr, "jump_bound"));
    }

    void map(const json & j, const std::string & ptr, std::optional<BaseKind> kind)
    {
        if (j.is_string()) {
            if (j != "identity")
                fail(ptr, "expected \"identity\" or an array of image expressions");
            return;
        }
        size_t dim = kind == BaseKind::torus2 ? 2 : 1;
        expressions(j, ptr, kind, dim, dim);
    }

    void expectation(const json & j, const std::string & ptr)
    {
        if (! j.is_object())
            return; // compared for equality
        if (j.contains("approx")) {
            if (! object(j, ptr, {"approx", "tol"}, {"approx", "tol"}))
                return;
            if (! j["approx"].is_number())
                fail(at(ptr, "approx"), "expected a number");
            positive(j["tol"], at(ptr, "tol"));
        } else if (j.contains("at_least") || j.contains("at_most")) {
            if (! object(j, ptr, {"at_least", "at_most"}))
                return;
            for (const auto & [k, v] : j.items())
                if (! v.is_number())
                    fail(at(ptr, k), "expected a number");
        } else if (j.contains("equals")) {
            object(j, ptr, {"equals"});
        } else {
            fail(ptr, "expected a value, or an object with approx/tol, at_least/at_most or equals");
        }
    }
};

}

std::vector<std::string> validate_scenario(const json & config)
{
    Checker c;
    if (! c.object(config,
            "",
            {"name", "description", "base", "polynomial", "map", "continuity_bound", "analyses", "expect", "seed",
                "stability", "trials", "max_lifts", "outputs", "graphs", "controls", "transplant_samples"},
            {"name", "base", "analyses"}))
        return c.problems;
    if (! config["name"].is_string() || config["name"].get<std::string>().empty())
        c.fail("/name", "expected a non-empty string");
    if (config.contains("description") && ! config["description"].is_string())
        c.fail("/description", "expected a string");
    auto kind = c.base(config["base"], "/base");
    bool has_poly = config.contains("polynomial"), has_map = config.contains("map");
    if (has_poly)
        c.polynomial(config["polynomial"], "/polynomial", kind);
    if (has_map)
        c.map(config["map"], "/map", kind);
    if (config.contains("continuity_bound"))
        c.positive(config["continuity_bound"], "/continuity_bound");
    if (config.contains("seed"))
        c.integer(config["seed"], "/seed", 0);
    if (config.contains("stability"))
        c.boolean(config["stability"], "/stability");
    if (config.contains("trials"))
        c.integer(config["trials"], "/trials", 0);
    if (config.contains("transplant_samples"))
        c.integer(config["transplant_samples"], "/transplant_samples", 0);
    if (config.contains("max_lifts"))
        c.integer(config["max_lifts"], "/max_lifts", 1);
    if (config.contains("outputs") && c.object(config["outputs"], "/outputs", {"csv", "svg"}))
        for (const auto & [k, v] : config["outputs"].items())
            c.boolean(v, at("/outputs", k));
    if (config.contains("graphs")) {
        const auto & g = config["graphs"];
        if (! g.is_array())
            c.fail("/graphs", "expected an array of graphs");
        else
            for (size_t i = 0; i < g.size(); ++i)
                c.graph(g[i], at("/graphs", i), true);
    }
    if (config.contains("controls")) {
        const auto & cs = config["controls"];
        if (! cs.is_array())
            c.fail("/controls", "expected an array");
        else
            for (size_t i = 0; i < cs.size(); ++i) {
                auto ptr = at("/controls", i);
                if (! c.object(cs[i], ptr, {"name", "polynomial", "map"}, {"name"}))
                    continue;
                if (! cs[i]["name"].is_string())
                    c.fail(at(ptr, "name"), "expected a string");
                if (cs[i].contains("polynomial"))
                    c.polynomial(cs[i]["polynomial"], at(ptr, "polynomial"), kind);
                if (cs[i].contains("map"))
                    c.map(cs[i]["map"], at(ptr, "map"), kind);
                if (! (has_poly || cs[i].contains("polynomial")) || ! (has_map || cs[i].contains("map")))
                    c.fail(ptr, "a control needs a polynomial and a map, from itself or the scenario");
            }
    }
    if (config.contains("expect")) {
        const auto & e = config["expect"];
        if (! e.is_object())
            c.fail("/expect", "expected an object keyed by JSON pointers into verdict.json");
        else
            for (const auto & [k, v] : e.items()) {
                if (k.empty() || k[0] != '/')
                    c.fail(at("/expect", k), "keys must be JSON pointers starting with /");
                c.expectation(v, at("/expect", k));
            }
    }

    const auto & an = config["analyses"];
    if (! an.is_array() || an.empty()) {
        c.fail("/analyses", "expected a non-empty array");
        return c.problems;
    }
    std::set<std::string> seen;
    for (size_t i = 0; i < an.size(); ++i) {
        auto ptr = at("/analyses", i);
        if (! an[i].is_string() || ! kAnalyses.count(an[i].get<std::string>())) {
            c.fail(ptr, "expected one of bundle, strips, cole, ah, corollary3, lemma4, closedness");
            continue;
        }
        auto a = an[i].get<std::string>();
        if (! seen.insert(a).second)
            c.fail(ptr, "listed twice");
        if (! kind)
            continue;
        if (a == "closedness") {
            if (*kind != BaseKind::graph && ! config.contains("graphs"))
                c.fail(ptr, "closedness needs a graph base or a graphs list");
            continue;
        }
        if (*kind == BaseKind::graph) {
            c.fail(ptr, a + " is not available on a graph base");
            continue;
        }
        if (! has_poly)
            c.fail(ptr, a + " needs a polynomial");
        if (a != "bundle" && a != "strips" && ! has_map)
            c.fail(ptr, a + " needs a map");
        if (a == "strips" && *kind != BaseKind::circle)
            c.fail(ptr, "strips needs a circle base");
        if (a == "lemma4" && *kind != BaseKind::interval && *kind != BaseKind::circle)
            c.fail(ptr, "lemma4 needs an interval or circle base");
    }
    if (kind == BaseKind::graph && has_poly)
        c.fail("/polynomial", "graph bases take no polynomial; closedness builds its own");
    return c.problems;
}

void require_valid(const json & config)
{
    auto problems = validate_scenario(config);
    if (! problems.empty())
        throw SchemaError(std::move(problems));
}

// ---------------------------------------------------------------- builtins

std::vector<std::string> builtin_names() { return {"example1", "example2", "example3", "torus", "graphdemo"}; }

json builtin_scenario(const std::string & name)
{
    const double pi = std::numbers::pi;
    if (name == "example1") {
        return {
            {"name", "example1"},
            {"description", "p = (t - r)(t + r) with r = (3x-1)(3x-2)^2 on [0, 1], T = composition with 1 - x"},
            {"base", {{"kind", "interval"}, {"samples", 2001}}},
            {"polynomial", {{"roots", catalog::example1_roots()}}},
            {"map", {catalog::example1_map}},
            {"analyses", {"bundle", "cole", "ah", "corollary3", "lemma4"}},
            {"max_lifts", 10000},
            {"stability", true},
            {"expect",
                {
                    {"/analyses/cole/answer", "yes"},
                    {"/analyses/ah/answer", "yes"},
                    {"/analyses/corollary3/consistent", true},
                    {"/analyses/lemma4/has_accepted_fit", true},
                    {"/analyses/lemma4/branches/1/coordinate/x", {{"approx", 2.0 / 3.0}, {"tol", 1e-3}}},
                    {"/analyses/lemma4/branches/1/has_divergent", true},
                    {"/analyses/bundle/source/max_residual", {{"at_most", 1e-9}}},
                }},
        };
    }
    if (name == "example2" || name == "example3") {
        bool two = name == "example2";
        json j = {
            {"name", name},
            {"base", {{"kind", "circle"}, {"samples", 2000}}},
            {"polynomial", {{"roots", catalog::example2_roots()}, {"assert", "example2"}}},
            {"stability", true},
        };
        if (two) {
            j["description"] = "quintic over the circle with a 2-strip and a 3-strip touching at theta = pi; "
                               "T folds a neighbourhood of pi by pi -+ sqrt|theta - pi|";
            j["map"] = {catalog::example2_map};
            j["continuity_bound"] = catalog::example2_continuity_bound;
            j["analyses"] = {"bundle", "strips", "cole", "ah", "corollary3"};
            j["expect"] = {
                {"/analyses/strips/source", {2, 3}},
                {"/analyses/strips/target", {2, 3}},
                {"/analyses/cole/answer", "yes"},
                {"/analyses/cole/solution_count", 1},
                {"/analyses/ah/answer", "no"},
                {"/analyses/ah/certificate_data/kind", "divided_difference_blowup"},
                {"/analyses/ah/certificate_data/coordinate/theta", {{"approx", pi}, {"tol", 0.05}}},
                {"/analyses/corollary3/consistent", true},
            };
        } else {
            j["description"] = "the example 2 quintic with T = rotation by pi";
            j["map"] = {catalog::example3_map};
            j["analyses"] = {"bundle", "strips", "cole"};
            j["expect"] = {
                {"/analyses/cole/answer", "no"},
                {"/analyses/cole/certificate_kind", "fiber_count"},
                {"/analyses/cole/certificate_data/source_count", 4},
                {"/analyses/cole/certificate_data/target_count", 5},
                {"/analyses/cole/certificate_data/coordinate/theta", {{"approx", pi}, {"tol", 0.01}}},
            };
        }
        return j;
    }
    if (name == "torus") {
        return {
            {"name", "torus"},
            {"description", "t^2 - F on the torus with F the first coordinate e^{i theta1}, T swaps the coordinates"},
            {"base", {{"kind", "torus2"}, {"grid", {64, 64}}}},
            {"polynomial", {{"coefficients", {catalog::torus_coeff0, "0"}}}},
            {"map", {catalog::torus_swap_map[0], catalog::torus_swap_map[1]}},
            {"analyses", {"bundle", "cole"}},
            {"controls",
                {
                    {{"name", "identity"}, {"map", "identity"}},
                    {{"name", "constant_swap"}, {"polynomial", {{"coefficients", {"-4", "0"}}}}},
                    {{"name", "constant_identity"}, {"polynomial", {{"coefficients", {"-4", "0"}}}},
                        {"map", "identity"}},
                }},
            {"stability", true},
            {"expect",
                {
                    {"/analyses/cole/answer", "no"},
                    {"/controls/identity/cole/answer", "yes"},
                    {"/controls/constant_swap/cole/answer", "yes"},
                    {"/controls/constant_identity/cole/answer", "yes"},
                }},
        };
    }
    if (name == "graphdemo") {
        return {
            {"name", "graphdemo"},
            {"description", "algebraic closedness on graphs: a ring, a figure-eight and three trees"},
            {"base", {{"kind", "graph"}, {"vertices", 4}, {"edges", {{0, 1}, {1, 2}, {2, 3}, {3, 0}}},
                         {"samples_per_edge", 16}}},
            {"graphs",
                {
                    {{"name", "figure_eight"}, {"vertices", 1}, {"edges", {{0, 0}, {0, 0}}},
                        {"samples_per_edge", 16}},
                    {{"name", "star"}, {"vertices", 5}, {"edges", {{0, 1}, {0, 2}, {0, 3}, {0, 4}}},
                        {"samples_per_edge", 16}},
                    {{"name", "path"}, {"vertices", 4}, {"edges", {{0, 1}, {1, 2}, {2, 3}}}, {"samples_per_edge", 16}},
                    {{"name", "branched"}, {"vertices", 7},
                        {"edges", {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {3, 5}, {0, 6}}}, {"samples_per_edge", 16}},
                }},
            {"analyses", {"closedness"}},
            {"trials", 20},
            {"seed", 7},
            {"transplant_samples", 1000},
            {"stability", true},
            {"expect",
                {
                    {"/analyses/closedness/base/algebraically_closed", false},
                    {"/analyses/closedness/base/witnesses/0/root/answer", "no"},
                    {"/analyses/closedness/base/transplanted/answer", "no"},
                    {"/analyses/closedness/figure_eight/independent_cycles", 2},
                    {"/analyses/closedness/figure_eight/algebraically_closed", false},
                    {"/analyses/closedness/star/all_trials_have_roots", true},
                    {"/analyses/closedness/path/all_trials_have_roots", true},
                    {"/analyses/closedness/branched/all_trials_have_roots", true},
                    {"/analyses/closedness/branched/max_trial_residual", {{"at_most", 1e-9}}},
                }},
        };
    }
    std::string known;
    for (const auto & n : builtin_names())
        known += (known.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown builtin scenario '" + name + "' (known: " + known + ")");
}

// ---------------------------------------------------------------- running

namespace {

json coordinate_json(const BaseSpace & base, int sample)
{
    const auto & c = base.coordinate(sample);
    switch (base.kind()) {
    case BaseKind::interval: return {{"x", c.u}};
    case BaseKind::circle: return {{"theta", c.u}};
    case BaseKind::torus2: return {{"theta1", c.u}, {"theta2", c.v}};
    default: return {{"edge", c.u}, {"param", c.v}};
    }
}

std::string coordinate_header(BaseKind kind)
{
    switch (kind) {
    case BaseKind::interval: return "x";
    case BaseKind::circle: return "theta";
    case BaseKind::torus2: return "theta1,theta2";
    default: return "edge,param";
    }
}

std::string coordinate_fields(const BaseSpace & base, int s)
{
    const auto & c = base.coordinate(s);
    if (base.kind() == BaseKind::interval || base.kind() == BaseKind::circle)
        return format_double(c.u);
    return format_double(c.u) + "," + format_double(c.v);
}

BasePtr graph_from(const json & g)
{
    std::vector<Edge> edges;
    for (const auto & e : g["edges"])
        edges.push_back({e[0].get<int>(), e[1].get<int>()});
    return make_graph(g["vertices"].get<int>(), edges, g["samples_per_edge"].get<int>());
}

// The base at resolution n: sample count, grid side or samples per edge.
BasePtr make_base(const json & spec, int n)
{
    auto kind = spec["kind"].get<std::string>();
    if (kind == "interval")
        return make_interval(n);
    if (kind == "circle")
        return make_circle(n);
    if (kind == "torus2") {
        int n0 = spec["grid"][0].get<int>(), m0 = spec["grid"][1].get<int>();
        // keep the aspect ratio of the declared grid
        return make_torus2(n, std::max(3, static_cast<int>(std::lround(static_cast<double>(n) * m0 / n0))));
    }
    json g = spec;
    g["samples_per_edge"] = n;
    return graph_from(g);
}

int base_resolution(const json & spec)
{
    auto kind = spec["kind"].get<std::string>();
    if (kind == "torus2")
        return spec["grid"][0].get<int>();
    if (kind == "graph")
        return spec["samples_per_edge"].get<int>();
    return spec["samples"].get<int>();
}

std::vector<Expr> parse_all(const json & arr)
{
    std::vector<Expr> out;
    for (const auto & e : arr)
        out.push_back(parse(e.get<std::string>()));
    return out;
}

// Largest coefficient change along an edge against its bound; throws when exceeded.
json check_coefficient_jumps(const MonicPolynomial & p, const json & spec)
{
    const auto & base = *p.base();
    double scale = 0.0, worst = 0.0;
    int worst_edge = -1, worst_k = -1;
    for (const auto & c : p.coeffs())
        for (cplx v : c.values)
            scale = std::max(scale, std::abs(v));
    for (int e = 0; e < base.edge_count(); ++e)
        for (int k = 0; k < p.degree(); ++k) {
            double d = std::abs(p.coeffs()[k][base.edge(e).head] - p.coeffs()[k][base.edge(e).tail]);
            if (d > worst) {
                worst = d;
                worst_edge = e;
                worst_k = k;
            }
        }
    double bound = spec.contains("jump_bound") ? spec["jump_bound"].get<double>() : 0.5 * (1.0 + scale);
    if (worst > bound)
        throw Error("coefficient c" + std::to_string(worst_k) + " jumps by " + format_double(worst)
            + " across base edge " + std::to_string(worst_edge) + " (bound " + format_double(bound)
            + "); the sampled coefficients are not continuous at this resolution");
    return {{"max_jump", worst}, {"bound", bound}};
}

struct Loaded {
    std::shared_ptr<const MonicPolynomial> poly;
    json checks = json::array();
};

Loaded load_polynomial(const BasePtr & base, const json & spec)
{
    Loaded out;
    if (spec.contains("roots")) {
        if (spec.contains("assert")) {
            std::vector<std::string> texts = spec["roots"].get<std::vector<std::string>>();
            bool ok = true;
            std::string failed;
            for (const auto & a : catalog::check_example2_roots(texts)) {
                out.checks.push_back({{"name", a.name}, {"ok", a.ok}, {"detail", a.detail}});
                if (! a.ok) {
                    ok = false;
                    failed += "\n  " + a.name + ": " + a.detail;
                }
            }
            if (! ok)
                throw Error("/polynomial/roots: example2 constraints fail:" + failed);
        }
        out.poly = std::make_shared<const MonicPolynomial>(polynomial_from_roots(base, parse_all(spec["roots"])));
    } else {
        out.poly = std::make_shared<const MonicPolynomial>(polynomial_from_exprs(base, parse_all(spec["coefficients"])));
    }
    out.checks.push_back({{"name", "coefficient continuity"}, {"ok", true}, {"detail", check_coefficient_jumps(*out.poly, spec)}});
    return out;
}

SelfMap load_map(const BasePtr & base, const json & spec, double bound)
{
    if (spec.is_string())
        return identity_map(base);
    return sample_selfmap(base, parse_all(spec), bound);
}

json verdict_json(const Verdict & v, const std::optional<std::string> & ref)
{
    return {
        {"answer", to_string(v.answer)},
        {"certificate_kind", v.certificate_kind},
        {"certificate_data", v.certificate_data},
        {"witness_ref", ref ? json(*ref) : json(nullptr)},
        {"tolerances", v.tolerances},
        {"resolution", v.resolution},
        {"solution_count", v.solution_count},
        {"diagnostics", v.diagnostics},
    };
}

json bundle_json(const RootBundle & b)
{
    const auto & base = *b.base;
    double residual = 0.0;
    for (int s = 0; s < b.sample_count(); ++s) {
        auto c = b.poly ? b.poly->coefficients_at_sample(s) : expand_roots(b.fibers[s]);
        for (cplx r : b.fibers[s])
            residual = std::max(residual, std::abs(eval_monic(c, r)));
    }
    json merges = json::array();
    int flagged = 0;
    for (int s = 0; s < b.sample_count(); ++s) {
        flagged += b.branch_flags[s] ? 1 : 0;
        if (b.cluster_count[s] < b.degree)
            merges.push_back({{"sample", s}, {"coordinate", coordinate_json(base, s)}, {"clusters", b.cluster_count[s]}});
    }
    auto disc = check_discriminant(b);
    auto adm = is_admissible(b);
    json j = {
        {"degree", b.degree},
        {"samples", b.sample_count()},
        {"branch_tol", b.branch_tol},
        {"flagged_samples", flagged},
        {"merges", merges},
        {"crossing_events", b.events.size()},
        {"max_residual", residual},
        {"discriminant", {{"max_rel_error", disc.max_rel_error}, {"compared", disc.compared}}},
        {"admissible", adm.admissible},
        {"components", components(b).count},
    };
    if (base.kind() != BaseKind::graph) {
        json mono = json::array();
        for (const auto & loop : base.loop_basis())
            mono.push_back(cycle_type(loop_monodromy(b, loop)));
        j["loop_monodromy"] = mono;
    }
    return j;
}

void write_lift_csv(const RootBundle & A, const Lift & f, std::ostream & out)
{
    const auto & base = *A.base;
    out << "sample_index," << coordinate_header(base.kind()) << ",sheet_index,target_sheet,value_re,value_im\n";
    for (int s = 0; s < A.sample_count(); ++s)
        for (int i = 0; i < A.degree; ++i)
            out << s << ',' << coordinate_fields(base, s) << ',' << i << ',' << f.sheet[s][i] << ','
                << format_double(f.values[s][i].real()) << ',' << format_double(f.values[s][i].imag()) << '\n';
}

void write_fit_csv(const std::vector<SampledFunction> & q, std::ostream & out)
{
    const auto & base = *q.front().base;
    out << "sample_index," << coordinate_header(base.kind()) << ",power,q_re,q_im\n";
    for (int s = 0; s < base.sample_count(); ++s)
        for (size_t k = 0; k < q.size(); ++k)
            out << s << ',' << coordinate_fields(base, s) << ',' << k << ',' << format_double(q[k][s].real()) << ','
                << format_double(q[k][s].imag()) << '\n';
}

json lemma4_json(const ExtensionProblem & prob, long max_lifts)
{
    const auto & A = *prob.source;
    auto lifts = enumerate_lifts(prob.source, prob.target, max_lifts);
    auto branches = two_sheet_branch_samples(A);
    std::vector<std::array<int, 3>> counts(branches.size(), {0, 0, 0});
    int accepted = 0;
    for (const auto & f : lifts) {
        accepted += ah_fit(A, f).accepted ? 1 : 0;
        for (size_t b = 0; b < branches.size(); ++b) {
            Finiteness v = Finiteness::inconclusive;
            try {
                v = lemma4_test(A, f, branches[b]).verdict;
            } catch (const InvalidArgument &) {
            }
            ++counts[b][static_cast<int>(v)];
        }
    }
    json br = json::array();
    bool any = false;
    for (size_t b = 0; b < branches.size(); ++b) {
        int div = counts[b][static_cast<int>(Finiteness::divergent)];
        any = any || div > 0;
        br.push_back({
            {"sample", branches[b]},
            {"coordinate", coordinate_json(*A.base, branches[b])},
            {"divergent_lifts", div},
            {"finite_lifts", counts[b][static_cast<int>(Finiteness::finite)]},
            {"inconclusive_lifts", counts[b][static_cast<int>(Finiteness::inconclusive)]},
            {"has_divergent", div > 0},
        });
    }
    return {
        {"lifts_examined", lifts.size()},
        {"accepted_fits", accepted},
        {"has_accepted_fit", accepted > 0},
        {"branches", br},
        {"any_divergent", any},
    };
}

json closedness_json(const BasePtr & graph, int trials, std::uint64_t seed, int transplant)
{
    auto r = closedness_report(graph, trials, seed, transplant);
    json lengths = json::array();
    for (const auto & c : r.independent_cycles)
        lengths.push_back(c.size());
    json witnesses = json::array();
    for (const auto & w : r.witnesses)
        witnesses.push_back({
            {"winding_edge", w.winding_edge},
            {"cycle_length", w.cycle.size()},
            {"polynomial", "t^2 - g, g = exp(2 pi i s) along edge " + std::to_string(w.winding_edge) + ", 1 elsewhere"},
            {"root", verdict_json(w.root, std::nullopt)},
        });
    json tr = json::array();
    bool all = true;
    double worst = 0.0;
    for (const auto & t : r.trials) {
        tr.push_back({{"seed", t.seed}, {"root", to_string(t.root)}, {"max_residual", t.max_residual}});
        all = all && t.root == Answer::yes;
        worst = std::max(worst, t.max_residual);
    }
    return {
        {"has_cycle", r.has_cycle},
        {"algebraically_closed", r.algebraically_closed},
        {"independent_cycles", r.independent_cycles.size()},
        {"cycle_lengths", lengths},
        {"witnesses", witnesses},
        {"transplanted", r.transplanted ? verdict_json(*r.transplanted, std::nullopt) : json(nullptr)},
        {"trials", tr},
        {"all_trials_have_roots", all},
        {"max_trial_residual", worst},
    };
}

struct Artifacts {
    BundlePtr source, target;
    std::optional<Lift> cole_witness, ah_witness;
    std::optional<std::vector<SampledFunction>> ah_fit;
};

bool wants(const json & config, const std::string & a)
{
    for (const auto & x : config["analyses"])
        if (x == a)
            return true;
    return false;
}

// All analyses at one resolution. Returns {analyses, controls, load_checks}.
json analyze(const json & config, int n, std::uint64_t seed, Artifacts * art)
{
    json out = {{"analyses", json::object()}, {"controls", json::object()}, {"load_checks", json::array()}};
    auto & an = out["analyses"];
    const auto & bspec = config["base"];
    auto base = make_base(bspec, n);
    double bound = config.value("continuity_bound", 2.0);
    DecideOptions opts;
    opts.max_count = config.value("max_lifts", 10000L);

    if (config.contains("polynomial")) {
        auto loaded = load_polynomial(base, config["polynomial"]);
        out["load_checks"] = loaded.checks;
        auto adm = is_admissible(*loaded.poly);
        BundlePtr A = std::make_shared<const RootBundle>(build_bundle(loaded.poly, opts.bundle));
        std::optional<ExtensionProblem> prob;
        if (config.contains("map")) {
            auto phi = load_map(base, config["map"], bound);
            if (wants(config, "cole") || wants(config, "ah") || wants(config, "corollary3") || wants(config, "lemma4"))
                if (! adm.admissible)
                    throw InadmissibleError("the polynomial is not admissible: its discriminant vanishes on "
                        + std::to_string(adm.runs.size()) + " run(s) of samples");
            prob = ExtensionProblem{A, std::make_shared<const RootBundle>(pullback(*loaded.poly, phi, opts.bundle))};
        }
        if (art) {
            art->source = A;
            art->target = prob ? prob->target : nullptr;
        }
        if (wants(config, "bundle")) {
            an["bundle"]["source"] = bundle_json(*A);
            if (prob)
                an["bundle"]["target"] = bundle_json(*prob->target);
        }
        if (wants(config, "strips")) {
            an["strips"]["source"] = strips(*A).windings();
            if (prob)
                an["strips"]["target"] = strips(*prob->target).windings();
        }
        std::optional<Verdict> cole, ah;
        if (wants(config, "cole") || wants(config, "corollary3")) {
            cole = cole_extendable(*prob, opts);
            if (wants(config, "cole")) {
                bool w = art && cole->witness;
                an["cole"] = verdict_json(*cole, w ? std::optional<std::string>("witness_cole.csv") : std::nullopt);
                if (w)
                    art->cole_witness = cole->witness;
            }
        }
        if (wants(config, "ah") || wants(config, "corollary3")) {
            ah = ah_extendable(*prob, opts);
            if (wants(config, "ah")) {
                bool w = art && ah->witness;
                an["ah"] = verdict_json(*ah, w ? std::optional<std::string>("witness_ah.csv") : std::nullopt);
                if (w) {
                    art->ah_witness = ah->witness;
                    art->ah_fit = ah->fit;
                    an["ah"]["fit_ref"] = "fit_ah.csv";
                }
            }
        }
        if (wants(config, "corollary3")) {
            bool bad = ah->answer == Answer::yes && cole->answer == Answer::no;
            an["corollary3"] = {
                {"consistent", ! bad},
                {"ah", to_string(ah->answer)},
                {"cole", to_string(cole->answer)},
                {"note", bad ? "Arens-Hoffman yes with Cole no" : ""},
            };
        }
        if (wants(config, "lemma4"))
            an["lemma4"] = lemma4_json(*prob, opts.max_count);
    }

    if (config.contains("controls")) {
        for (const auto & c : config["controls"]) {
            auto loaded = load_polynomial(base, c.contains("polynomial") ? c["polynomial"] : config["polynomial"]);
            auto phi = load_map(base, c.contains("map") ? c["map"] : config["map"], bound);
            auto prob = make_extension_problem(*loaded.poly, phi, opts.bundle);
            out["controls"][c["name"].get<std::string>()]["cole"] = verdict_json(cole_extendable(prob, opts), std::nullopt);
        }
    }

    if (wants(config, "closedness")) {
        int trials = config.value("trials", 20);
        int transplant = config.value("transplant_samples", 1000);
        int scale_num = n, scale_den = base_resolution(bspec);
        if (base->kind() == BaseKind::graph)
            an["closedness"]["base"] = closedness_json(base, trials, seed, transplant);
        if (config.contains("graphs"))
            for (const auto & g : config["graphs"]) {
                json spec = g;
                // graphs follow the base resolution in proportion
                spec["samples_per_edge"] = std::max(1, g["samples_per_edge"].get<int>() * scale_num / scale_den);
                an["closedness"][g["name"].get<std::string>()] = closedness_json(graph_from(spec), trials, seed, transplant);
            }
    }
    return out;
}

// Verdict-level fields compared across resolutions.
void summarize(const json & j, const std::string & ptr, std::map<std::string, json> & out)
{
    static const std::set<std::string> keys
        = {"answer", "certificate_kind", "consistent", "algebraically_closed", "has_cycle", "has_divergent",
            "has_accepted_fit", "any_divergent", "all_trials_have_roots", "independent_cycles", "root"};
    if (j.is_object()) {
        for (const auto & [k, v] : j.items()) {
            auto p = at(ptr, k);
            if (k == "diagnostics" || k == "certificate_data" || k == "trials" || k == "tolerances")
                continue;
            if (keys.count(k) && ! v.is_object())
                out[p] = v;
            else if (ptr == "/analyses/strips")
                out[p] = v;
            else
                summarize(v, p, out);
        }
    } else if (j.is_array()) {
        for (size_t i = 0; i < j.size(); ++i)
            summarize(j[i], at(ptr, i), out);
    }
}

bool matches(const json & expected, const json & actual)
{
    if (expected.is_object() && expected.contains("approx"))
        return actual.is_number()
            && std::abs(actual.get<double>() - expected["approx"].get<double>()) <= expected["tol"].get<double>();
    if (expected.is_object() && (expected.contains("at_least") || expected.contains("at_most"))) {
        if (! actual.is_number())
            return false;
        double a = actual.get<double>();
        if (expected.contains("at_least") && a < expected["at_least"].get<double>())
            return false;
        if (expected.contains("at_most") && a > expected["at_most"].get<double>())
            return false;
        return true;
    }
    if (expected.is_object() && expected.contains("equals"))
        return expected["equals"] == actual;
    if (expected.is_number() && actual.is_number())
        return expected.get<double>() == actual.get<double>();
    return expected == actual;
}

void write_text(const fs::path & path, const std::string & text)
{
    std::ofstream f(path, std::ios::binary);
    if (! f)
        throw Error("cannot write " + path.string());
    f << text;
}

template <typename Fn>
void write_with(const fs::path & path, Fn && fn)
{
    std::ostringstream os;
    fn(os);
    write_text(path, os.str());
}

}

RunResult run_scenario(const json & config, const RunOptions & opts)
{
    require_valid(config);
    RunResult res;
    const int n = opts.samples.value_or(base_resolution(config["base"]));
    if (n < 1)
        throw InvalidArgument("--samples must be positive");
    const std::uint64_t seed = opts.seed.value_or(config.value("seed", std::uint64_t{0}));

    Artifacts art;
    json body = analyze(config, n, seed, &art);

    json v = {
        {"scenario", config["name"]},
        {"seed", seed},
        {"resolution", n},
        {"base", config["base"]["kind"]},
        {"analyses", body["analyses"]},
        {"controls", body["controls"]},
        {"load_checks", body["load_checks"]},
    };
    if (config.contains("description"))
        v["description"] = config["description"];

    bool stability = opts.stability || config.value("stability", false);
    if (stability) {
        std::map<std::string, json> ref;
        summarize(json{{"analyses", body["analyses"]}, {"controls", body["controls"]}}, "", ref);
        json runs = json::array();
        runs.push_back({{"resolution", n}, {"summary", ref}});
        bool stable = true;
        for (int f : {2, 4}) {
            json other = analyze(config, f * n, seed, nullptr);
            std::map<std::string, json> sum;
            summarize(json{{"analyses", other["analyses"]}, {"controls", other["controls"]}}, "", sum);
            for (const auto & [k, val] : ref) {
                auto it = sum.find(k);
                if (it == sum.end() || it->second != val) {
                    stable = false;
                    res.mismatches.push_back("stability: " + k + " is " + val.dump() + " at n = " + std::to_string(n)
                        + " but " + (it == sum.end() ? std::string("missing") : it->second.dump()) + " at n = "
                        + std::to_string(f * n));
                }
            }
            for (const auto & [k, val] : sum)
                if (! ref.count(k)) {
                    stable = false;
                    res.mismatches.push_back("stability: " + k + " appears only at n = " + std::to_string(f * n));
                }
            runs.push_back({{"resolution", f * n}, {"summary", sum}});
        }
        v["stability"] = {{"runs", runs}, {"stable", stable}};
    }

    json checks = json::array();
    if (config.contains("expect"))
        for (const auto & [ptr, expected] : config["expect"].items()) {
            json actual = nullptr;
            try {
                actual = v.at(json::json_pointer(ptr));
            } catch (const json::exception &) {
            }
            bool ok = matches(expected, actual);
            checks.push_back({{"pointer", ptr}, {"expected", expected}, {"actual", actual}, {"ok", ok}});
            if (! ok)
                res.mismatches.push_back("expect " + ptr + ": wanted " + expected.dump() + ", got " + actual.dump());
        }
    v["expectations"] = checks;
    v["status"] = res.mismatches.empty() ? "ok" : "mismatch";
    res.exit_code = res.mismatches.empty() ? 0 : 2;
    res.verdict = v;

    if (! opts.write_files)
        return res;
    fs::path dir(opts.out_dir);
    fs::create_directories(dir);
    write_text(dir / "verdict.json", v.dump(2) + "\n");
    bool csv = config.contains("outputs") ? config["outputs"].value("csv", true) : true;
    if (csv) {
        if (art.source)
            write_with(dir / "bundle_p.csv", [&](std::ostream & os) { write_bundle_csv(*art.source, os); });
        if (art.target)
            write_with(dir / "bundle_pT.csv", [&](std::ostream & os) { write_bundle_csv(*art.target, os); });
        if (art.cole_witness)
            write_with(dir / "witness_cole.csv", [&](std::ostream & os) { write_lift_csv(*art.source, *art.cole_witness, os); });
        if (art.ah_witness)
            write_with(dir / "witness_ah.csv", [&](std::ostream & os) { write_lift_csv(*art.source, *art.ah_witness, os); });
        if (art.ah_fit)
            write_with(dir / "fit_ah.csv", [&](std::ostream & os) { write_fit_csv(*art.ah_fit, os); });
    }
    bool svg = opts.svg || (config.contains("outputs") && config["outputs"].value("svg", false));
    if (svg) {
        auto kind = art.source ? art.source->base->kind() : BaseKind::graph;
        if (kind != BaseKind::interval && kind != BaseKind::circle)
            throw InvalidArgument("figures need a polynomial over an interval or circle base");
        fs::create_directories(dir / "figures");
        const std::string name = config["name"].get<std::string>();
        emit_figures(*art.source, (dir / "figures" / "bundle_p.svg").string(), name + ": roots of p");
        if (art.target)
            emit_figures(*art.target, (dir / "figures" / "bundle_pT.svg").string(), name + ": roots of the pullback");
    }
    return res;
}

}
