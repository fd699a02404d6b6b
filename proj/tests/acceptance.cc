// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include <polyext/catalog.hh>
#include <polyext/closedness.hh>
#include <polyext/error.hh>
#include <polyext/extend.hh>
#include <polyext/monodromy.hh>

#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace polyext;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

class Criterion {
public:
    explicit Criterion(std::string title) : title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

    void check(bool ok, const std::string & what)
    {
        if (! ok)
            failures_.push_back(what);
    }

    double elapsed() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    void time_limit(double seconds, double used)
    {
        char buf[96];
        std::snprintf(buf, sizeof buf, "took %.2f s, limit %.0f s", used, seconds);
        check(used < seconds, buf);
    }

    bool report(int index)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f s", elapsed());
        std::cout << (failures_.empty() ? "PASS" : "FAIL") << "  " << index << ". " << title_ << " (" << buf << ")";
        if (! notes_.empty())
            std::cout << ": " << notes_;
        std::cout << '\n';
        for (const auto & f : failures_)
            std::cout << "      " << f << '\n';
        return failures_.empty();
    }

    void note(const std::string & s) { notes_ += (notes_.empty() ? "" : "; ") + s; }

private:
    std::string title_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> failures_;
    std::string notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string str(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// Distinct values in a fiber, grouped greedily within tol.
int count_distinct(const std::vector<cplx> & fiber, double tol)
{
    std::vector<cplx> reps;
    for (cplx v : fiber)
        if (std::none_of(reps.begin(), reps.end(), [&](cplx r) { return std::abs(r - v) < tol; }))
            reps.push_back(v);
    return static_cast<int>(reps.size());
}

double max_fiber_residual(const RootBundle & b)
{
    double worst = 0.0;
    for (int s = 0; s < b.sample_count(); ++s) {
        auto c = b.poly->coefficients_at_sample(s);
        for (cplx r : b.fibers[s])
            worst = std::max(worst, std::abs(eval_monic(c, r)));
    }
    return worst;
}

// Lift check written against the bundles directly: every value is a target root at its sample,
// and along each edge the value follows the target's own sheet matching, starting from any
// target sheet identified with the one chosen at the tail.
std::string independent_lift_check(const RootBundle & A, const RootBundle & B, const Lift & f)
{
    for (int s = 0; s < A.sample_count(); ++s)
        for (int i = 0; i < A.degree; ++i) {
            double d = 1e300;
            for (cplx r : B.fibers[s])
                d = std::min(d, std::abs(f.values[s][i] - r));
            if (d > 1e-9)
                return "value at sample " + std::to_string(s) + " is " + str(d) + " from every target root";
        }
    for (int e = 0; e < A.base->edge_count(); ++e) {
        const auto & ed = A.base->edge(e);
        for (int i = 0; i < A.degree; ++i) {
            int j = f.sheet[ed.tail][i];
            cplx got = f.values[ed.head][A.edge_perms[e][i]];
            double best = 1e300;
            for (int k = 0; k < B.degree; ++k) {
                if (B.cluster_of[ed.tail][k] != B.cluster_of[ed.tail][j])
                    continue;
                int h = B.edge_perms[e][k];
                // any sheet identified with h at the head is the same point
                for (int l = 0; l < B.degree; ++l)
                    if (B.cluster_of[ed.head][l] == B.cluster_of[ed.head][h])
                        best = std::min(best, std::abs(got - B.fibers[ed.head][l]));
            }
            if (best > 1e-9)
                return "value leaves the target sheet along edge " + std::to_string(e) + " (off by " + str(best) + ")";
        }
    }
    return "";
}

std::string trig(std::mt19937_64 & rng, const char * var, double scale)
{
    std::normal_distribution<double> g(0.0, scale);
    char buf[320];
    std::snprintf(buf, sizeof buf, "(%.4f + %.4fi) + (%.4f + %.4fi)*exp(1i*%s) + (%.4f + %.4fi)*exp(-1i*%s)", g(rng),
        g(rng), g(rng), g(rng), var, g(rng), g(rng), var);
    return buf;
}

MonicPolynomial random_poly(const BasePtr & base, std::mt19937_64 & rng, int degree)
{
    const char * var = base->kind() == BaseKind::circle ? "theta" : "(2*pi*x)";
    std::vector<Expr> c;
    for (int k = 0; k < degree; ++k)
        c.push_back(parse(trig(rng, var, 0.7)));
    return polynomial_from_exprs(base, c);
}

// prod (t - l_j) with l_1 = a(theta) and l_2 = a(theta) + c (e^{i theta} - e^{i theta0}):
// a transversal crossing at the sample theta0, other roots generic.
MonicPolynomial crossing_poly(const BasePtr & circle, std::mt19937_64 & rng, int degree)
{
    std::uniform_int_distribution<int> sample(0, circle->sample_count() - 1);
    std::normal_distribution<double> g(0.0, 1.0);
    double theta0 = circle->coordinate(sample(rng)).u;
    std::string a = trig(rng, "theta", 0.7);
    char buf[200];
    std::snprintf(buf, sizeof buf, "(%.4f + %.4fi)*(exp(1i*theta) - exp(1i*%.17g))", g(rng), g(rng), theta0);
    std::vector<Expr> roots{parse(a), parse("(" + a + ") + " + buf)};
    for (int k = 2; k < degree; ++k)
        roots.push_back(parse(trig(rng, "theta", 1.0)));
    return polynomial_from_roots(circle, roots);
}

// One k-strip, sheets e^{i(theta + 2 pi j)/k}, assembled without the root solver.
BundlePtr strip_bundle(const BasePtr & circle, int k)
{
    auto b = std::make_shared<RootBundle>();
    b->base = circle;
    b->degree = k;
    const int N = circle->sample_count();
    for (int s = 0; s < N; ++s) {
        std::vector<cplx> f;
        for (int j = 0; j < k; ++j)
            f.push_back(std::polar(1.0, (circle->coordinate(s).u + 2 * pi * j) / k));
        b->fibers.push_back(f);
    }
    for (int e = 0; e < circle->edge_count(); ++e) {
        Perm p(k);
        bool wraps = circle->edge(e).head < circle->edge(e).tail;
        for (int j = 0; j < k; ++j)
            p[j] = wraps ? (j + 1) % k : j;
        b->edge_perms.push_back(p);
    }
    b->branch_flags.assign(N, false);
    b->refinement.assign(circle->edge_count(), {});
    std::vector<int> ids(k);
    for (int j = 0; j < k; ++j)
        ids[j] = j;
    b->cluster_of.assign(N, ids);
    b->cluster_count.assign(N, k);
    return b;
}

ExtensionProblem example1(int n)
{
    auto I = make_interval(n);
    return make_extension_problem(catalog::example1_polynomial(I), sample_selfmap(I, {parse(catalog::example1_map)}));
}

ExtensionProblem example2(int n, const char * map, double bound)
{
    auto C = make_circle(n);
    return make_extension_problem(catalog::example2_polynomial(C), sample_selfmap(C, {parse(map)}, bound));
}

// ---------------------------------------------------------------- criteria

bool criterion1()
{
    Criterion c("Builtin example1 (tangential merge on the interval), n = 2001");
    auto t0 = std::chrono::steady_clock::now();
    const int n = 2001;
    auto prob = example1(n);
    const auto & A = *prob.source;
    auto ah = ah_extendable(prob);
    auto cole = cole_extendable(prob);
    c.check(ah.answer == Answer::yes, "ah_extendable is " + to_string(ah.answer));
    c.check(cole.answer == Answer::yes, "cole_extendable is " + to_string(cole.answer));

    auto lifts = enumerate_lifts(prob.source, prob.target);
    int nearest = static_cast<int>(std::lround(2.0 / 3.0 * (n - 1)));
    auto branches = two_sheet_branch_samples(A);
    c.check(std::find(branches.begin(), branches.end(), nearest) != branches.end(),
        "sample " + std::to_string(nearest) + " (x nearest 2/3) is not a two-sheet branch sample");
    int divergent = 0, accepted = 0;
    for (const auto & f : lifts) {
        try {
            divergent += lemma4_test(A, f, nearest).verdict == Finiteness::divergent;
        } catch (const Error &) {
        }
        accepted += ah_fit(A, f).accepted;
    }
    c.check(divergent > 0, "no lift has a divergent divided quotient at x = 2/3");
    c.check(accepted > 0, "no lift is accepted by the coefficient fit");
    c.time_limit(5.0, seconds_since(t0));
    c.note(std::to_string(lifts.size()) + " lifts, " + std::to_string(divergent) + " divergent at x = 2/3, "
        + std::to_string(accepted) + " fitted");

    for (int m : {2 * n, 4 * n}) {
        auto p = example1(m);
        auto a2 = ah_extendable(p).answer, c2 = cole_extendable(p).answer;
        c.check(a2 == Answer::yes && c2 == Answer::yes,
            "n = " + std::to_string(m) + ": ah " + to_string(a2) + ", cole " + to_string(c2));
    }
    c.note("stable at 4002, 8004");
    return c.report(1);
}

bool criterion2()
{
    Criterion c("Builtin example2 (strips without a continuous extension), n = 2000");
    for (int n : {2000, 4000, 8000}) {
        auto t0 = std::chrono::steady_clock::now();
        std::string at = "n = " + std::to_string(n) + ": ";
        auto prob = example2(n, catalog::example2_map, catalog::example2_continuity_bound);
        auto sa = strips(*prob.source).windings(), sb = strips(*prob.target).windings();
        c.check(sa == std::vector<int>{2, 3}, at + "source strips are not {2, 3}");
        c.check(sb == std::vector<int>{2, 3}, at + "pullback strips are not {2, 3}");
        auto cole = cole_extendable(prob);
        c.check(cole.answer == Answer::yes, at + "cole_extendable is " + to_string(cole.answer));
        c.check(cole.solution_count == 1, at + "CSP solution count " + std::to_string(cole.solution_count));
        auto ah = ah_extendable(prob);
        c.check(ah.answer == Answer::no, at + "ah_extendable is " + to_string(ah.answer));
        if (ah.answer == Answer::no) {
            const auto & d = ah.certificate_data;
            c.check(d.value("kind", "") == "divided_difference_blowup", at + "refusal kind " + d.value("kind", "none"));
            double theta = d.contains("coordinate") ? d["coordinate"].value("theta", 0.0) : 0.0;
            c.check(std::abs(theta - pi) < 0.05, at + "refusal at theta = " + str(theta));
            if (n == 2000)
                c.note("refusal at theta = " + str(theta));
        }
        if (n == 2000)
            c.time_limit(10.0, seconds_since(t0));
    }
    c.note("stable at 4000, 8000");
    return c.report(2);
}

bool criterion3()
{
    Criterion c("Builtin example3 (fiber count mismatch), n = 2000");
    for (int n : {2000, 4000, 8000}) {
        auto t0 = std::chrono::steady_clock::now();
        std::string at = "n = " + std::to_string(n) + ": ";
        auto prob = example2(n, catalog::example3_map, 2.0);
        auto v = cole_extendable(prob);
        c.check(v.answer == Answer::no, at + "cole_extendable is " + to_string(v.answer));
        c.check(v.certificate_kind == "fiber_count", at + "certificate " + v.certificate_kind);
        if (v.certificate_kind == "fiber_count") {
            const auto & d = v.certificate_data;
            int s = d["sample"];
            c.check(s == n / 2, at + "certificate at sample " + std::to_string(s) + ", nearest to -1 is " + std::to_string(n / 2));
            c.check(d["source_count"] == 4 && d["target_count"] == 5,
                at + "counts " + d["source_count"].dump() + " vs " + d["target_count"].dump());
            int ra = count_distinct(prob.source->fibers[s], 1e-6), rb = count_distinct(prob.target->fibers[s], 1e-6);
            c.check(ra == 4 && rb == 5, at + "recount gives " + std::to_string(ra) + " vs " + std::to_string(rb));
            c.check(recheck_certificate(v, *prob.source, *prob.target), at + "certificate recheck failed");
        }
        if (n == 2000)
            c.time_limit(5.0, seconds_since(t0));
    }
    c.note("4 vs 5 at theta = pi, stable at 4000, 8000");
    return c.report(3);
}

bool criterion4()
{
    Criterion c("Torus example, grid 64 x 64");
    auto T = make_torus2(64, 64);
    auto p = polynomial_from_exprs(T, {parse(catalog::torus_coeff0), parse("0")});
    auto swap = sample_selfmap(T, {parse(catalog::torus_swap_map[0]), parse(catalog::torus_swap_map[1])});
    auto v = cole_extendable(make_extension_problem(p, swap));
    c.check(v.answer == Answer::no, "swap: cole_extendable is " + to_string(v.answer));
    auto id = cole_extendable(make_extension_problem(p, identity_map(T)));
    c.check(id.answer == Answer::yes, "identity control: cole_extendable is " + to_string(id.answer));
    c.time_limit(10.0, c.elapsed());
    c.note("swap " + to_string(v.answer) + " (" + v.certificate_kind + "), identity " + to_string(id.answer));
    return c.report(4);
}

bool criterion5()
{
    Criterion c("Strip monodromy: winding pairs (a, b) in {1..6}^2");
    auto C = make_circle(120);
    int yes = 0;
    for (int a = 1; a <= 6; ++a)
        for (int b = 1; b <= 6; ++b) {
            std::string at = "(" + std::to_string(a) + ", " + std::to_string(b) + "): ";
            auto A = strip_bundle(C, a), B = strip_bundle(C, b);
            auto v = decide_lift(A, B);
            bool divides = a % b == 0;
            c.check((v.answer == Answer::yes) == divides, at + "verdict " + to_string(v.answer));
            if (v.answer != Answer::yes)
                continue;
            ++yes;
            // g(A) = B: every sheet of B is hit over every sample
            bool onto = true;
            for (int s = 0; s < C->sample_count(); ++s) {
                std::set<int> hit(v.witness->sheet[s].begin(), v.witness->sheet[s].end());
                onto = onto && static_cast<int>(hit.size()) == b;
            }
            c.check(onto, at + "witness is not onto the b-strip");
            auto why = independent_lift_check(*A, *B, *v.witness);
            c.check(why.empty(), at + why);
        }
    c.note(std::to_string(yes) + " yes, " + std::to_string(36 - yes) + " no");
    return c.report(5);
}

bool criterion6()
{
    Criterion c("Cole and AH agreement, 100 random circle instances");
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> deg(2, 4), mapdeg(-2, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto C = make_circle(256);
    int done = 0, both_yes = 0, ah_yes = 0, cole_yes = 0, inadmissible = 0;
    while (done < 100) {
        int n = deg(rng);
        // every third instance has two roots crossing at a sample, so the bundles branch
        auto p = done % 3 == 2 ? crossing_poly(C, rng, n) : random_poly(C, rng, n);
        int d = mapdeg(rng);
        double amp = 0.4 * u(rng), phase = 2 * pi * u(rng), shift = 2 * pi * u(rng);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d*theta + %.4f*sin(theta + %.4f) + %.4f", d, amp, phase, shift);
        auto phi = sample_selfmap(C, {parse(buf)}, std::abs(d) + 3.0);
        ExtensionProblem prob;
        try {
            prob = make_extension_problem(p, phi);
        } catch (const InadmissibleError &) {
            ++inadmissible;
            continue;
        }
        ++done;
        auto cole = cole_extendable(prob);
        auto ah = ah_extendable(prob);
        std::string at = "instance " + std::to_string(done) + " (degree " + std::to_string(n) + ", map " + buf + "): ";
        c.check(! (ah.answer == Answer::yes && cole.answer == Answer::no), at + "AH yes with Cole no");
        for (const auto * v : {&cole, &ah}) {
            if (v->answer != Answer::yes)
                continue;
            auto rep = validate_lift(*prob.source, *v->witness);
            c.check(rep.ok, at + "validator: " + rep.failure);
            auto why = independent_lift_check(*prob.source, *prob.target, *v->witness);
            c.check(why.empty(), at + why);
        }
        ah_yes += ah.answer == Answer::yes;
        cole_yes += cole.answer == Answer::yes;
        both_yes += ah.answer == Answer::yes && cole.answer == Answer::yes;
    }
    c.time_limit(60.0, c.elapsed());
    c.note("Cole yes " + std::to_string(cole_yes) + ", AH yes " + std::to_string(ah_yes) + ", redrawn "
        + std::to_string(inadmissible));
    return c.report(6);
}

bool criterion7()
{
    Criterion c("Identity endomorphism, 20 polynomials on each of interval and circle");
    std::mt19937_64 rng(777);
    double worst = 0.0;
    for (bool circle : {false, true}) {
        auto base = circle ? make_circle(200) : make_interval(200);
        int done = 0;
        while (done < 20) {
            auto p = random_poly(base, rng, 2 + done % 3);
            ExtensionProblem prob;
            try {
                prob = make_extension_problem(p, identity_map(base));
            } catch (const InadmissibleError &) {
                continue;
            }
            ++done;
            std::string at = std::string(circle ? "circle" : "interval") + " #" + std::to_string(done) + ": ";
            auto cole = cole_extendable(prob);
            auto ah = ah_extendable(prob);
            c.check(cole.answer == Answer::yes, at + "cole " + to_string(cole.answer));
            c.check(ah.answer == Answer::yes, at + "ah " + to_string(ah.answer));
            if (cole.answer == Answer::yes)
                c.check(cole.witness->values == prob.source->fibers, at + "Cole witness is not the projection");
            if (ah.answer != Answer::yes)
                continue;
            double err = 0.0;
            for (int s = 0; s < base->sample_count(); ++s)
                for (int k = 0; k < prob.source->degree; ++k)
                    err = std::max(err, std::abs((*ah.fit)[k][s] - (k == 1 ? 1.0 : 0.0)));
            c.check(err < 1e-8, at + "fit differs from q = t by " + str(err));
            worst = std::max(worst, err);
        }
    }
    c.note("largest coefficient error " + str(worst));
    return c.report(7);
}

bool criterion8()
{
    Criterion c("Bundle numerics");
    std::mt19937_64 rng(31337);
    std::vector<std::pair<std::string, RootBundle>> bundles;
    bundles.emplace_back("example 1", build_bundle(catalog::example1_polynomial(make_interval(2001))));
    bundles.emplace_back("example 2", build_bundle(catalog::example2_polynomial(make_circle(2000))));
    for (int k = 0; k < 20; ++k) {
        auto base = k % 2 ? make_circle(300) : make_interval(300);
        bundles.emplace_back("random #" + std::to_string(k), build_bundle(random_poly(base, rng, 2 + k % 4)));
    }
    double res = 0.0, disc = 0.0;
    for (const auto & [name, b] : bundles) {
        double r = max_fiber_residual(b);
        c.check(r < 1e-9, name + ": fiber residual " + str(r));
        auto d = check_discriminant(b);
        c.check(d.compared > 0, name + ": no samples compared for the discriminant");
        c.check(d.max_rel_error < 1e-8, name + ": discriminant relative error " + str(d.max_rel_error));
        res = std::max(res, r);
        disc = std::max(disc, d.max_rel_error);
        if (b.base->kind() != BaseKind::interval)
            continue;
        // random closed walks on the interval
        const int E = b.base->edge_count();
        std::uniform_int_distribution<int> start(0, E - 1), len(1, 200);
        for (int w = 0; w < 10; ++w) {
            int s = start(rng);
            Loop walk;
            int pos = s;
            std::vector<int> stack;
            for (int step = 0, L = len(rng); step < L; ++step) {
                bool fwd = (rng() & 1) && pos < E;
                if (pos == 0)
                    fwd = true;
                if (fwd) {
                    walk.push_back({pos, true});
                    ++pos;
                } else {
                    walk.push_back({pos - 1, false});
                    --pos;
                }
            }
            while (pos > s) {
                walk.push_back({pos - 1, false});
                --pos;
            }
            while (pos < s) {
                walk.push_back({pos, true});
                ++pos;
            }
            auto m = loop_monodromy(b, walk);
            Perm id(b.degree);
            for (int i = 0; i < b.degree; ++i)
                id[i] = i;
            c.check(m == id, name + ": a contractible walk has nontrivial monodromy");
        }
    }
    c.note("max residual " + str(res) + ", max discriminant error " + str(disc));
    return c.report(8);
}

// Random tree by Pruefer sequence.
BasePtr random_tree(std::mt19937_64 & rng, int vertices, int samples_per_edge)
{
    std::uniform_int_distribution<int> pick(0, vertices - 1);
    std::vector<int> seq(vertices - 2), degree(vertices, 1);
    for (auto & v : seq) {
        v = pick(rng);
        ++degree[v];
    }
    std::vector<Edge> edges;
    for (int v : seq)
        for (int leaf = 0; leaf < vertices; ++leaf)
            if (degree[leaf] == 1) {
                edges.push_back({leaf, v});
                --degree[leaf];
                --degree[v];
                break;
            }
    int a = -1;
    for (int v = 0; v < vertices; ++v)
        if (degree[v] == 1) {
            if (a < 0)
                a = v;
            else
                edges.push_back({a, v});
        }
    return make_graph(vertices, edges, samples_per_edge);
}

bool criterion9()
{
    Criterion c("Closedness suite");
    auto ring = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}}, 12);
    auto r = closedness_report(ring, 0, 1, 0);
    c.check(! r.algebraically_closed, "circle graph reported algebraically closed");
    c.check(r.witnesses.size() == 1, "circle graph: " + std::to_string(r.witnesses.size()) + " witnesses");
    if (! r.witnesses.empty()) {
        const auto & w = r.witnesses.front();
        c.check(w.root.answer == Answer::no, "witness t^2 - g has root verdict " + to_string(w.root.answer));
        auto B = std::make_shared<const RootBundle>(build_bundle(*w.polynomial));
        c.check(recheck_certificate(w.root, *trivial_bundle(ring), *B), "no-root certificate fails its recheck");
        // g = -c0 has modulus 1 and winds once around the cycle
        const auto & g = w.polynomial->coeffs()[0];
        auto walk = ring->walk_samples(w.cycle);
        double turn = 0.0, modulus = 0.0;
        for (size_t k = 0; k + 1 < walk.size(); ++k)
            turn += std::arg(g[walk[k + 1]] / g[walk[k]]);
        for (cplx v : g.values)
            modulus = std::max(modulus, std::abs(std::abs(v) - 1.0));
        c.check(std::abs(std::abs(turn) / (2 * pi) - 1.0) < 1e-9, "g winds " + str(turn / (2 * pi)) + " times");
        c.check(modulus < 1e-12, "|g| differs from 1 by " + str(modulus));
    }

    std::mt19937_64 rng(4242);
    int trials = 0;
    for (int t = 0; t < 3; ++t) {
        auto tree = random_tree(rng, 6 + 2 * t, 8);
        auto tr = closedness_report(tree, 20, 100 + t);
        c.check(! tr.has_cycle && tr.algebraically_closed, "tree " + std::to_string(t) + " has a cycle");
        c.check(tr.trials.size() == 20, "tree " + std::to_string(t) + ": " + std::to_string(tr.trials.size()) + " trials");
        for (const auto & trial : tr.trials) {
            c.check(trial.root == Answer::yes, "tree " + std::to_string(t) + ": random quadratic without a root");
            c.check(trial.max_residual < 1e-9, "tree " + std::to_string(t) + ": root residual " + str(trial.max_residual));
            ++trials;
        }
    }

    auto eight = make_graph(1, {{0, 0}, {0, 0}}, 12);
    auto r8 = closedness_report(eight, 0, 1, 0);
    c.check(r8.independent_cycles.size() == 2, "figure-eight: " + std::to_string(r8.independent_cycles.size()) + " cycles");
    c.check(r8.witnesses.size() == 2, "figure-eight: " + std::to_string(r8.witnesses.size()) + " witnesses");
    if (r8.witnesses.size() == 2)
        c.check(r8.witnesses[0].winding_edge != r8.witnesses[1].winding_edge, "figure-eight witnesses share an edge");
    for (const auto & w : r8.witnesses)
        c.check(w.root.answer == Answer::no, "figure-eight witness has a root");
    c.time_limit(30.0, c.elapsed());
    c.note(std::to_string(trials) + " tree trials with roots");
    return c.report(9);
}

// ---------------------------------------------------------------- CLI contract

std::string cli_path()
{
    if (const char * p = std::getenv("POLYEXT_CLI_PATH"))
        return p;
    return POLYEXT_CLI_PATH;
}

int run_cli(const std::string & args, const fs::path & log)
{
    std::string cmd = "\"" + cli_path() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path & p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

bool criterion10()
{
    Criterion c("Determinism and output formats");
    auto root = fs::temp_directory_path() / "polyext_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    auto log = root / "log.txt";

    for (const char * name : {"example3", "graphdemo"}) {
        std::vector<fs::path> dirs{root / (std::string(name) + "_a"), root / (std::string(name) + "_b")};
        for (const auto & d : dirs) {
            int code = run_cli(std::string("builtin ") + name + " --seed 11 --out \"" + d.string() + "\"", log);
            c.check(code == 0, std::string(name) + ": exit code " + std::to_string(code) + ": " + slurp(log));
        }
        for (const char * f : {"verdict.json", "bundle_p.csv", "bundle_pT.csv"}) {
            if (! fs::exists(dirs[0] / f) && std::string(f) != "verdict.json")
                continue;
            c.check(fs::exists(dirs[1] / f) && slurp(dirs[0] / f) == slurp(dirs[1] / f),
                std::string(name) + ": " + f + " differs between runs");
        }
    }
    auto v = json::parse(slurp(root / "example3_a" / "verdict.json"));
    const auto & cole = v["analyses"]["cole"];
    for (const char * k : {"answer", "certificate_kind", "certificate_data", "witness_ref", "tolerances", "resolution"})
        c.check(cole.contains(k), std::string("verdict lacks ") + k);
    c.check(slurp(root / "example3_a" / "bundle_p.csv").rfind("sample_index,theta,sheet_index,root_re,root_im,branch_flag\n", 0)
            == 0,
        "bundle CSV header");
    auto g = json::parse(slurp(root / "graphdemo_a" / "verdict.json"));
    c.check(g["seed"] == 11, "graphdemo seed not recorded");

    // 2: a declared expectation fails
    auto wrong = json::parse(slurp(fs::path(POLYEXT_SOURCE_DIR) / "scenarios" / "example3.json"));
    wrong["expect"]["/analyses/cole/answer"] = "yes";
    wrong["stability"] = false;
    std::ofstream(root / "wrong.json") << wrong.dump(2);
    int code = run_cli("run \"" + (root / "wrong.json").string() + "\" --out \"" + (root / "wrong").string() + "\"", log);
    c.check(code == 2, "expectation mismatch exits with " + std::to_string(code));

    // 1: schema violation, with the JSON pointer in the message
    json bad = {{"name", "bad"}, {"base", {{"kind", "sphere"}}}, {"analyses", {"cole"}}};
    std::ofstream(root / "bad.json") << bad.dump();
    code = run_cli("run \"" + (root / "bad.json").string() + "\" --out \"" + (root / "bad").string() + "\"", log);
    c.check(code == 1, "schema violation exits with " + std::to_string(code));
    c.check(slurp(log).find("/base/kind") != std::string::npos, "schema message lacks the pointer /base/kind");

    // 1: runtime errors
    code = run_cli("run \"" + (root / "missing.json").string() + "\"", log);
    c.check(code == 1, "missing file exits with " + std::to_string(code));
    json inadm = {{"name", "inadm"}, {"base", {{"kind", "interval"}, {"samples", 101}}},
        {"polynomial", {{"coefficients", {"0", "0"}}}}, {"map", "identity"}, {"analyses", {"cole"}}};
    std::ofstream(root / "inadm.json") << inadm.dump();
    code = run_cli("run \"" + (root / "inadm.json").string() + "\" --out \"" + (root / "inadm").string() + "\"", log);
    c.check(code == 1, "inadmissible polynomial exits with " + std::to_string(code));
    code = run_cli("builtin example9", log);
    c.check(code == 1, "unknown builtin exits with " + std::to_string(code));

    fs::remove_all(root);
    return c.report(10);
}

}

int main()
{
    std::cout << "polyext acceptance\n";
    std::vector<std::function<bool()>> all
        = {criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8, criterion9,
            criterion10};
    int failed = 0;
    for (auto & run : all) {
        try {
            failed += run() ? 0 : 1;
        } catch (const std::exception & e) {
            std::cout << "FAIL  criterion aborted: " << e.what() << '\n';
            ++failed;
        }
    }
    std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria fail") << '\n';
    return failed == 0 ? 0 : 1;
}
