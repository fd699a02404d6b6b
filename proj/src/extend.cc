#include <polyext/error.hh>
#include <polyext/extend.hh>

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace polyext {

using json = nlohmann::json;

std::string to_string(Answer a)
{
    switch (a) {
    case Answer::yes:
        return "yes";
    case Answer::no:
        return "no";
    default:
        return "inconclusive";
    }
}

std::string to_string(Finiteness f)
{
    switch (f) {
    case Finiteness::finite:
        return "finite";
    case Finiteness::divergent:
        return "divergent";
    default:
        return "inconclusive";
    }
}

namespace {

using Mask = PointGraph::Mask;

Mask full_mask(int count) { return count >= 32 ? ~Mask(0) : (Mask(1) << count) - 1; }

json coordinate_json(const BaseSpace & base, int sample)
{
    const auto & c = base.coordinate(sample);
    switch (base.kind()) {
    case BaseKind::interval:
        return {{"x", c.u}};
    case BaseKind::circle:
        return {{"theta", c.u}};
    case BaseKind::torus2:
        return {{"theta1", c.u}, {"theta2", c.v}};
    default:
        return {{"edge", c.u}, {"param", c.v}};
    }
}

}

// ---------------------------------------------------------------------------------------------
// LiftProblem

LiftProblem::LiftProblem(BundlePtr source, BundlePtr target, std::vector<bool> active_edges) :
    source_(std::move(source)), target_(std::move(target)), ga_(*source_), gb_(*target_)
{
    if (source_->base != target_->base)
        throw InvalidArgument("lift problem needs both bundles on one base");
    const auto & base = *source_->base;
    if (active_edges.empty())
        active_edges.assign(base.edge_count(), true);
    if (static_cast<int>(active_edges.size()) != base.edge_count())
        throw InvalidArgument("edge mask size does not match the base");

    const int nn = ga_.node_count();
    active_node_.assign(nn, false);
    std::vector<std::vector<Arc>> adj(nn);
    for (int e = 0; e < base.edge_count(); ++e) {
        if (! active_edges[e])
            continue;
        const auto & ed = base.edge(e);
        for (int c = 0; c < ga_.clusters_at(ed.tail); ++c) {
            Mask m = ga_.forward(e, c);
            for (int d = 0; d < ga_.clusters_at(ed.head); ++d)
                if (m >> d & 1) {
                    int a = ga_.node(ed.tail, c), b = ga_.node(ed.head, d);
                    adj[a].push_back({b, e, true});
                    adj[b].push_back({a, e, false});
                    active_node_[a] = active_node_[b] = true;
                }
        }
    }
    arc_offset_.assign(nn + 1, 0);
    for (int a = 0; a < nn; ++a)
        arc_offset_[a + 1] = arc_offset_[a] + static_cast<int>(adj[a].size());
    arcs_.reserve(arc_offset_[nn]);
    for (auto & v : adj)
        arcs_.insert(arcs_.end(), v.begin(), v.end());

    initial_.resize(nn);
    for (int a = 0; a < nn; ++a)
        initial_[a] = active_node_[a] ? full_mask(gb_.clusters_at(ga_.sample_of(a))) : 0;
}

void LiftProblem::restrict_node(int node, Mask allowed)
{
    initial_.at(node) &= allowed;
}

bool LiftProblem::propagate(std::vector<Mask> & dom, std::vector<int> & queue, CspStats & st) const
{
    std::vector<char> queued(dom.size(), 0);
    std::deque<int> q(queue.begin(), queue.end());
    for (int a : queue)
        queued[a] = 1;
    queue.clear();
    while (! q.empty()) {
        int a = q.front();
        q.pop_front();
        queued[a] = 0;
        for (int k = arc_offset_[a]; k < arc_offset_[a + 1]; ++k) {
            const Arc & arc = arcs_[k];
            Mask support = 0;
            for (Mask m = dom[a]; m; m &= m - 1) {
                int b = std::countr_zero(m);
                support |= arc.forward ? gb_.forward(arc.edge, b) : gb_.backward(arc.edge, b);
            }
            Mask nd = dom[arc.to] & support;
            if (nd == dom[arc.to])
                continue;
            if (nd == 0) {
                int s = ga_.sample_of(arc.to);
                if (st.wipeout_samples.size() < 20
                    && std::find(st.wipeout_samples.begin(), st.wipeout_samples.end(), s) == st.wipeout_samples.end())
                    st.wipeout_samples.push_back(s);
                return false;
            }
            dom[arc.to] = nd;
            if (! queued[arc.to]) {
                queued[arc.to] = 1;
                q.push_back(arc.to);
            }
        }
    }
    return true;
}

bool LiftProblem::search(std::vector<Mask> & dom, const std::function<bool(const Assignment &)> & visit,
    long max_count, CspStats & st) const
{
    ++st.nodes;
    int best = -1, best_pop = 33, best_count = 0;
    for (int a = 0; a < static_cast<int>(dom.size()); ++a) {
        if (! active_node_[a])
            continue;
        int pop = std::popcount(dom[a]);
        if (pop <= 1)
            continue;
        int count = ga_.clusters_at(ga_.sample_of(a));
        if (pop < best_pop || (pop == best_pop && count < best_count)) {
            best = a;
            best_pop = pop;
            best_count = count;
        }
    }
    if (best < 0) {
        Assignment asg(dom.size(), -1);
        for (size_t a = 0; a < dom.size(); ++a)
            if (active_node_[a])
                asg[a] = std::countr_zero(dom[a]);
        ++st.solutions;
        bool more = visit(asg);
        if (st.solutions >= max_count) {
            st.hit_limit = true;
            return false;
        }
        return more;
    }

    // nearest target value first, canonical order on ties
    int s = ga_.sample_of(best);
    cplx here = source_->cluster_value(s, ga_.cluster_of(best));
    std::vector<int> values;
    for (Mask m = dom[best]; m; m &= m - 1)
        values.push_back(std::countr_zero(m));
    std::stable_sort(values.begin(), values.end(), [&](int x, int y) {
        return std::abs(target_->cluster_value(s, x) - here) < std::abs(target_->cluster_value(s, y) - here);
    });

    for (int v : values) {
        std::vector<Mask> next = dom;
        next[best] = Mask(1) << v;
        std::vector<int> queue{best};
        if (propagate(next, queue, st)) {
            if (! search(next, visit, max_count, st))
                return false;
        }
        else
            ++st.backtracks;
    }
    return true;
}

CspStats LiftProblem::solve(const std::function<bool(const Assignment &)> & visit, long max_count) const
{
    CspStats st;
    if (max_count <= 0)
        return st;
    std::vector<Mask> dom = initial_;
    for (size_t a = 0; a < dom.size(); ++a)
        if (active_node_[a] && dom[a] == 0) {
            st.wipeout_samples.push_back(ga_.sample_of(static_cast<int>(a)));
            return st;
        }
    std::vector<int> queue;
    for (int a = 0; a < static_cast<int>(dom.size()); ++a)
        if (active_node_[a])
            queue.push_back(a);
    if (! propagate(dom, queue, st))
        return st;
    search(dom, visit, max_count, st);
    return st;
}

Lift LiftProblem::make_lift(const Assignment & a) const
{
    const auto & A = *source_;
    const auto & B = *target_;
    Lift f;
    f.target = target_;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    f.sheet.assign(A.sample_count(), std::vector<int>(A.degree, -1));
    f.values.assign(A.sample_count(), std::vector<cplx>(A.degree, cplx(nan, nan)));
    for (int s = 0; s < A.sample_count(); ++s)
        for (int i = 0; i < A.degree; ++i) {
            int b = a[ga_.node_of_sheet(s, i)];
            if (b < 0)
                continue;
            for (int j = 0; j < B.degree; ++j)
                if (B.cluster_of[s][j] == b) {
                    f.sheet[s][i] = j;
                    f.values[s][i] = B.fibers[s][j];
                    break;
                }
        }
    return f;
}

// ---------------------------------------------------------------------------------------------
// validation

namespace {

double scale_at(const CoeffVec & c, cplx t)
{
    double a = std::abs(t), s = 1.0, pw = 1.0;
    for (cplx v : c) {
        s += std::abs(v) * pw;
        pw *= a;
    }
    return s + pw;
}

// Largest distance a target root moves along each edge under the target's own matching.
std::vector<double> edge_motion(const RootBundle & B)
{
    const auto & base = *B.base;
    std::vector<double> out(base.edge_count(), 0.0);
    for (int e = 0; e < base.edge_count(); ++e) {
        const auto & ed = base.edge(e);
        for (int i = 0; i < B.degree; ++i)
            out[e] = std::max(out[e], std::abs(B.fibers[ed.head][B.edge_perms[e][i]] - B.fibers[ed.tail][i]));
    }
    return out;
}

}

ValidationReport validate_lift(const RootBundle & A, const Lift & f)
{
    ValidationReport rep;
    if (! f.target)
        throw InvalidArgument("lift has no target bundle");
    const auto & B = *f.target;
    const auto & base = *A.base;
    auto fail = [&](const std::string & msg) {
        if (rep.ok)
            rep.failure = msg;
        rep.ok = false;
    };
    if (static_cast<int>(f.values.size()) != A.sample_count()) {
        fail("lift size does not match the source bundle");
        return rep;
    }
    for (int s = 0; s < A.sample_count(); ++s) {
        // without a polynomial, target roots are the fiber values themselves
        CoeffVec c = B.poly ? B.poly->coefficients_at_sample(s) : expand_roots(B.fibers[s]);
        for (int i = 0; i < A.degree; ++i) {
            cplx v = f.values[s][i];
            if (! std::isfinite(v.real()) || ! std::isfinite(v.imag())) {
                fail("undefined value at sample " + std::to_string(s));
                continue;
            }
            double r = std::abs(eval_monic(c, v)) / scale_at(c, v);
            rep.max_residual = std::max(rep.max_residual, r);
            if (r > 1e-9)
                fail("value at sample " + std::to_string(s) + " is not a target root (relative residual "
                    + format_double(r) + ")");
        }
        for (int i = 0; i < A.degree; ++i)
            for (int j = i + 1; j < A.degree; ++j)
                if (A.cluster_of[s][i] == A.cluster_of[s][j] && std::abs(f.values[s][i] - f.values[s][j]) > 1e-12)
                    fail("coincident source points at sample " + std::to_string(s) + " get different values");
    }
    auto motion = edge_motion(B);
    // a lift may move to another sheet of an identified cluster
    std::vector<double> spread(B.sample_count(), 0.0);
    for (int s = 0; s < B.sample_count(); ++s)
        for (int i = 0; i < B.degree; ++i)
            for (int j = i + 1; j < B.degree; ++j)
                if (B.cluster_of[s][i] == B.cluster_of[s][j])
                    spread[s] = std::max(spread[s], std::abs(B.fibers[s][i] - B.fibers[s][j]));
    for (int e = 0; e < base.edge_count(); ++e) {
        const auto & ed = base.edge(e);
        double bound = motion[e] + spread[ed.tail] + spread[ed.head] + 2.0 * B.branch_tol + 1e-12;
        for (int i = 0; i < A.degree; ++i) {
            double jump = std::abs(f.values[ed.head][A.edge_perms[e][i]] - f.values[ed.tail][i]);
            rep.max_jump_excess = std::max(rep.max_jump_excess, jump - bound);
            if (jump > bound)
                fail("value jumps by " + format_double(jump) + " along edge " + std::to_string(e));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------
// certificates

int distinct_count(const std::vector<cplx> & fiber, double tol)
{
    const int n = static_cast<int>(fiber.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    int count = n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(fiber[i] - fiber[j]) < tol) {
                int a = find(i), b = find(j);
                if (a != b) {
                    parent[a] = b;
                    --count;
                }
            }
    return count;
}

namespace {

// Greedy nearest-value assignment of `from` onto `to`.
std::vector<int> nearest_assignment(const std::vector<cplx> & from, const std::vector<cplx> & to)
{
    const int n = static_cast<int>(from.size());
    std::vector<std::tuple<double, int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            pairs.emplace_back(std::abs(from[i] - to[j]), i, j);
    std::sort(pairs.begin(), pairs.end());
    std::vector<int> out(n, -1);
    std::vector<bool> used(n, false);
    for (auto [d, i, j] : pairs)
        if (out[i] < 0 && ! used[j]) {
            out[i] = j;
            used[j] = true;
        }
    return out;
}

// Strip windings over a circle from value tracking alone, stepping over flagged samples.
std::vector<int> tracked_windings(const RootBundle & b)
{
    const int N = b.sample_count();
    int start = 0;
    while (start < N && b.branch_flags[start])
        ++start;
    if (start == N)
        throw InvalidArgument("every sample is flagged");
    std::vector<int> where(b.degree);
    std::iota(where.begin(), where.end(), 0);
    std::vector<cplx> cur = b.fibers[start];
    for (int k = 1; k <= N; ++k) {
        int s = (start + k) % N;
        if (b.branch_flags[s])
            continue;
        auto m = nearest_assignment(cur, b.fibers[s]);
        for (auto & w : where)
            w = m[w];
        cur = b.fibers[s];
    }
    return cycle_type(where);
}

bool divides(int b, int a) { return a % b == 0; }

// Every way of sending each source strip to a target strip whose winding divides it.
// Returns false when there are more than `limit` of them.
bool strip_assignments(const std::vector<int> & a, const std::vector<int> & b, long limit,
    std::vector<std::vector<int>> & out)
{
    std::vector<int> cur(a.size());
    bool ok = true;
    std::function<void(size_t)> rec = [&](size_t i) {
        if (! ok)
            return;
        if (i == a.size()) {
            if (static_cast<long>(out.size()) >= limit) {
                ok = false;
                return;
            }
            out.push_back(cur);
            return;
        }
        for (size_t j = 0; j < b.size(); ++j)
            if (divides(b[j], a[i])) {
                cur[i] = static_cast<int>(j);
                rec(i + 1);
            }
    };
    rec(0);
    return ok;
}

bool all_surjective(const std::vector<std::vector<int>> & assignments, size_t targets)
{
    for (const auto & asg : assignments) {
        std::vector<bool> hit(targets, false);
        for (int j : asg)
            hit[j] = true;
        if (std::find(hit.begin(), hit.end(), false) != hit.end())
            return false;
    }
    return true;
}

json csp_json(const CspStats & st)
{
    return {{"nodes", st.nodes}, {"backtracks", st.backtracks}, {"solutions", st.solutions},
        {"hit_limit", st.hit_limit}, {"wipeout_samples", st.wipeout_samples}};
}

json tolerance_json(const RootBundle & A, const DecideOptions & opts)
{
    return {{"branch_tol", A.branch_tol}, {"max_depth", opts.bundle.max_depth}, {"max_count", opts.max_count}};
}

}

bool recheck_certificate(const Verdict & v, const RootBundle & A, const RootBundle & B)
{
    const auto & d = v.certificate_data;
    if (v.certificate_kind == "fiber_count") {
        int s = d.at("sample").get<int>();
        double tol = A.branch_tol / 10.0;
        if (distinct_count(A.fibers.at(s), tol) >= distinct_count(B.fibers.at(s), tol))
            return false;
        auto wa = tracked_windings(A), wb = tracked_windings(B);
        std::vector<std::vector<int>> asg;
        if (! strip_assignments(wa, wb, 100000, asg) || asg.empty())
            return false;
        return all_surjective(asg, wb.size());
    }
    if (v.certificate_kind == "strip_divisibility") {
        auto wa = tracked_windings(A), wb = tracked_windings(B);
        int a = d.at("source_winding").get<int>();
        if (std::find(wa.begin(), wa.end(), a) == wa.end())
            return false;
        return std::none_of(wb.begin(), wb.end(), [&](int b) { return divides(b, a); });
    }
    if (v.certificate_kind == "csp_exhaustion") {
        auto sa = std::make_shared<RootBundle>(A);
        auto sb = std::make_shared<RootBundle>(B);
        LiftProblem prob(sa, sb);
        auto st = prob.solve([](const LiftProblem::Assignment &) { return false; }, 1);
        return st.solutions == 0;
    }
    return false;
}

// ---------------------------------------------------------------------------------------------
// Cole decision

ExtensionProblem make_extension_problem(const MonicPolynomial & p, const SelfMap & phi, const BundleOptions & opts)
{
    auto adm = is_admissible(p);
    if (! adm.admissible)
        throw InadmissibleError("polynomial is not admissible: discriminant vanishes on " + std::to_string(adm.runs.size())
            + " run(s) of at least " + std::to_string(adm.window) + " samples");
    ExtensionProblem out;
    out.source = std::make_shared<RootBundle>(build_bundle(p, opts));
    out.target = std::make_shared<RootBundle>(pullback(p, phi, opts));
    return out;
}

Verdict decide_lift(const BundlePtr & source, const BundlePtr & target, const DecideOptions & opts)
{
    const auto & A = *source;
    const auto & B = *target;
    Verdict v;
    v.resolution = A.sample_count();
    v.tolerances = tolerance_json(A, opts);
    const bool circle = A.base->kind() == BaseKind::circle;

    std::optional<json> divisibility_failure;
    std::optional<json> count_certificate;
    if (circle) {
        auto wa = strips(A).windings(), wb = strips(B).windings();
        v.diagnostics["source_strips"] = wa;
        v.diagnostics["target_strips"] = wb;
        if (A.branch_free() && B.branch_free()) {
            v.diagnostics["fast_path"] = "strip_divisibility";
            for (int a : wa)
                if (std::none_of(wb.begin(), wb.end(), [&](int b) { return divides(b, a); })) {
                    divisibility_failure = json{{"source_winding", a}, {"source_strips", wa}, {"target_strips", wb}};
                    break;
                }
        }
        else {
            std::vector<std::vector<int>> asg;
            if (strip_assignments(wa, wb, 100000, asg) && ! asg.empty() && all_surjective(asg, wb.size())) {
                for (int s = 0; s < A.sample_count(); ++s)
                    if (A.cluster_count[s] < B.cluster_count[s]) {
                        count_certificate = json{{"sample", s}, {"coordinate", coordinate_json(*A.base, s)},
                            {"source_count", A.cluster_count[s]}, {"target_count", B.cluster_count[s]},
                            {"source_strips", wa}, {"target_strips", wb}, {"count_tolerance", A.branch_tol}};
                        v.diagnostics["fast_path"] = "fiber_count";
                        break;
                    }
            }
        }
    }

    if (divisibility_failure) {
        v.answer = Answer::no;
        v.certificate_kind = "strip_divisibility";
        v.certificate_data = *divisibility_failure;
        v.solution_count = 0;
        v.diagnostics["certificate_rechecked"] = recheck_certificate(v, A, B);
        return v;
    }

    LiftProblem prob(source, target);
    std::vector<LiftProblem::Assignment> found;
    auto st = prob.solve(
        [&](const LiftProblem::Assignment & a) {
            if (found.size() < 16)
                found.push_back(a);
            return true;
        },
        opts.max_count);
    v.solution_count = st.solutions;
    v.diagnostics["csp"] = csp_json(st);

    if (st.solutions == 0) {
        v.answer = Answer::no;
        if (count_certificate) {
            v.certificate_kind = "fiber_count";
            v.certificate_data = *count_certificate;
        }
        else {
            v.certificate_kind = "csp_exhaustion";
            v.certificate_data = csp_json(st);
            v.certificate_data["source_nodes"] = prob.source_graph().node_count();
            v.certificate_data["target_nodes"] = prob.target_graph().node_count();
        }
        v.diagnostics["certificate_rechecked"] = recheck_certificate(v, A, B);
        return v;
    }
    if (count_certificate)
        v.diagnostics["fiber_count_overruled"] = *count_certificate;

    for (const auto & a : found) {
        Lift f = prob.make_lift(a);
        auto rep = validate_lift(A, f);
        if (rep.ok) {
            v.answer = Answer::yes;
            v.witness = std::move(f);
            v.diagnostics["validator"] = {{"ok", true}, {"max_residual", rep.max_residual}};
            return v;
        }
        v.diagnostics["validator"] = {{"ok", false}, {"failure", rep.failure}};
    }
    v.answer = Answer::inconclusive;
    v.certificate_kind = "validation_failure";
    v.certificate_data = v.diagnostics["validator"];
    return v;
}

Verdict cole_extendable(const ExtensionProblem & prob, const DecideOptions & opts)
{
    if (prob.source->base->kind() == BaseKind::torus2)
        return decide_lift_on_skeleton(prob.source, prob.target, opts);
    return decide_lift(prob.source, prob.target, opts);
}

Verdict cole_extendable(const MonicPolynomial & p, const SelfMap & phi, const DecideOptions & opts)
{
    return cole_extendable(make_extension_problem(p, phi, opts.bundle), opts);
}

Verdict decide_lift_on_skeleton(const BundlePtr & source, const BundlePtr & target, const DecideOptions & opts)
{
    const auto & A = *source;
    const auto & base = *A.base;
    Verdict v;
    v.resolution = A.sample_count();
    v.tolerances = tolerance_json(A, opts);

    std::vector<bool> skeleton(base.edge_count(), false);
    json mono_a = json::array(), mono_b = json::array();
    for (const auto & loop : base.loop_basis()) {
        for (const auto & st : loop)
            skeleton[st.edge] = true;
        mono_a.push_back(cycle_type(loop_monodromy(A, loop)));
        mono_b.push_back(cycle_type(loop_monodromy(*target, loop)));
    }
    v.diagnostics["source_monodromy"] = mono_a;
    v.diagnostics["target_monodromy"] = mono_b;

    LiftProblem skel(source, target, skeleton);
    std::vector<LiftProblem::Assignment> partial;
    auto sst = skel.solve(
        [&](const LiftProblem::Assignment & a) {
            partial.push_back(a);
            return true;
        },
        opts.max_count);
    v.diagnostics["skeleton_csp"] = csp_json(sst);
    if (sst.solutions == 0) {
        v.answer = Answer::no;
        v.solution_count = 0;
        v.certificate_kind = "csp_exhaustion";
        v.certificate_data = csp_json(sst);
        v.certificate_data["restricted_to"] = "generator loops";
        v.certificate_data["source_monodromy"] = mono_a;
        v.certificate_data["target_monodromy"] = mono_b;
        return v;
    }

    long total = 0;
    for (const auto & part : partial) {
        LiftProblem full(source, target);
        for (int a = 0; a < static_cast<int>(part.size()); ++a)
            if (part[a] >= 0)
                full.restrict_node(a, Mask(1) << part[a]);
        std::optional<LiftProblem::Assignment> first;
        auto fst = full.solve(
            [&](const LiftProblem::Assignment & a) {
                if (! first)
                    first = a;
                return true;
            },
            std::max(1L, opts.max_count - total));
        total += fst.solutions;
        if (first && ! v.witness) {
            Lift f = full.make_lift(*first);
            auto rep = validate_lift(A, f);
            if (rep.ok)
                v.witness = std::move(f);
        }
        if (total >= opts.max_count)
            break;
    }
    v.solution_count = total;
    if (v.witness)
        v.answer = Answer::yes;
    else if (total == 0) {
        v.answer = Answer::no;
        v.certificate_kind = "csp_exhaustion";
        v.certificate_data = {{"restricted_to", "full grid"}, {"skeleton_solutions", sst.solutions}};
    }
    else {
        v.answer = Answer::inconclusive;
        v.certificate_kind = "validation_failure";
    }
    return v;
}

std::vector<Lift> enumerate_lifts(const BundlePtr & source, const BundlePtr & target, long max_count, CspStats * stats)
{
    LiftProblem prob(source, target);
    std::vector<Lift> out;
    auto st = prob.solve(
        [&](const LiftProblem::Assignment & a) {
            out.push_back(prob.make_lift(a));
            return true;
        },
        max_count);
    if (stats)
        *stats = st;
    return out;
}

std::vector<Lift> enumerate_lifts(const MonicPolynomial & p, const SelfMap & phi, long max_count)
{
    auto prob = make_extension_problem(p, phi);
    return enumerate_lifts(prob.source, prob.target, max_count);
}

// ---------------------------------------------------------------------------------------------
// divided differences at a two-sheet branch

std::vector<int> two_sheet_branch_samples(const RootBundle & A)
{
    std::vector<int> out;
    auto kind = A.base->kind();
    if (kind != BaseKind::interval && kind != BaseKind::circle)
        return out;
    for (int s = 0; s < A.sample_count(); ++s)
        if (A.cluster_count[s] == A.degree - 1)
            out.push_back(s);
    return out;
}

namespace {

// Index-parametrized path through an interval or circle: tau in [0, N-1] (interval) or any real (circle).
struct LinePath {
    const BaseSpace & base;
    int N;
    bool circle;
    std::vector<int> edge_from; // edge from sample j to j+1

    explicit LinePath(const BaseSpace & b) : base(b), N(b.sample_count()), circle(b.kind() == BaseKind::circle)
    {
        edge_from.assign(N, -1);
        for (int e = 0; e < b.edge_count(); ++e)
            edge_from[b.edge(e).tail] = e;
    }

    int wrap(int j) const { return circle ? ((j % N) + N) % N : j; }
    bool valid(int j) const { return circle || (j >= 0 && j < N); }

    EdgePoint point(double tau) const
    {
        double fl = std::floor(tau);
        int j = static_cast<int>(fl);
        double t = tau - fl;
        if (! circle && j >= N - 1)
            return {edge_from[N - 2], 1.0};
        return {edge_from[wrap(j)], t};
    }
};

std::vector<cplx> fiber_at(const MonicPolynomial & p, const BaseSpace & base, const EdgePoint & ep)
{
    if (p.has_exact_roots())
        return p.exact_roots(base.coordinate_at(ep));
    return solve_fiber(p.coefficients_at(ep));
}

Finiteness classify(const std::vector<cplx> & q)
{
    const size_t m = q.size();
    if (m >= 5) {
        bool increasing = std::abs(q[m - 1]) > 1e6;
        for (size_t k = m - 5; k + 1 < m && increasing; ++k)
            increasing = std::abs(q[k + 1]) > std::abs(q[k]);
        if (increasing)
            return Finiteness::divergent;
    }
    if (m >= 4) {
        double tol = 1e-4 * std::max(1.0, std::abs(q[m - 1]));
        bool stable = true;
        for (size_t k = m - 3; k < m; ++k)
            stable = stable && std::abs(q[k] - q[k - 1]) <= tol;
        if (stable)
            return Finiteness::finite;
    }
    return Finiteness::inconclusive;
}

}

Lemma4Result lemma4_test(const RootBundle & A, const Lift & f, int branch_sample)
{
    const auto & base = *A.base;
    if (base.kind() != BaseKind::interval && base.kind() != BaseKind::circle)
        throw InvalidArgument("divided-difference test needs an interval or circle base");
    if (branch_sample < 0 || branch_sample >= A.sample_count())
        throw InvalidArgument("branch sample out of range");
    if (A.cluster_count[branch_sample] != A.degree - 1)
        throw InvalidArgument("branch structure at sample " + std::to_string(branch_sample) + " is not two-sheeted");
    if (! f.target || ! f.target->poly || ! A.poly)
        throw InvalidArgument("lift and bundle need their polynomials");
    const auto & pa = *A.poly;
    const auto & pb = *f.target->poly;
    LinePath path(base);

    int p1 = -1, p2 = -1;
    for (int i = 0; i < A.degree && p2 < 0; ++i)
        for (int j = i + 1; j < A.degree; ++j)
            if (A.cluster_of[branch_sample][i] == A.cluster_of[branch_sample][j]) {
                p1 = i;
                p2 = j;
                break;
            }

    // walk to the unflagged anchors on both sides, carrying the pair through the matchings
    struct Anchor {
        bool present = false;
        int sample = -1;
        double tau = 0.0;
        int a = -1, b = -1;
    };
    auto walk = [&](int dir) {
        Anchor an;
        int j = branch_sample, a = p1, b = p2;
        for (int steps = 0; steps < A.sample_count(); ++steps) {
            int k = j + dir;
            if (! path.valid(k))
                return an;
            if (dir > 0) {
                const auto & perm = A.edge_perms[path.edge_from[path.wrap(j)]];
                a = perm[a];
                b = perm[b];
            }
            else {
                auto inv = inverse(A.edge_perms[path.edge_from[path.wrap(k)]]);
                a = inv[a];
                b = inv[b];
            }
            j = k;
            if (! A.branch_flags[path.wrap(j)]) {
                an.present = true;
                an.sample = path.wrap(j);
                an.tau = j;
                an.a = a;
                an.b = b;
                return an;
            }
        }
        return an;
    };
    Anchor left = walk(-1), right = walk(+1);
    if (! left.present && ! right.present)
        throw InvalidArgument("no unflagged sample next to the branch");

    // locate the coalescence point between the anchors
    double lo = left.present ? left.tau : branch_sample, hi = right.present ? right.tau : branch_sample;
    auto gap_at = [&](double tau) {
        auto r = fiber_at(pa, base, path.point(tau));
        double g = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < r.size(); ++i)
            for (size_t j = i + 1; j < r.size(); ++j)
                g = std::min(g, std::abs(r[i] - r[j]));
        return g;
    };
    double y0 = branch_sample;
    double g0 = gap_at(y0);
    if (g0 > 0.0) {
        const int per_edge = 16;
        int steps = static_cast<int>(std::lround((hi - lo) * per_edge));
        for (int k = 0; k <= steps; ++k) {
            double tau = lo + (hi - lo) * k / std::max(1, steps);
            double g = gap_at(tau);
            if (g < g0) {
                g0 = g;
                y0 = tau;
            }
        }
        double a = std::max(lo, y0 - 1.0 / per_edge), b = std::min(hi, y0 + 1.0 / per_edge);
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double gc = gap_at(c), gd = gap_at(d);
        for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, std::abs(y0)); ++it) {
            if (gc < gd) {
                b = d;
                d = c;
                gd = gc;
                c = b - gr * (b - a);
                gc = gap_at(c);
            }
            else {
                a = c;
                c = d;
                gc = gd;
                d = a + gr * (b - a);
                gd = gap_at(d);
            }
        }
        double mid = 0.5 * (a + b);
        if (gap_at(mid) < g0)
            y0 = mid;
    }

    Lemma4Result res;
    res.branch_sample = branch_sample;
    res.location = base.coordinate_at(path.point(y0));

    auto approach = [&](const Anchor & an) {
        Lemma4Side side;
        cplx la = A.fibers[an.sample][an.a], lb = A.fibers[an.sample][an.b];
        cplx fa = f.values[an.sample][an.a], fb = f.values[an.sample][an.b];
        double prev_tau = an.tau;
        for (int k = 1; k <= 45; ++k) {
            double tau_k = y0 + (an.tau - y0) * std::ldexp(1.0, -k);
            // a few substeps so nearest-value tracking never jumps a whole half interval
            for (int sub = 1; sub <= 4; ++sub) {
                double tau = prev_tau + (tau_k - prev_tau) * sub / 4.0;
                auto ra = fiber_at(pa, base, path.point(tau));
                auto rb = fiber_at(pb, base, path.point(tau));
                double best = std::numeric_limits<double>::infinity();
                int bi = 0, bj = 1;
                for (size_t i = 0; i < ra.size(); ++i)
                    for (size_t j = 0; j < ra.size(); ++j)
                        if (i != j) {
                            double d = std::abs(ra[i] - la) + std::abs(ra[j] - lb);
                            if (d < best) {
                                best = d;
                                bi = static_cast<int>(i);
                                bj = static_cast<int>(j);
                            }
                        }
                la = ra[bi];
                lb = ra[bj];
                auto nearest = [&](cplx v) {
                    cplx out = rb.front();
                    for (cplx r : rb)
                        if (std::abs(r - v) < std::abs(out - v))
                            out = r;
                    return out;
                };
                fa = nearest(fa);
                fb = nearest(fb);
            }
            prev_tau = tau_k;
            double gap = std::abs(la - lb);
            side.last_gap = gap;
            if (gap < 1e-14 * (1.0 + std::abs(la)))
                break;
            side.quotients.push_back((fa - fb) / (la - lb));
        }
        side.verdict = classify(side.quotients);
        return side;
    };

    if (left.present)
        res.before = approach(left);
    if (right.present)
        res.after = approach(right);
    std::vector<Finiteness> sides;
    if (left.present)
        sides.push_back(res.before.verdict);
    if (right.present)
        sides.push_back(res.after.verdict);
    if (std::find(sides.begin(), sides.end(), Finiteness::divergent) != sides.end())
        res.verdict = Finiteness::divergent;
    else if (std::all_of(sides.begin(), sides.end(), [](Finiteness x) { return x == Finiteness::finite; }))
        res.verdict = Finiteness::finite;
    else
        res.verdict = Finiteness::inconclusive;
    return res;
}

// ---------------------------------------------------------------------------------------------
// Arens-Hoffman fit

std::vector<cplx> interpolate_coefficients(const std::vector<cplx> & x, const std::vector<cplx> & v)
{
    const int n = static_cast<int>(x.size());
    std::vector<cplx> c = v;
    for (int k = 0; k + 1 < n; ++k)
        for (int i = n - 1; i > k; --i) {
            cplx d = x[i] - x[i - k - 1];
            if (d == 0.0)
                throw Error("singular Vandermonde system");
            c[i] = (c[i] - c[i - 1]) / d;
        }
    for (int k = n - 2; k >= 0; --k)
        for (int i = k; i + 1 < n; ++i)
            c[i] -= x[k] * c[i + 1];
    return c;
}

AhFit ah_fit(const RootBundle & A, const Lift & f)
{
    if (! A.poly)
        throw InvalidArgument("bundle has no polynomial");
    const auto & base = *A.base;
    const int N = A.sample_count(), n = A.degree;
    AhFit out;

    // distance (in edges) to the nearest flagged sample
    std::vector<int> dist(N, std::numeric_limits<int>::max());
    std::deque<int> q;
    for (int s = 0; s < N; ++s)
        if (A.branch_flags[s]) {
            dist[s] = 0;
            q.push_back(s);
        }
    while (! q.empty()) {
        int s = q.front();
        q.pop_front();
        for (const auto & inc : base.incident(s))
            if (dist[inc.other] > dist[s] + 1) {
                dist[inc.other] = dist[s] + 1;
                q.push_back(inc.other);
            }
    }

    std::vector<std::vector<cplx>> qs(N);
    double qmax = 0.0;
    for (int s = 0; s < N; ++s) {
        if (A.branch_flags[s])
            continue;
        qs[s] = interpolate_coefficients(A.fibers[s], f.values[s]);
        for (cplx c : qs[s]) {
            if (! std::isfinite(c.real()) || ! std::isfinite(c.imag()))
                throw Error("non-finite Vandermonde solution at sample " + std::to_string(s));
            qmax = std::max(qmax, std::abs(c));
        }
    }

    double osc = 0.0;
    for (int e = 0; e < base.edge_count(); ++e) {
        const auto & ed = base.edge(e);
        for (const auto & c : A.poly->coeffs())
            osc = std::max(osc, std::abs(c[ed.head] - c[ed.tail]));
    }
    out.bound = std::max(50.0 * osc * n, 1e-9 * (1.0 + qmax));
    const int near = std::max(1, N / 100);

    auto jump = [&](int u, int w) {
        double m = 0.0;
        for (int k = 0; k < n; ++k)
            m = std::max(m, std::abs(qs[w][k] - qs[u][k]));
        return m;
    };
    auto refuse = [&](int sample, int edge, double j) {
        if (! out.refusal_kind.empty())
            return;
        out.refusal_kind = dist[sample] <= near ? "divided_difference_blowup" : "coefficient_discontinuity";
        out.refusal_sample = sample;
        out.refusal_edge = edge;
        out.refusal_jump = j;
    };
    auto note_worst = [&](int sample, double ratio) {
        if (ratio > out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_sample = sample;
        }
    };

    for (int e = 0; e < base.edge_count(); ++e) {
        const auto & ed = base.edge(e);
        if (A.branch_flags[ed.tail] || A.branch_flags[ed.head])
            continue;
        double j = jump(ed.tail, ed.head);
        out.max_jump = std::max(out.max_jump, j);
        int at = dist[ed.tail] <= dist[ed.head] ? ed.tail : ed.head;
        note_worst(at, j / out.bound);
        if (j > out.bound)
            refuse(at, e, j);
    }

    // across each connected run of flagged samples, compare the anchors on its boundary
    std::vector<int> zone(N, -1);
    int zones = 0;
    for (int s = 0; s < N; ++s) {
        if (! A.branch_flags[s] || zone[s] >= 0)
            continue;
        std::vector<int> members{s};
        zone[s] = zones;
        std::vector<int> anchors;
        for (size_t k = 0; k < members.size(); ++k)
            for (const auto & inc : base.incident(members[k])) {
                if (A.branch_flags[inc.other]) {
                    if (zone[inc.other] < 0) {
                        zone[inc.other] = zones;
                        members.push_back(inc.other);
                    }
                }
                else if (std::find(anchors.begin(), anchors.end(), inc.other) == anchors.end())
                    anchors.push_back(inc.other);
            }
        ++zones;
        double span = static_cast<double>(members.size()) + 1.0;
        for (size_t i = 0; i < anchors.size() && i < 16; ++i)
            for (size_t k = i + 1; k < anchors.size() && k < 16; ++k) {
                double j = jump(anchors[i], anchors[k]);
                out.max_jump = std::max(out.max_jump, j / span);
                note_worst(members.front(), j / (out.bound * span));
                if (j > out.bound * span)
                    refuse(members.front(), -1, j);
            }
    }

    // flagged samples take the coefficients of the nearest unflagged sample
    std::vector<int> src(N, -1);
    for (int s = 0; s < N; ++s)
        if (! A.branch_flags[s]) {
            src[s] = s;
            q.push_back(s);
        }
    while (! q.empty()) {
        int s = q.front();
        q.pop_front();
        for (const auto & inc : base.incident(s))
            if (src[inc.other] < 0) {
                src[inc.other] = src[s];
                q.push_back(inc.other);
            }
    }
    for (int k = 0; k < n; ++k) {
        std::vector<cplx> vals(N);
        for (int s = 0; s < N; ++s)
            vals[s] = src[s] >= 0 ? qs[src[s]][k] : cplx(0.0);
        out.q.emplace_back(A.base, std::move(vals));
    }
    out.accepted = out.refusal_kind.empty();
    return out;
}

Verdict ah_extendable(const ExtensionProblem & prob, const DecideOptions & opts)
{
    const auto & A = *prob.source;
    Verdict v;
    v.resolution = A.sample_count();
    v.tolerances = tolerance_json(A, opts);
    v.tolerances["fit_constant"] = 50;
    v.tolerances["divergence_bound"] = 1e6;
    v.tolerances["cauchy_tol"] = 1e-4;

    CspStats st;
    LiftProblem lp(prob.source, prob.target);
    auto branches = two_sheet_branch_samples(A);
    long examined = 0;
    bool undetermined = false;
    json first_refusal;
    json refusal_counts = json::object();
    auto count_refusal = [&](const std::string & kind) {
        refusal_counts[kind] = refusal_counts.value(kind, 0) + 1;
    };

    st = lp.solve(
        [&](const LiftProblem::Assignment & a) {
            ++examined;
            Lift f = lp.make_lift(a);
            auto fit = ah_fit(A, f);
            if (! fit.accepted) {
                count_refusal(fit.refusal_kind);
                if (first_refusal.is_null()) {
                    first_refusal = {{"kind", fit.refusal_kind}, {"sample", fit.refusal_sample},
                        {"coordinate", coordinate_json(*A.base, fit.refusal_sample)}, {"edge", fit.refusal_edge},
                        {"jump", fit.refusal_jump}, {"bound", fit.bound}, {"worst_sample", fit.worst_sample},
                        {"worst_coordinate", coordinate_json(*A.base, fit.worst_sample)},
                        {"worst_jump_over_bound", fit.worst_ratio}};
                }
                return true;
            }
            bool divergent = false, unsure = false;
            json tests = json::array();
            for (int b : branches) {
                auto r = lemma4_test(A, f, b);
                tests.push_back({{"sample", b}, {"verdict", to_string(r.verdict)}});
                if (r.verdict == Finiteness::divergent) {
                    divergent = true;
                    break;
                }
                if (r.verdict == Finiteness::inconclusive)
                    unsure = true;
            }
            if (divergent) {
                count_refusal("lemma4_divergent");
                if (first_refusal.is_null())
                    first_refusal = {{"kind", "lemma4_divergent"}, {"tests", tests}};
                return true;
            }
            if (unsure) {
                undetermined = true;
                count_refusal("lemma4_inconclusive");
                return true;
            }
            v.answer = Answer::yes;
            v.witness = std::move(f);
            v.fit = std::move(fit.q);
            v.diagnostics["lemma4"] = tests;
            v.diagnostics["fit_bound"] = fit.bound;
            v.diagnostics["fit_max_jump"] = fit.max_jump;
            return false;
        },
        opts.max_count);

    v.solution_count = st.solutions;
    v.diagnostics["lifts_examined"] = examined;
    v.diagnostics["refusals"] = refusal_counts;
    v.diagnostics["csp"] = csp_json(st);
    if (v.answer == Answer::yes)
        return v;
    if (examined == 0) {
        v.answer = Answer::no;
        v.certificate_kind = "no_lift";
        v.certificate_data = csp_json(st);
        return v;
    }
    if (undetermined || st.hit_limit) {
        v.answer = Answer::inconclusive;
        v.certificate_kind = "none";
        v.certificate_data = {{"hit_limit", st.hit_limit}, {"lemma4_inconclusive", undetermined}};
        return v;
    }
    v.answer = Answer::no;
    v.certificate_kind = "ah_refusal";
    v.certificate_data = first_refusal;
    v.certificate_data["lifts_examined"] = examined;
    return v;
}

Verdict ah_extendable(const MonicPolynomial & p, const SelfMap & phi, const DecideOptions & opts)
{
    return ah_extendable(make_extension_problem(p, phi, opts.bundle), opts);
}

ConsistencyReport corollary3_check(const ExtensionProblem & prob, const DecideOptions & opts)
{
    ConsistencyReport r;
    r.first = ah_extendable(prob, opts).answer;
    r.second = cole_extendable(prob, opts).answer;
    r.consistent = ! (r.first == Answer::yes && r.second == Answer::no);
    r.note = "ah=" + to_string(r.first) + " cole=" + to_string(r.second);
    return r;
}

ConsistencyReport root_implies_extendable_check(const ExtensionProblem & prob, const DecideOptions & opts)
{
    ConsistencyReport r;
    r.first = decide_lift(trivial_bundle(prob.target->base), prob.target, opts).answer;
    if (r.first != Answer::yes) {
        r.note = "no root of the pulled-back polynomial; nothing to check";
        return r;
    }
    r.second = ah_extendable(prob, opts).answer;
    r.consistent = r.second == Answer::yes;
    r.note = "root=" + to_string(r.first) + " ah=" + to_string(r.second);
    return r;
}

BundlePtr trivial_bundle(const BasePtr & base)
{
    auto b = std::make_shared<RootBundle>();
    b->base = base;
    b->degree = 1;
    const int N = base->sample_count(), E = base->edge_count();
    b->fibers.assign(N, {cplx(0.0)});
    b->edge_perms.assign(E, {0});
    b->branch_flags.assign(N, false);
    b->refinement.assign(E, {});
    b->cluster_of.assign(N, {0});
    b->cluster_count.assign(N, 1);
    return b;
}

}
