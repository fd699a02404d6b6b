#include <polyext/bundle.hh>
#include <polyext/error.hh>

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>

namespace polyext {

MonicPolynomial::MonicPolynomial(std::vector<SampledFunction> coeffs, ExactCoeffs exact, ExactRoots roots) :
    coeffs_(std::move(coeffs)), exact_(std::move(exact)), roots_(std::move(roots))
{
    if (coeffs_.size() < 2)
        throw InvalidArgument("monic polynomial must have degree at least 2");
    for (const auto & c : coeffs_)
        if (c.base != coeffs_.front().base)
            throw InvalidArgument("all coefficients must live on one base");
}

CoeffVec MonicPolynomial::coefficients_at_sample(int sample) const
{
    CoeffVec out(coeffs_.size());
    for (size_t k = 0; k < coeffs_.size(); ++k)
        out[k] = coeffs_[k].values.at(sample);
    return out;
}

CoeffVec MonicPolynomial::coefficients_at(const EdgePoint & p) const
{
    const auto & b = *base();
    if (auto s = b.sample_at(p))
        return coefficients_at_sample(*s);
    if (exact_)
        return exact_(b.coordinate_at(p));
    const auto & ed = b.edge(p.edge);
    CoeffVec out(coeffs_.size());
    for (size_t k = 0; k < coeffs_.size(); ++k)
        out[k] = (1.0 - p.t) * coeffs_[k].values[ed.tail] + p.t * coeffs_[k].values[ed.head];
    return out;
}

CoeffVec MonicPolynomial::exact_coefficients(const Coordinate & c) const
{
    if (! exact_)
        throw InvalidArgument("polynomial has no exact coefficient form");
    return exact_(c);
}

std::vector<cplx> MonicPolynomial::exact_roots(const Coordinate & c) const
{
    if (! roots_)
        throw InvalidArgument("polynomial has no exact root form");
    auto r = roots_(c);
    canonical_sort(r);
    return r;
}

CoeffVec expand_roots(const std::vector<cplx> & roots)
{
    // full[k] = coefficient of t^k, built up one linear factor at a time
    std::vector<cplx> full{1.0};
    for (cplx r : roots) {
        std::vector<cplx> next(full.size() + 1, 0.0);
        for (size_t k = 0; k < full.size(); ++k) {
            next[k + 1] += full[k];
            next[k] -= r * full[k];
        }
        full = std::move(next);
    }
    full.pop_back();
    return full;
}

MonicPolynomial polynomial_from_exprs(const BasePtr & base, const std::vector<Expr> & coeffs)
{
    std::vector<SampledFunction> sampled;
    for (const auto & e : coeffs)
        sampled.push_back(evaluate(e, base));
    BaseKind kind = base->kind();
    auto exact = [coeffs, kind](const Coordinate & c) {
        CoeffVec out(coeffs.size());
        for (size_t k = 0; k < coeffs.size(); ++k)
            out[k] = eval(coeffs[k], kind, c);
        return out;
    };
    return MonicPolynomial(std::move(sampled), exact);
}

MonicPolynomial polynomial_from_roots(const BasePtr & base, const std::vector<Expr> & roots)
{
    if (roots.size() < 2)
        throw InvalidArgument("factored form needs at least two roots");
    BaseKind kind = base->kind();
    for (const auto & r : roots)
        check_variables(r, kind);
    auto root_values = [roots, kind](const Coordinate & c) {
        std::vector<cplx> out(roots.size());
        for (size_t j = 0; j < roots.size(); ++j)
            out[j] = eval(roots[j], kind, c);
        return out;
    };
    std::vector<std::vector<cplx>> values(roots.size(), std::vector<cplx>(base->sample_count()));
    for (int s = 0; s < base->sample_count(); ++s) {
        auto c = expand_roots(root_values(base->coordinate(s)));
        for (size_t k = 0; k < c.size(); ++k)
            values[k][s] = c[k];
    }
    std::vector<SampledFunction> sampled;
    for (auto & v : values)
        sampled.emplace_back(base, std::move(v));
    auto exact = [root_values](const Coordinate & c) { return expand_roots(root_values(c)); };
    return MonicPolynomial(std::move(sampled), exact, root_values);
}

MonicPolynomial polynomial_from_samples(std::vector<SampledFunction> coeffs)
{
    return MonicPolynomial(std::move(coeffs));
}

cplx eval_monic(const CoeffVec & c, cplx t)
{
    cplx v = 1.0;
    for (size_t k = c.size(); k-- > 0;)
        v = v * t + c[k];
    return v;
}

namespace {

constexpr double tie_tol = 1e-12;

bool canonical_less(cplx a, cplx b)
{
    if (a.real() < b.real() - tie_tol)
        return true;
    if (std::abs(a.real() - b.real()) <= tie_tol)
        return a.imag() < b.imag();
    return false;
}

void eval_with_derivative(const CoeffVec & c, cplx t, cplx & p, cplx & dp)
{
    p = 1.0;
    dp = 0.0;
    for (size_t k = c.size(); k-- > 0;) {
        dp = dp * t + p;
        p = p * t + c[k];
    }
}

double residual_scale(const CoeffVec & c, cplx t)
{
    double a = std::abs(t), s = 1.0, pw = 1.0;
    for (size_t k = 0; k < c.size(); ++k) {
        s += std::abs(c[k]) * pw;
        pw *= a;
    }
    return s + pw;
}

}

void canonical_sort(std::vector<cplx> & roots)
{
    for (size_t i = 1; i < roots.size(); ++i) {
        cplx v = roots[i];
        size_t j = i;
        while (j > 0 && canonical_less(v, roots[j - 1])) {
            roots[j] = roots[j - 1];
            --j;
        }
        roots[j] = v;
    }
}

std::vector<cplx> solve_fiber(const CoeffVec & c)
{
    const int n = static_cast<int>(c.size());
    for (cplx v : c)
        if (! std::isfinite(v.real()) || ! std::isfinite(v.imag()))
            throw SolverError("non-finite polynomial coefficient");
    if (n == 0)
        return {};
    if (n == 1)
        return {-c[0]};

    // Aberth-Ehrlich iteration from a circle enclosing all roots
    double radius = 0.0;
    for (int k = 0; k < n; ++k)
        radius = std::max(radius, std::pow(std::abs(c[k]), 1.0 / (n - k)));
    radius = 2.0 * radius + 1e-3;
    cplx center = -c[n - 1] / static_cast<double>(n);
    std::vector<cplx> z(n);
    for (int k = 0; k < n; ++k)
        z[k] = center + std::polar(radius, 2.0 * std::numbers::pi * k / n + 0.4);

    // stop once steps are negligible or every residual is at rounding level;
    // near multiple roots the steps keep jittering long after that
    const double eps = std::numeric_limits<double>::epsilon();
    for (int iter = 0; iter < 2000; ++iter) {
        double worst = 0.0;
        bool settled = true;
        for (int k = 0; k < n; ++k) {
            cplx p, dp;
            eval_with_derivative(c, z[k], p, dp);
            if (p == 0.0)
                continue;
            if (std::abs(p) > 8.0 * n * eps * residual_scale(c, z[k]))
                settled = false;
            cplx sum = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != k)
                    sum += 1.0 / (z[k] - z[j]);
            cplx ratio = dp == 0.0 ? cplx(1e-3) : p / dp;
            cplx w = ratio / (1.0 - ratio * sum);
            if (! std::isfinite(w.real()) || ! std::isfinite(w.imag()))
                w = cplx(1e-6 * (1.0 + std::abs(z[k])), 0.0);
            z[k] -= w;
            worst = std::max(worst, std::abs(w) / (1.0 + std::abs(z[k])));
        }
        if (worst < 1e-15 || settled)
            break;
    }

    // Newton polish, keeping each step well inside the distance to the other roots
    for (int k = 0; k < n; ++k) {
        for (int step = 0; step < 6; ++step) {
            cplx p, dp;
            eval_with_derivative(c, z[k], p, dp);
            if (p == 0.0 || dp == 0.0)
                break;
            cplx next = z[k] - p / dp;
            double sep = std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j)
                if (j != k)
                    sep = std::min(sep, std::abs(z[k] - z[j]));
            if (std::abs(next - z[k]) > 0.1 * sep || std::abs(eval_monic(c, next)) >= std::abs(p))
                break;
            z[k] = next;
        }
        double res = std::abs(eval_monic(c, z[k]));
        double tol = 1e-9 * std::max(1.0, 1e-4 * residual_scale(c, z[k]));
        if (! (res < tol))
            throw SolverError("root iteration did not converge (residual " + format_double(res) + ")");
    }
    canonical_sort(z);
    return z;
}

Perm inverse(const Perm & p)
{
    Perm q(p.size());
    for (size_t i = 0; i < p.size(); ++i)
        q[p[i]] = static_cast<int>(i);
    return q;
}

Perm compose(const Perm & a, const Perm & b)
{
    Perm out(b.size());
    for (size_t i = 0; i < b.size(); ++i)
        out[i] = a[b[i]];
    return out;
}

cplx RootBundle::cluster_value(int sample, int cluster) const
{
    cplx sum = 0.0;
    int count = 0;
    for (int i = 0; i < degree; ++i)
        if (cluster_of[sample][i] == cluster) {
            sum += fibers[sample][i];
            ++count;
        }
    return sum / static_cast<double>(count);
}

namespace {

double fiber_min_gap(const std::vector<cplx> & f)
{
    double g = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < f.size(); ++i)
        for (size_t j = i + 1; j < f.size(); ++j)
            g = std::min(g, std::abs(f[i] - f[j]));
    return g;
}

struct Matching {
    Perm perm;
    double best;
    double second;
};

// Minimum total squared distance assignment, with the runner-up cost.
Matching best_matching(const std::vector<cplx> & a, const std::vector<cplx> & b)
{
    const int n = static_cast<int>(a.size());
    std::vector<double> d(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            d[i * n + j] = std::norm(a[i] - b[j]);
    constexpr double inf = std::numeric_limits<double>::infinity();
    Matching m{Perm(n), inf, inf};
    Perm cur(n);
    std::vector<bool> used(n, false);
    auto rec = [&](auto & self, int i, double cost) -> void {
        if (cost >= m.second)
            return;
        if (i == n) {
            if (cost < m.best) {
                m.second = m.best;
                m.best = cost;
                m.perm = cur;
            }
            else
                m.second = cost;
            return;
        }
        for (int j = 0; j < n; ++j)
            if (! used[j]) {
                used[j] = true;
                cur[i] = j;
                self(self, i + 1, cost + d[i * n + j]);
                used[j] = false;
            }
    };
    rec(rec, 0, 0.0);
    return m;
}

class BundleBuilder {
    // bisections allowed past max_depth when two sheets nearly meet in the segment
    static constexpr int extra_depth = 30;
    // a gap below this fraction of the fiber size counts as a near miss
    static constexpr double near_miss_scale = 1e-3;

    static double fiber_scale(const std::vector<cplx> & f0, const std::vector<cplx> & f1)
    {
        double r = 1.0;
        for (const auto * f : {&f0, &f1})
            for (cplx z : *f)
                r = std::max(r, std::abs(z));
        return r;
    }

public:
    BundleBuilder(PolyPtr p, const BundleOptions & opts) : opts_(opts)
    {
        b_.poly = std::move(p);
        b_.base = b_.poly->base();
        b_.degree = b_.poly->degree();
        b_.branch_tol = opts.branch_tol;
    }

    RootBundle run()
    {
        const auto & base = *b_.base;
        const int ns = base.sample_count();
        b_.fibers.resize(ns);
        for (int s = 0; s < ns; ++s)
            b_.fibers[s] = solve_fiber(b_.poly->coefficients_at_sample(s));
        b_.branch_flags.assign(ns, false);
        for (int s = 0; s < ns; ++s)
            b_.branch_flags[s] = fiber_min_gap(b_.fibers[s]) < opts_.branch_tol;

        b_.edge_perms.resize(base.edge_count());
        b_.refinement.resize(base.edge_count());
        for (int e = 0; e < base.edge_count(); ++e) {
            const auto & ed = base.edge(e);
            auto & micro = b_.refinement[e];
            b_.edge_perms[e] = match_segment(e, 0.0, b_.fibers[ed.tail], 1.0, b_.fibers[ed.head], 0, micro);
            std::sort(micro.begin(), micro.end(), [](const MicroSample & x, const MicroSample & y) { return x.t < y.t; });
        }

        detect_crossings();
        build_clusters();
        repair_zones();
        return std::move(b_);
    }

private:
    std::vector<cplx> fiber_at(int e, double t) const { return solve_fiber(b_.poly->coefficients_at({e, t})); }

    Perm match_segment(int e, double t0, const std::vector<cplx> & f0, double t1, const std::vector<cplx> & f1, int depth,
        std::vector<MicroSample> & micro, bool near_crossing = false)
    {
        Matching m = best_matching(f0, f1);
        if (2.0 * m.best < m.second)
            return m.perm;
        if (fiber_min_gap(f0) < opts_.branch_tol || fiber_min_gap(f1) < opts_.branch_tol)
            return m.perm;
        if (depth == opts_.max_depth) {
            // a crossing inside the segment stays ambiguous at every scale; crossing
            // detection flags it afterwards, so any matching will do here. A near miss
            // needs a finer scale than max_depth gives, so it may bisect further.
            double g = min_gap_on(e, t0, t1).second;
            if (g < opts_.branch_tol)
                return m.perm;
            near_crossing = g < near_miss_scale * fiber_scale(f0, f1);
        }
        if (depth >= opts_.max_depth && (! near_crossing || depth >= opts_.max_depth + extra_depth))
            throw AmbiguityError(e, "sheet matching on edge " + std::to_string(e) + " is still ambiguous after "
                + std::to_string(depth) + " bisections");
        double tm = 0.5 * (t0 + t1);
        auto fm = fiber_at(e, tm);
        micro.push_back({tm, fm});
        Perm first = match_segment(e, t0, f0, tm, fm, depth + 1, micro, near_crossing);
        Perm second = match_segment(e, tm, fm, t1, f1, depth + 1, micro, near_crossing);
        return compose(second, first);
    }

    double edge_motion(int e) const
    {
        const auto & ed = b_.base->edge(e);
        const auto & p = b_.edge_perms[e];
        double m = 0.0;
        for (int i = 0; i < b_.degree; ++i)
            m = std::max(m, std::abs(b_.fibers[ed.head][p[i]] - b_.fibers[ed.tail][i]));
        return m;
    }

    // Sheets can cross between two samples without either sample seeing a small gap.
    void detect_crossings()
    {
        const auto & base = *b_.base;
        const int ne = base.edge_count();
        std::vector<double> motion(ne);
        for (int e = 0; e < ne; ++e)
            motion[e] = edge_motion(e);
        for (int e = 0; e < ne; ++e) {
            const auto & ed = base.edge(e);
            if (b_.branch_flags[ed.tail] || b_.branch_flags[ed.head])
                continue;
            double local = motion[e];
            for (int s : {ed.tail, ed.head})
                for (const auto & inc : base.incident(s))
                    local = std::max(local, motion[inc.edge]);
            const auto & fu = b_.fibers[ed.tail];
            const auto & fw = b_.fibers[ed.head];
            const auto & p = b_.edge_perms[e];
            bool close = false;
            for (int i = 0; i < b_.degree && ! close; ++i)
                for (int j = i + 1; j < b_.degree; ++j) {
                    double g = std::min(std::abs(fu[i] - fu[j]), std::abs(fw[p[i]] - fw[p[j]]));
                    if (g < 4.0 * local) {
                        close = true;
                        break;
                    }
                }
            if (close)
                search_edge(e);
        }
    }

    // Location and size of the smallest fiber gap on [lo, hi] of edge e: a scan, then golden section.
    std::pair<double, double> min_gap_on(int e, double lo, double hi) const
    {
        const auto & ed = b_.base->edge(e);
        constexpr int scan = 16;
        auto gap_at = [&](double t) {
            if (t <= 0.0)
                return fiber_min_gap(b_.fibers[ed.tail]);
            if (t >= 1.0)
                return fiber_min_gap(b_.fibers[ed.head]);
            return fiber_min_gap(fiber_at(e, t));
        };
        const double width = hi - lo;
        int best_k = 0;
        double best_g = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= scan; ++k) {
            double g = gap_at(lo + width * k / scan);
            if (g < best_g) {
                best_g = g;
                best_k = k;
            }
        }
        double l = lo + width * std::max(0, best_k - 1) / scan;
        double h = lo + width * std::min(scan, best_k + 1) / scan;
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = h - ratio * (h - l), b = l + ratio * (h - l);
        double ga = gap_at(a), gb = gap_at(b);
        for (int it = 0; it < 60 && h - l > 1e-13 * std::max(width, 1e-300); ++it) {
            if (ga < gb) {
                h = b;
                b = a;
                gb = ga;
                a = h - ratio * (h - l);
                ga = gap_at(a);
            }
            else {
                l = a;
                a = b;
                ga = gb;
                b = l + ratio * (h - l);
                gb = gap_at(b);
            }
        }
        double t = ga < gb ? a : b;
        double g = std::min(ga, gb);
        if (best_g < g) {
            g = best_g;
            t = lo + width * best_k / scan;
        }
        return {t, g};
    }

    void search_edge(int e)
    {
        const auto & ed = b_.base->edge(e);
        auto [t, g] = min_gap_on(e, 0.0, 1.0);
        if (! (g < opts_.branch_tol))
            return;
        auto f = fiber_at(e, std::clamp(t, 1e-15, 1.0 - 1e-15));
        cplx value = 0.0;
        double gmin = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < f.size(); ++i)
            for (size_t j = i + 1; j < f.size(); ++j)
                if (std::abs(f[i] - f[j]) < gmin) {
                    gmin = std::abs(f[i] - f[j]);
                    value = 0.5 * (f[i] + f[j]);
                }
        b_.events.push_back({e, t, g, value});
        b_.branch_flags[t < 0.5 ? ed.tail : ed.head] = true;
    }

    // A tangential touch flags a few neighbouring samples; sheets are identified only where
    // the gap of the pair bottoms out, so that X_p meets itself at a single sample.
    bool pair_gap_is_local_min(int s, int i, int j, double g) const
    {
        for (const auto & inc : b_.base->incident(s)) {
            const auto & p = b_.edge_perms[inc.edge];
            int a, b;
            if (inc.forward) {
                a = p[i];
                b = p[j];
            }
            else {
                auto q = inverse(p);
                a = q[i];
                b = q[j];
            }
            if (std::abs(b_.fibers[inc.other][a] - b_.fibers[inc.other][b]) < g)
                return false;
        }
        return true;
    }

    void build_clusters()
    {
        const int ns = b_.sample_count();
        const int n = b_.degree;
        b_.cluster_of.assign(ns, {});
        b_.cluster_count.assign(ns, 0);
        std::vector<std::vector<int>> parent(ns);
        auto find = [&](int s, int i) {
            auto & par = parent[s];
            while (par[i] != i)
                i = par[i] = par[par[i]];
            return i;
        };
        auto unite = [&](int s, int i, int j) {
            i = find(s, i);
            j = find(s, j);
            if (i != j)
                parent[s][std::max(i, j)] = std::min(i, j);
        };
        for (int s = 0; s < ns; ++s) {
            parent[s].resize(n);
            for (int i = 0; i < n; ++i)
                parent[s][i] = i;
            if (! b_.branch_flags[s])
                continue;
            const auto & f = b_.fibers[s];
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    double g = std::abs(f[i] - f[j]);
                    if (g < opts_.branch_tol && pair_gap_is_local_min(s, i, j, g))
                        unite(s, i, j);
                }
        }
        for (const auto & ev : b_.events) {
            const auto & ed = b_.base->edge(ev.edge);
            int s = ev.t < 0.5 ? ed.tail : ed.head;
            const auto & f = b_.fibers[s];
            int bi = 0, bj = 1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    double c = std::abs(f[i] - ev.value) + std::abs(f[j] - ev.value);
                    if (c < best) {
                        best = c;
                        bi = i;
                        bj = j;
                    }
                }
            unite(s, bi, bj);
        }
        for (int s = 0; s < ns; ++s) {
            std::vector<int> id(n, -1);
            b_.cluster_of[s].resize(n);
            int count = 0;
            for (int i = 0; i < n; ++i) {
                int r = find(s, i);
                if (id[r] < 0)
                    id[r] = count++;
                b_.cluster_of[s][i] = id[r];
            }
            b_.cluster_count[s] = count;
        }
    }

    // Across a run of flagged samples on a path-like stretch of the base, merged sheets are
    // re-paired by value between the unflagged samples on either side.
    void repair_zones()
    {
        const auto & base = *b_.base;
        const int ns = base.sample_count();
        const int n = b_.degree;
        std::vector<int> zone(ns, -1);
        for (int s0 = 0; s0 < ns; ++s0) {
            if (! b_.branch_flags[s0] || zone[s0] >= 0)
                continue;
            std::vector<int> members{s0};
            zone[s0] = s0;
            for (size_t k = 0; k < members.size(); ++k)
                for (const auto & inc : base.incident(members[k]))
                    if (b_.branch_flags[inc.other] && zone[inc.other] < 0) {
                        zone[inc.other] = s0;
                        members.push_back(inc.other);
                    }

            bool path_like = true;
            std::vector<std::pair<int, Incidence>> exits;
            for (int s : members) {
                if (base.incident(s).size() != 2)
                    path_like = false;
                for (const auto & inc : base.incident(s))
                    if (! b_.branch_flags[inc.other])
                        exits.push_back({s, inc});
            }
            if (! path_like || exits.size() != 2)
                continue;

            // walk from anchor u into the zone and out to anchor w
            int u = exits[0].second.other;
            int cur = exits[0].first;
            std::vector<LoopStep> steps{{exits[0].second.edge, ! exits[0].second.forward}};
            int came_by = exits[0].second.edge;
            int w = -1;
            for (size_t guard = 0; guard <= members.size(); ++guard) {
                const Incidence * next = nullptr;
                for (const auto & inc : base.incident(cur))
                    if (inc.edge != came_by)
                        next = &inc;
                if (! next)
                    break;
                steps.push_back({next->edge, next->forward});
                came_by = next->edge;
                cur = next->other;
                if (! b_.branch_flags[cur]) {
                    w = cur;
                    break;
                }
            }
            if (w < 0 || w == u)
                continue;

            auto step_perm = [&](const LoopStep & st) {
                return st.forward ? b_.edge_perms[st.edge] : inverse(b_.edge_perms[st.edge]);
            };
            Perm head_part(n);
            for (int i = 0; i < n; ++i)
                head_part[i] = i;
            std::vector<bool> merged(n, false);
            for (size_t k = 0; k + 1 < steps.size(); ++k) {
                head_part = compose(step_perm(steps[k]), head_part);
                int s = b_.base->walk_samples({steps[k]}).back();
                for (int i = 0; i < n; ++i) {
                    int sheet = head_part[i];
                    for (int j = 0; j < n; ++j)
                        if (j != sheet && b_.cluster_of[s][j] == b_.cluster_of[s][sheet])
                            merged[i] = true;
                }
            }
            Perm total = compose(step_perm(steps.back()), head_part);

            std::vector<int> src, dst;
            for (int i = 0; i < n; ++i)
                if (merged[i]) {
                    src.push_back(i);
                    dst.push_back(total[i]);
                }
            if (src.size() < 2)
                continue;
            std::vector<cplx> a, b;
            for (int i : src)
                a.push_back(b_.fibers[u][i]);
            for (int j : dst)
                b.push_back(b_.fibers[w][j]);
            Matching m = best_matching(a, b);
            Perm wanted = total;
            for (size_t k = 0; k < src.size(); ++k)
                wanted[src[k]] = dst[m.perm[k]];
            Perm last = compose(wanted, inverse(head_part));
            const auto & st = steps.back();
            b_.edge_perms[st.edge] = st.forward ? last : inverse(last);
        }
    }

    BundleOptions opts_;
    RootBundle b_;
};

}

double RootBundle::min_gap(int sample) const { return fiber_min_gap(fibers.at(sample)); }

bool RootBundle::branch_free() const
{
    return std::none_of(branch_flags.begin(), branch_flags.end(), [](bool f) { return f; });
}

RootBundle build_bundle(PolyPtr p, const BundleOptions & opts)
{
    if (p->degree() > 10)
        throw InvalidArgument("degree above 10 is not supported by the sheet matcher");
    return BundleBuilder(std::move(p), opts).run();
}

RootBundle build_bundle(const MonicPolynomial & p, const BundleOptions & opts)
{
    return build_bundle(std::make_shared<const MonicPolynomial>(p), opts);
}

MonicPolynomial pullback_polynomial(const MonicPolynomial & p, const SelfMap & phi)
{
    const auto & base = p.base();
    if (phi.base() != base)
        throw InvalidArgument("self-map and polynomial live on different bases");
    const int n = p.degree();
    std::vector<std::vector<cplx>> values(n, std::vector<cplx>(base->sample_count()));
    for (int s = 0; s < base->sample_count(); ++s) {
        auto c = p.coefficients_at(phi.image(s));
        for (int k = 0; k < n; ++k)
            values[k][s] = c[k];
    }
    std::vector<SampledFunction> sampled;
    for (auto & v : values)
        sampled.emplace_back(base, std::move(v));
    MonicPolynomial::ExactCoeffs exact;
    MonicPolynomial::ExactRoots roots;
    if (phi.has_exact() && p.has_exact()) {
        exact = [f = p.exact_form(), phi](const Coordinate & c) { return f(phi.exact_image(c)); };
        if (p.has_exact_roots())
            roots = [f = p.exact_root_form(), phi](const Coordinate & c) { return f(phi.exact_image(c)); };
    }
    return MonicPolynomial(std::move(sampled), exact, roots);
}

RootBundle pullback(const MonicPolynomial & p, const SelfMap & phi, const BundleOptions & opts)
{
    return build_bundle(pullback_polynomial(p, phi), opts);
}

namespace {

cplx product_discriminant(const std::vector<cplx> & f)
{
    cplx d = 1.0;
    for (size_t i = 0; i < f.size(); ++i)
        for (size_t j = i + 1; j < f.size(); ++j) {
            cplx diff = f[i] - f[j];
            d *= diff * diff;
        }
    return d;
}

}

SampledFunction discriminant(const RootBundle & bundle)
{
    std::vector<cplx> v(bundle.sample_count());
    for (int s = 0; s < bundle.sample_count(); ++s)
        v[s] = product_discriminant(bundle.fibers[s]);
    return SampledFunction(bundle.base, std::move(v));
}

SampledFunction discriminant(const MonicPolynomial & p)
{
    std::vector<cplx> v(p.base()->sample_count());
    for (int s = 0; s < p.base()->sample_count(); ++s)
        v[s] = product_discriminant(solve_fiber(p.coefficients_at_sample(s)));
    return SampledFunction(p.base(), std::move(v));
}

cplx discriminant_by_resultant(const CoeffVec & c)
{
    const int n = static_cast<int>(c.size());
    const int size = 2 * n - 1;
    // p: 1, c_{n-1}, ..., c_0     p': n, (n-1) c_{n-1}, ..., c_1
    std::vector<cplx> a(n + 1), b(n);
    a[0] = 1.0;
    for (int k = 1; k <= n; ++k)
        a[k] = c[n - k];
    b[0] = static_cast<double>(n);
    for (int k = 1; k < n; ++k)
        b[k] = static_cast<double>(n - k) * c[n - k];
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(size, size);
    for (int r = 0; r < n - 1; ++r)
        for (int k = 0; k <= n; ++k)
            S(r, r + k) = a[k];
    for (int r = 0; r < n; ++r)
        for (int k = 0; k < n; ++k)
            S(n - 1 + r, r + k) = b[k];
    cplx res = S.partialPivLu().determinant();
    return (n * (n - 1) / 2) % 2 ? -res : res;
}

DiscriminantCheck check_discriminant(const RootBundle & bundle)
{
    DiscriminantCheck out;
    const auto & base = *bundle.base;
    for (int s = 0; s < bundle.sample_count(); ++s) {
        if (bundle.branch_flags[s])
            continue;
        bool near_flag = false;
        for (const auto & inc : base.incident(s))
            near_flag = near_flag || bundle.branch_flags[inc.other];
        if (near_flag)
            continue;
        cplx dp = product_discriminant(bundle.fibers[s]);
        cplx dr = discriminant_by_resultant(bundle.poly->coefficients_at_sample(s));
        double err = std::abs(dp - dr) / std::max(std::abs(dp), std::numeric_limits<double>::min());
        ++out.compared;
        if (err > out.max_rel_error) {
            out.max_rel_error = err;
            out.worst_sample = s;
        }
    }
    return out;
}

namespace {

AdmissibilityReport admissibility(const BasePtr & base, const std::vector<cplx> & d, double zero_tol, int window)
{
    AdmissibilityReport r;
    const int ns = base->sample_count();
    if (zero_tol <= 0.0) {
        double scale = 0.0;
        for (cplx v : d)
            scale = std::max(scale, std::abs(v));
        zero_tol = 1e-12 * std::max(1.0, scale);
    }
    if (window <= 0)
        window = std::max(5, ns / 100);
    r.zero_tol = zero_tol;
    r.window = window;
    std::vector<bool> zero(ns), seen(ns, false);
    for (int s = 0; s < ns; ++s)
        zero[s] = std::abs(d[s]) < zero_tol;
    for (int s0 = 0; s0 < ns; ++s0) {
        if (! zero[s0] || seen[s0])
            continue;
        std::vector<int> run{s0};
        seen[s0] = true;
        for (size_t k = 0; k < run.size(); ++k)
            for (const auto & inc : base->incident(run[k]))
                if (zero[inc.other] && ! seen[inc.other]) {
                    seen[inc.other] = true;
                    run.push_back(inc.other);
                }
        if (static_cast<int>(run.size()) >= window) {
            std::sort(run.begin(), run.end());
            r.runs.push_back(std::move(run));
        }
    }
    r.admissible = r.runs.empty();
    return r;
}

}

AdmissibilityReport is_admissible(const MonicPolynomial & p, double zero_tol, int window)
{
    return admissibility(p.base(), discriminant(p).values, zero_tol, window);
}

AdmissibilityReport is_admissible(const RootBundle & bundle, double zero_tol, int window)
{
    return admissibility(bundle.base, discriminant(bundle).values, zero_tol, window);
}

std::vector<std::vector<cplx>> evaluate_poly_on_bundle(const std::vector<SampledFunction> & q, const RootBundle & bundle)
{
    for (const auto & qk : q)
        if (qk.base != bundle.base)
            throw InvalidArgument("coefficients and bundle live on different bases");
    std::vector<std::vector<cplx>> out(bundle.sample_count(), std::vector<cplx>(bundle.degree));
    for (int s = 0; s < bundle.sample_count(); ++s)
        for (int i = 0; i < bundle.degree; ++i) {
            cplx lam = bundle.fibers[s][i], v = 0.0;
            for (size_t k = q.size(); k-- > 0;)
                v = v * lam + q[k].values[s];
            out[s][i] = v;
        }
    return out;
}

std::string format_double(double v)
{
    if (v == 0.0)
        v = 0.0; // drop the sign of negative zero
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_bundle_csv(const RootBundle & bundle, std::ostream & out)
{
    const auto & base = *bundle.base;
    out << "sample_index,";
    switch (base.kind()) {
    case BaseKind::interval: out << "x,"; break;
    case BaseKind::circle: out << "theta,"; break;
    case BaseKind::torus2: out << "theta1,theta2,"; break;
    case BaseKind::graph: out << "edge,param,"; break;
    }
    out << "sheet_index,root_re,root_im,branch_flag\n";
    bool two = base.kind() == BaseKind::torus2 || base.kind() == BaseKind::graph;
    for (int s = 0; s < bundle.sample_count(); ++s) {
        const auto & c = base.coordinate(s);
        for (int i = 0; i < bundle.degree; ++i) {
            out << s << ',' << format_double(c.u) << ',';
            if (two)
                out << format_double(c.v) << ',';
            out << i << ',' << format_double(bundle.fibers[s][i].real()) << ','
                << format_double(bundle.fibers[s][i].imag()) << ',' << (bundle.branch_flags[s] ? 1 : 0) << '\n';
        }
    }
}

}
