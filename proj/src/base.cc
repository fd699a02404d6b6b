#include <polyext/base.hh>
#include <polyext/error.hh>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace polyext {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double snap_eps = 1e-9;

double wrap_angle(double theta)
{
    double r = std::fmod(theta, two_pi);
    if (r < 0.0)
        r += two_pi;
    if (r >= two_pi)
        r = 0.0;
    return r;
}

double wrap_delta(double d)
{
    while (d > std::numbers::pi)
        d -= two_pi;
    while (d < -std::numbers::pi)
        d += two_pi;
    return d;
}

}

std::string to_string(BaseKind kind)
{
    switch (kind) {
    case BaseKind::interval: return "interval";
    case BaseKind::circle: return "circle";
    case BaseKind::graph: return "graph";
    case BaseKind::torus2: return "torus2";
    }
    return "unknown";
}

void BaseSpace::finish()
{
    incidence_.assign(coords_.size(), {});
    for (int e = 0; e < edge_count(); ++e) {
        const auto & ed = edges_[e];
        if (ed.tail == ed.head)
            throw InvalidArgument("edge " + std::to_string(e) + " joins a sample to itself");
        incidence_[ed.tail].push_back({e, true, ed.head});
        incidence_[ed.head].push_back({e, false, ed.tail});
    }
}

BasePtr make_interval(int n)
{
    if (n < 2)
        throw InvalidArgument("interval needs at least 2 samples, got " + std::to_string(n));
    auto b = std::shared_ptr<BaseSpace>(new BaseSpace());
    b->kind_ = BaseKind::interval;
    b->coords_.resize(n);
    for (int i = 0; i < n; ++i)
        b->coords_[i] = {static_cast<double>(i) / static_cast<double>(n - 1), 0.0};
    for (int i = 0; i + 1 < n; ++i)
        b->edges_.push_back({i, i + 1});
    b->finish();
    return b;
}

BasePtr make_circle(int n)
{
    if (n < 3)
        throw InvalidArgument("circle needs at least 3 samples, got " + std::to_string(n));
    auto b = std::shared_ptr<BaseSpace>(new BaseSpace());
    b->kind_ = BaseKind::circle;
    b->coords_.resize(n);
    for (int i = 0; i < n; ++i)
        b->coords_[i] = {two_pi * static_cast<double>(i) / static_cast<double>(n), 0.0};
    Loop loop;
    for (int i = 0; i < n; ++i) {
        b->edges_.push_back({i, (i + 1) % n});
        loop.push_back({i, true});
    }
    b->loops_.push_back(std::move(loop));
    b->finish();
    return b;
}

BasePtr make_torus2(int n, int m)
{
    if (n < 3 || m < 3)
        throw InvalidArgument("torus2 grid needs n, m >= 3");
    auto b = std::shared_ptr<BaseSpace>(new BaseSpace());
    b->kind_ = BaseKind::torus2;
    b->grid_n_ = n;
    b->grid_m_ = m;
    b->coords_.resize(static_cast<size_t>(n) * m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            b->coords_[i * m + j] = {two_pi * i / n, two_pi * j / m};
            b->edges_.push_back({i * m + j, ((i + 1) % n) * m + j});
            b->edges_.push_back({i * m + j, i * m + (j + 1) % m});
        }
    Loop first, second;
    for (int i = 0; i < n; ++i)
        first.push_back({2 * (i * m), true});
    for (int j = 0; j < m; ++j)
        second.push_back({2 * j + 1, true});
    b->loops_.push_back(std::move(first));
    b->loops_.push_back(std::move(second));
    b->finish();
    return b;
}

BasePtr make_graph(int vertices, const std::vector<Edge> & edges, int samples_per_edge)
{
    if (vertices < 1)
        throw InvalidArgument("graph needs at least one vertex");
    if (samples_per_edge < 1)
        throw InvalidArgument("samples_per_edge must be positive");
    auto b = std::shared_ptr<BaseSpace>(new BaseSpace());
    b->kind_ = BaseKind::graph;
    b->graph_vertices_ = vertices;
    b->graph_edges_ = edges;

    std::vector<int> first_edge(vertices, -1);
    for (int c = 0; c < static_cast<int>(edges.size()); ++c) {
        const auto & ce = edges[c];
        if (ce.tail < 0 || ce.tail >= vertices || ce.head < 0 || ce.head >= vertices)
            throw InvalidArgument("graph edge " + std::to_string(c) + " references a missing vertex");
        if (ce.tail == ce.head && samples_per_edge < 2)
            throw InvalidArgument("a self-loop needs at least 2 samples per edge");
        for (int v : {ce.tail, ce.head})
            if (first_edge[v] < 0)
                first_edge[v] = c;
    }

    b->coords_.resize(vertices);
    for (int v = 0; v < vertices; ++v) {
        int c = first_edge[v];
        if (c < 0)
            b->coords_[v] = {-1.0 - v, 0.0};
        else
            b->coords_[v] = {static_cast<double>(c), edges[c].tail == v ? 0.0 : 1.0};
    }

    for (int c = 0; c < static_cast<int>(edges.size()); ++c) {
        int prev = edges[c].tail;
        for (int j = 1; j <= samples_per_edge; ++j) {
            int next;
            if (j == samples_per_edge)
                next = edges[c].head;
            else {
                next = static_cast<int>(b->coords_.size());
                b->coords_.push_back({static_cast<double>(c), static_cast<double>(j) / samples_per_edge});
            }
            b->edges_.push_back({prev, next});
            b->edge_cell_.push_back(c);
            b->edge_s0_.push_back(static_cast<double>(j - 1) / samples_per_edge);
            b->edge_s1_.push_back(static_cast<double>(j) / samples_per_edge);
            prev = next;
        }
    }
    b->finish();

    // spanning tree by BFS from sample 0; every co-tree edge closes one basis loop
    const int ns = b->sample_count();
    std::vector<int> parent_edge(ns, -1);
    std::vector<bool> seen(ns, false);
    std::vector<bool> tree_edge(b->edge_count(), false);
    std::deque<int> queue{0};
    seen[0] = true;
    while (! queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        for (const auto & inc : b->incidence_[s])
            if (! seen[inc.other]) {
                seen[inc.other] = true;
                parent_edge[inc.other] = inc.edge;
                tree_edge[inc.edge] = true;
                queue.push_back(inc.other);
            }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw InvalidArgument("graph is not connected");

    auto path_from_root = [&](int s) {
        Loop path;
        while (s != 0) {
            int e = parent_edge[s];
            const auto & ed = b->edges_[e];
            bool forward = ed.head == s;
            path.push_back({e, forward});
            s = forward ? ed.tail : ed.head;
        }
        std::reverse(path.begin(), path.end());
        return path;
    };

    for (int e = 0; e < b->edge_count(); ++e) {
        if (tree_edge[e])
            continue;
        Loop loop = path_from_root(b->edges_[e].tail);
        loop.push_back({e, true});
        Loop back = path_from_root(b->edges_[e].head);
        for (auto it = back.rbegin(); it != back.rend(); ++it)
            loop.push_back({it->edge, ! it->forward});
        b->loops_.push_back(std::move(loop));
    }
    return b;
}

Coordinate BaseSpace::coordinate_at(const EdgePoint & p) const
{
    const auto & ed = edges_.at(p.edge);
    if (p.t == 0.0)
        return coords_[ed.tail];
    if (p.t == 1.0)
        return coords_[ed.head];
    const auto & a = coords_[ed.tail];
    const auto & b = coords_[ed.head];
    switch (kind_) {
    case BaseKind::interval:
        return {a.u + p.t * (b.u - a.u), 0.0};
    case BaseKind::circle: {
        double d = b.u - a.u;
        if (d < 0.0)
            d += two_pi;
        return {a.u + p.t * d, 0.0};
    }
    case BaseKind::torus2:
        return {a.u + p.t * wrap_delta(b.u - a.u), a.v + p.t * wrap_delta(b.v - a.v)};
    case BaseKind::graph: {
        double s0 = edge_s0_[p.edge], s1 = edge_s1_[p.edge];
        return {static_cast<double>(edge_cell_[p.edge]), s0 + p.t * (s1 - s0)};
    }
    }
    return a;
}

std::optional<int> BaseSpace::sample_at(const EdgePoint & p) const
{
    if (p.t == 0.0)
        return edges_.at(p.edge).tail;
    if (p.t == 1.0)
        return edges_.at(p.edge).head;
    return std::nullopt;
}

EdgePoint BaseSpace::sample_location(int sample) const
{
    const auto & inc = incidence_.at(sample);
    if (inc.empty())
        throw InvalidArgument("sample " + std::to_string(sample) + " has no incident edge");
    for (const auto & i : inc)
        if (i.forward)
            return {i.edge, 0.0};
    return {inc.front().edge, 1.0};
}

EdgePoint BaseSpace::locate(const Coordinate & c) const
{
    auto snapped = [&](int e, double t) -> EdgePoint {
        if (t <= snap_eps)
            return sample_location(edges_[e].tail);
        if (t >= 1.0 - snap_eps)
            return sample_location(edges_[e].head);
        return {e, t};
    };
    const int n = sample_count();
    switch (kind_) {
    case BaseKind::interval: {
        double x = std::clamp(c.u, 0.0, 1.0);
        double pos = x * (n - 1);
        int k = std::min(static_cast<int>(std::floor(pos)), n - 2);
        return snapped(k, pos - k);
    }
    case BaseKind::circle: {
        double pos = wrap_angle(c.u) / two_pi * n;
        int k = std::min(static_cast<int>(std::floor(pos)), n - 1);
        return snapped(k, pos - k);
    }
    case BaseKind::torus2: {
        double a = wrap_angle(c.u) / two_pi * grid_n_;
        double b = wrap_angle(c.v) / two_pi * grid_m_;
        double fa = a - std::round(a), fb = b - std::round(b);
        if (std::abs(fa) <= std::abs(fb)) {
            int i = static_cast<int>(std::lround(a)) % grid_n_;
            int j = std::min(static_cast<int>(std::floor(b)), grid_m_ - 1);
            return snapped(2 * (i * grid_m_ + j) + 1, b - j);
        }
        int j = static_cast<int>(std::lround(b)) % grid_m_;
        int i = std::min(static_cast<int>(std::floor(a)), grid_n_ - 1);
        return snapped(2 * (i * grid_m_ + j), a - i);
    }
    case BaseKind::graph:
        break;
    }
    throw InvalidArgument("coordinates cannot be located on a graph base; give image locations explicitly");
}

double BaseSpace::edge_distance(const EdgePoint & a, const EdgePoint & b) const
{
    const int n = sample_count();
    switch (kind_) {
    case BaseKind::interval:
        return std::abs((a.edge + a.t) - (b.edge + b.t));
    case BaseKind::circle: {
        double d = std::fmod(std::abs((a.edge + a.t) - (b.edge + b.t)), static_cast<double>(n));
        return std::min(d, n - d);
    }
    case BaseKind::torus2: {
        auto pos = [&](const EdgePoint & p) {
            int s = edges_[p.edge].tail;
            double i = s / grid_m_, j = s % grid_m_;
            if (p.edge % 2 == 0)
                i += p.t;
            else
                j += p.t;
            return std::pair{i, j};
        };
        auto [ai, aj] = pos(a);
        auto [bi, bj] = pos(b);
        double di = std::fmod(std::abs(ai - bi), static_cast<double>(grid_n_));
        double dj = std::fmod(std::abs(aj - bj), static_cast<double>(grid_m_));
        return std::min(di, grid_n_ - di) + std::min(dj, grid_m_ - dj);
    }
    case BaseKind::graph:
        break;
    }

    if (a.edge == b.edge)
        return std::abs(a.t - b.t);
    std::vector<int> dist(n, -1);
    std::deque<int> queue;
    const auto & ea = edges_[a.edge];
    const auto & eb = edges_[b.edge];
    // multi-source BFS would lose the fractional offsets, so run it from each endpoint of a
    double best = 1e300;
    for (auto [src, cost] : {std::pair{ea.tail, a.t}, std::pair{ea.head, 1.0 - a.t}}) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[src] = 0;
        queue.assign({src});
        while (! queue.empty()) {
            int s = queue.front();
            queue.pop_front();
            for (const auto & inc : incidence_[s])
                if (dist[inc.other] < 0) {
                    dist[inc.other] = dist[s] + 1;
                    queue.push_back(inc.other);
                }
        }
        best = std::min(best, cost + dist[eb.tail] + b.t);
        best = std::min(best, cost + dist[eb.head] + (1.0 - b.t));
    }
    return best;
}

std::vector<int> BaseSpace::walk_samples(const Loop & loop) const
{
    std::vector<int> out;
    if (loop.empty())
        return out;
    const auto & first = edges_.at(loop.front().edge);
    int cur = loop.front().forward ? first.tail : first.head;
    out.push_back(cur);
    for (const auto & step : loop) {
        const auto & ed = edges_.at(step.edge);
        int from = step.forward ? ed.tail : ed.head;
        if (from != cur)
            throw InvalidArgument("loop steps do not chain at edge " + std::to_string(step.edge));
        cur = step.forward ? ed.head : ed.tail;
        out.push_back(cur);
    }
    return out;
}

bool BaseSpace::is_closed_walk(const Loop & loop) const
{
    if (loop.empty())
        return false;
    try {
        auto s = walk_samples(loop);
        return s.front() == s.back();
    }
    catch (const InvalidArgument &) {
        return false;
    }
}

Loop simple_cycle(const Loop & loop)
{
    size_t lo = 0, hi = loop.size();
    while (hi - lo >= 2 && loop[lo].edge == loop[hi - 1].edge && loop[lo].forward != loop[hi - 1].forward) {
        ++lo;
        --hi;
    }
    return Loop(loop.begin() + lo, loop.begin() + hi);
}

SelfMap::SelfMap(BasePtr base, std::vector<EdgePoint> images, ExactMap exact) :
    base_(std::move(base)), images_(std::move(images)), exact_(std::move(exact))
{
    if (! base_)
        throw InvalidArgument("self-map needs a base");
    if (static_cast<int>(images_.size()) != base_->sample_count())
        throw InvalidArgument("self-map needs one image per sample");
    for (const auto & p : images_)
        if (p.edge < 0 || p.edge >= base_->edge_count() || ! (p.t >= 0.0 && p.t <= 1.0))
            throw InvalidArgument("self-map image is not a point of the base");
}

Coordinate SelfMap::exact_image(const Coordinate & c) const
{
    if (! exact_)
        throw InvalidArgument("self-map has no exact form");
    return exact_(c);
}

double SelfMap::max_edge_stretch() const
{
    double worst = 0.0;
    for (const auto & e : base_->edges())
        worst = std::max(worst, base_->edge_distance(images_[e.tail], images_[e.head]));
    return worst;
}

bool SelfMap::is_identity() const
{
    for (int s = 0; s < base_->sample_count(); ++s) {
        auto at = base_->sample_at(images_[s]);
        if (! at || *at != s)
            return false;
    }
    return true;
}

namespace {

void check_continuity(const SelfMap & map, double bound)
{
    const auto & base = *map.base();
    for (int e = 0; e < base.edge_count(); ++e) {
        const auto & ed = base.edge(e);
        double d = base.edge_distance(map.image(ed.tail), map.image(ed.head));
        if (d > bound + 1e-9)
            throw ContinuityError("self-map moves the ends of edge " + std::to_string(e) + " " + std::to_string(d)
                + " edges apart (bound " + std::to_string(bound) + ")");
    }
}

}

SelfMap selfmap_from_table(const BasePtr & base, std::vector<EdgePoint> images, double continuity_bound)
{
    SelfMap map(base, std::move(images));
    check_continuity(map, continuity_bound);
    return map;
}

SelfMap identity_map(const BasePtr & base)
{
    std::vector<EdgePoint> images(base->sample_count());
    for (int s = 0; s < base->sample_count(); ++s)
        images[s] = base->sample_location(s);
    return SelfMap(base, std::move(images), [](const Coordinate & c) { return c; });
}

SelfMap compose(const SelfMap & outer, const SelfMap & inner, double continuity_bound)
{
    const auto & base = outer.base();
    if (inner.base() != base)
        throw InvalidArgument("composed maps must share a base");
    std::vector<EdgePoint> images(base->sample_count());
    for (int s = 0; s < base->sample_count(); ++s) {
        const auto & q = inner.image(s);
        if (auto at = base->sample_at(q))
            images[s] = outer.image(*at);
        else if (outer.has_exact())
            images[s] = base->locate(outer.exact_image(base->coordinate_at(q)));
        else {
            const auto & ed = base->edge(q.edge);
            images[s] = outer.image(q.t < 0.5 ? ed.tail : ed.head);
        }
    }
    SelfMap::ExactMap exact;
    if (outer.has_exact() && inner.has_exact())
        exact = [outer, inner](const Coordinate & c) { return outer.exact_image(inner.exact_image(c)); };
    SelfMap map(base, std::move(images), std::move(exact));
    check_continuity(map, continuity_bound);
    return map;
}

}
