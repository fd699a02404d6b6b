#include <polyext/error.hh>
#include <polyext/monodromy.hh>

#include <algorithm>
#include <numeric>

namespace polyext {

Perm loop_monodromy(const RootBundle & bundle, const Loop & loop)
{
    const auto & base = *bundle.base;
    if (! base.is_closed_walk(loop))
        throw InvalidArgument("monodromy needs a closed walk");
    Perm total(bundle.degree);
    std::iota(total.begin(), total.end(), 0);
    for (const auto & st : loop) {
        const Perm & p = bundle.edge_perms[st.edge];
        total = compose(st.forward ? p : inverse(p), total);
    }
    return total;
}

std::vector<int> cycle_type(const Perm & p)
{
    std::vector<int> out;
    std::vector<bool> seen(p.size(), false);
    for (size_t i = 0; i < p.size(); ++i) {
        if (seen[i])
            continue;
        int len = 0;
        for (size_t j = i; ! seen[j]; j = p[j]) {
            seen[j] = true;
            ++len;
        }
        out.push_back(len);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> StripDecomposition::windings() const
{
    std::vector<int> w;
    for (const auto & s : strips)
        w.push_back(s.winding);
    std::sort(w.begin(), w.end());
    return w;
}

StripDecomposition strips(const RootBundle & bundle)
{
    if (bundle.base->kind() != BaseKind::circle)
        throw InvalidArgument("strips are defined over circle bases only");
    Perm m = loop_monodromy(bundle, bundle.base->loop_basis().front());
    StripDecomposition out;
    std::vector<bool> seen(m.size(), false);
    for (size_t i = 0; i < m.size(); ++i) {
        if (seen[i])
            continue;
        Strip s;
        for (size_t j = i; ! seen[j]; j = m[j]) {
            seen[j] = true;
            s.sheets.push_back(static_cast<int>(j));
        }
        s.winding = static_cast<int>(s.sheets.size());
        out.strips.push_back(std::move(s));
    }
    return out;
}

PointGraph::PointGraph(const RootBundle & bundle)
{
    if (bundle.degree > 32)
        throw InvalidArgument("point graph supports at most 32 sheets");
    const auto & base = *bundle.base;
    const int ns = bundle.sample_count();
    offset_.resize(ns + 1);
    offset_[0] = 0;
    for (int s = 0; s < ns; ++s)
        offset_[s + 1] = offset_[s] + bundle.cluster_count[s];
    sample_of_.resize(offset_[ns]);
    for (int s = 0; s < ns; ++s)
        for (int k = offset_[s]; k < offset_[s + 1]; ++k)
            sample_of_[k] = s;
    cluster_of_ = bundle.cluster_of;

    fwd_.resize(base.edge_count());
    bwd_.resize(base.edge_count());
    for (int e = 0; e < base.edge_count(); ++e) {
        const auto & ed = base.edge(e);
        fwd_[e].assign(bundle.cluster_count[ed.tail], 0);
        bwd_[e].assign(bundle.cluster_count[ed.head], 0);
        for (int i = 0; i < bundle.degree; ++i) {
            int a = cluster_of_[ed.tail][i];
            int b = cluster_of_[ed.head][bundle.edge_perms[e][i]];
            fwd_[e][a] |= Mask(1) << b;
            bwd_[e][b] |= Mask(1) << a;
        }
    }
}

Components components(const RootBundle & bundle)
{
    PointGraph g(bundle);
    const auto & base = *bundle.base;
    std::vector<int> parent(g.node_count());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int e = 0; e < base.edge_count(); ++e) {
        const auto & ed = base.edge(e);
        for (int c = 0; c < g.clusters_at(ed.tail); ++c)
            for (int d = 0; d < g.clusters_at(ed.head); ++d)
                if (g.forward(e, c) >> d & 1) {
                    int a = find(g.node(ed.tail, c)), b = find(g.node(ed.head, d));
                    if (a != b)
                        parent[std::max(a, b)] = std::min(a, b);
                }
    }
    Components out;
    std::vector<int> id(g.node_count(), -1);
    out.label.assign(bundle.sample_count(), std::vector<int>(bundle.degree));
    for (int s = 0; s < bundle.sample_count(); ++s)
        for (int i = 0; i < bundle.degree; ++i) {
            int r = find(g.node_of_sheet(s, i));
            if (id[r] < 0)
                id[r] = out.count++;
            out.label[s][i] = id[r];
        }
    return out;
}

}
