#include <polyext/catalog.hh>
#include <polyext/closedness.hh>
#include <polyext/error.hh>

#include <cmath>
#include <future>
#include <numbers>
#include <random>

namespace polyext {

Verdict has_root(const BundlePtr & bundle, const DecideOptions & opts)
{
    auto v = decide_lift(trivial_bundle(bundle->base), bundle, opts);
    v.diagnostics["analysis"] = "has_root";
    return v;
}

Verdict has_root(const MonicPolynomial & p, const DecideOptions & opts)
{
    auto adm = is_admissible(p);
    if (! adm.admissible)
        throw InadmissibleError("polynomial is not admissible");
    return has_root(std::make_shared<const RootBundle>(build_bundle(p, opts.bundle)), opts);
}

GraphReport contains_circle(const BasePtr & graph)
{
    if (graph->kind() != BaseKind::graph)
        throw InvalidArgument("cycle detection needs a graph base");
    GraphReport r;
    for (const auto & loop : graph->loop_basis())
        r.independent_cycles.push_back(simple_cycle(loop));
    r.has_cycle = ! r.independent_cycles.empty();
    if (r.has_cycle)
        r.witness_cycle = r.independent_cycles.front();
    r.algebraically_closed = ! r.has_cycle;
    return r;
}

MonicPolynomial winding_quadratic(const BasePtr & graph, int winding_edge)
{
    const auto & b = *graph;
    if (b.kind() != BaseKind::graph)
        throw InvalidArgument("winding quadratic needs a graph base");
    const int nv = b.graph_vertex_count();
    int interior = 0;
    std::vector<cplx> c0(b.sample_count(), cplx(-1.0)), c1(b.sample_count(), cplx(0.0));
    for (int s = nv; s < b.sample_count(); ++s) {
        const auto & c = b.coordinate(s);
        if (static_cast<int>(c.u) != winding_edge)
            continue;
        ++interior;
        c0[s] = -std::polar(1.0, 2.0 * std::numbers::pi * c.v);
    }
    if (interior < 3)
        throw InvalidArgument("the winding edge needs at least 4 samples per edge");
    return polynomial_from_samples({SampledFunction(graph, c0), SampledFunction(graph, c1)});
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k)
{
    // splitmix64 step
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

MonicPolynomial random_graph_quadratic(const BasePtr & graph, std::uint64_t seed)
{
    const auto & b = *graph;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    auto rc = [&] { return cplx(g(rng), g(rng)); };
    const int nv = b.graph_vertex_count();
    const int ne = static_cast<int>(b.graph_edges().size());
    std::vector<SampledFunction> coeffs;
    for (int k = 0; k < 2; ++k) {
        std::vector<cplx> at_vertex(nv), bump(ne);
        for (auto & v : at_vertex)
            v = rc();
        for (auto & v : bump)
            v = 0.5 * rc();
        std::vector<cplx> vals(b.sample_count());
        for (int s = 0; s < nv; ++s)
            vals[s] = at_vertex[s];
        for (int s = nv; s < b.sample_count(); ++s) {
            const auto & c = b.coordinate(s);
            int e = static_cast<int>(c.u);
            const auto & ed = b.graph_edges()[e];
            vals[s] = (1.0 - c.v) * at_vertex[ed.tail] + c.v * at_vertex[ed.head] + bump[e] * std::sin(std::numbers::pi * c.v);
        }
        coeffs.emplace_back(graph, std::move(vals));
    }
    return polynomial_from_samples(std::move(coeffs));
}

namespace {

int winding_edge_of(const BaseSpace & b, const Loop & cycle)
{
    // any sample edge of the cycle lies inside one combinatorial edge
    return static_cast<int>(b.coordinate_at(EdgePoint{cycle.front().edge, 0.5}).u);
}

RootTrial run_trial(const BasePtr & graph, std::uint64_t seed)
{
    RootTrial t;
    t.seed = seed;
    auto p = random_graph_quadratic(graph, seed);
    auto v = has_root(p);
    t.root = v.answer;
    if (v.witness)
        for (int s = 0; s < graph->sample_count(); ++s)
            t.max_residual
                = std::max(t.max_residual, std::abs(eval_monic(p.coefficients_at_sample(s), v.witness->values[s][0])));
    return t;
}

}

GraphReport closedness_report(const BasePtr & graph, int trials, std::uint64_t seed, int transplant_samples)
{
    GraphReport r = contains_circle(graph);
    if (r.has_cycle) {
        for (const auto & cyc : r.independent_cycles) {
            CycleWitness w;
            w.cycle = cyc;
            w.winding_edge = winding_edge_of(*graph, cyc);
            w.polynomial = std::make_shared<const MonicPolynomial>(winding_quadratic(graph, w.winding_edge));
            w.root = has_root(*w.polynomial);
            r.witnesses.push_back(std::move(w));
        }
        if (transplant_samples > 0) {
            auto circle = make_circle(transplant_samples);
            auto p = catalog::example2_polynomial(circle);
            auto phi = sample_selfmap(circle, {parse(catalog::example3_map)});
            r.transplanted = cole_extendable(p, phi);
        }
        return r;
    }
    std::vector<std::future<RootTrial>> jobs;
    for (int k = 0; k < trials; ++k)
        jobs.push_back(std::async(std::launch::async, run_trial, graph, derive_seed(seed, k)));
    for (auto & j : jobs)
        r.trials.push_back(j.get());
    return r;
}

}
