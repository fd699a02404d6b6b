#pragma once

#include <polyext/extend.hh>

#include <cstdint>
#include <memory>
#include <vector>

namespace polyext {

/// Root existence: a continuous section of the root bundle, found as a lift of the trivial
/// one-sheet bundle. On yes the witness holds r(x) in values[s][0].
Verdict has_root(const MonicPolynomial & p, const DecideOptions & opts = {});
Verdict has_root(const BundlePtr & bundle, const DecideOptions & opts = {});

struct CycleWitness {
    Loop cycle;
    int winding_edge = -1; ///< combinatorial edge carrying the winding of g
    std::shared_ptr<const MonicPolynomial> polynomial; ///< t^2 - g, |g| = 1
    Verdict root; ///< expected: no
};

struct RootTrial {
    std::uint64_t seed = 0;
    Answer root = Answer::inconclusive;
    double max_residual = 0.0; ///< max_s |p(x_s, r(x_s))|
};

struct GraphReport {
    bool has_cycle = false;
    Loop witness_cycle;
    std::vector<Loop> independent_cycles;
    bool algebraically_closed = true;
    std::vector<CycleWitness> witnesses;
    std::vector<RootTrial> trials;
    /// The 4-versus-5 fiber count instance carried over to a circle standing in for the cycle; expected Cole no.
    std::optional<Verdict> transplanted;
};

/// Cycle detection on a graph base: one simple cycle per co-tree edge.
GraphReport contains_circle(const BasePtr & graph);

/// t^2 - g where g winds once along `winding_edge` (g = e^{2 pi i v} there) and is 1 elsewhere.
MonicPolynomial winding_quadratic(const BasePtr & graph, int winding_edge);

/// Random admissible quadratic with coefficients linear along edges plus a sine bump, from a seed.
MonicPolynomial random_graph_quadratic(const BasePtr & graph, std::uint64_t seed);

/// Seed for trial k of a report seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

/// With a cycle: a no-root witness per independent cycle plus the transplanted 4-versus-5 fiber count instance
/// (when `transplant_samples` > 0). Without: `trials` random quadratics, each required to have a root.
GraphReport closedness_report(const BasePtr & graph, int trials, std::uint64_t seed, int transplant_samples = 1000);

}
