#pragma once

#include <polyext/bundle.hh>
#include <polyext/monodromy.hh>

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace polyext {

using BundlePtr = std::shared_ptr<const RootBundle>;

enum class Answer { yes, no, inconclusive };
std::string to_string(Answer a);

/// A fiber-preserving map from a source bundle into `target`: bundle point (s, i) of the
/// source goes to sheet[s][i] of the target, whose value is values[s][i]. Identified target
/// sheets are represented by their lowest sheet index.
struct Lift {
    BundlePtr target;
    std::vector<std::vector<int>> sheet;
    std::vector<std::vector<cplx>> values;
};

struct CspStats {
    long nodes = 0;
    long backtracks = 0;
    long solutions = 0;
    bool hit_limit = false;
    std::vector<int> wipeout_samples; ///< distinct samples where a domain emptied, in order of discovery
};

/// Lift existence as a constraint problem: every source point (sample, cluster) picks a target
/// cluster at the same sample, and source adjacency along each base edge must map to target adjacency.
class LiftProblem {
public:
    using Mask = PointGraph::Mask;
    /// Target cluster per source node; -1 for nodes outside the active part of the base.
    using Assignment = std::vector<int>;

    /// `active_edges` (empty = all) limits the constraints, and the variables, to those edges.
    LiftProblem(BundlePtr source, BundlePtr target, std::vector<bool> active_edges = {});

    const RootBundle & source() const noexcept { return *source_; }
    const RootBundle & target() const noexcept { return *target_; }
    const PointGraph & source_graph() const noexcept { return ga_; }
    const PointGraph & target_graph() const noexcept { return gb_; }

    /// Limits the image of a source node to the given target clusters.
    void restrict_node(int node, Mask allowed);

    /// Visits solutions in search order until `visit` returns false or `max_count` are found.
    CspStats solve(const std::function<bool(const Assignment &)> & visit, long max_count) const;

    Lift make_lift(const Assignment & a) const;

private:
    struct Arc {
        int to;
        int edge;
        bool forward;
    };

    bool propagate(std::vector<Mask> & dom, std::vector<int> & queue, CspStats & st) const;
    bool search(std::vector<Mask> & dom, const std::function<bool(const Assignment &)> & visit, long max_count,
        CspStats & st) const;

    BundlePtr source_;
    BundlePtr target_;
    PointGraph ga_;
    PointGraph gb_;
    std::vector<bool> active_node_;
    std::vector<int> arc_offset_;
    std::vector<Arc> arcs_;
    std::vector<Mask> initial_;
};

struct ValidationReport {
    bool ok = true;
    std::string failure;
    double max_residual = 0.0;
    double max_jump_excess = 0.0;
};

/// Value-level check of a lift: every value is a root of the target polynomial, values move no
/// further along an edge than the target roots do, and coincident source points share a value.
ValidationReport validate_lift(const RootBundle & source, const Lift & f);

struct DecideOptions {
    BundleOptions bundle;
    long max_count = 10000;
};

struct Verdict {
    Answer answer = Answer::inconclusive;
    std::string certificate_kind = "none";
    nlohmann::json certificate_data = nlohmann::json::object();
    std::optional<Lift> witness;
    /// Arens-Hoffman verdicts: the fitted coefficient functions q_0..q_{n-1} of the witness.
    std::optional<std::vector<SampledFunction>> fit;
    nlohmann::json tolerances = nlohmann::json::object();
    int resolution = 0;
    long solution_count = -1;
    nlohmann::json diagnostics = nlohmann::json::object();
};

/// Source and target bundles of an extension problem; throws InadmissibleError for inadmissible p.
struct ExtensionProblem {
    BundlePtr source;
    BundlePtr target;
};
ExtensionProblem make_extension_problem(const MonicPolynomial & p, const SelfMap & phi, const BundleOptions & opts = {});

/// Cole decision between two bundles over one base.
Verdict decide_lift(const BundlePtr & source, const BundlePtr & target, const DecideOptions & opts = {});
Verdict cole_extendable(const ExtensionProblem & prob, const DecideOptions & opts = {});
Verdict cole_extendable(const MonicPolynomial & p, const SelfMap & phi, const DecideOptions & opts = {});

/// Torus bases: decide on the generator-loop skeleton first, then extend a skeleton lift to the grid.
Verdict decide_lift_on_skeleton(const BundlePtr & source, const BundlePtr & target, const DecideOptions & opts = {});

std::vector<Lift> enumerate_lifts(const BundlePtr & source, const BundlePtr & target, long max_count = 10000,
    CspStats * stats = nullptr);
std::vector<Lift> enumerate_lifts(const MonicPolynomial & p, const SelfMap & phi, long max_count = 10000);

/// Independent re-check of a "no" certificate against the bundles it was issued for.
bool recheck_certificate(const Verdict & v, const RootBundle & source, const RootBundle & target);

/// Number of distinct values in a fiber, grouping values closer than tol.
int distinct_count(const std::vector<cplx> & fiber, double tol);

enum class Finiteness { finite, divergent, inconclusive };
std::string to_string(Finiteness f);

struct Lemma4Side {
    Finiteness verdict = Finiteness::inconclusive;
    std::vector<cplx> quotients; ///< one per dyadic level
    double last_gap = 0.0;
};

struct Lemma4Result {
    Finiteness verdict = Finiteness::inconclusive;
    int branch_sample = -1;
    Coordinate location;         ///< where the two sheets coalesce
    Lemma4Side before, after;    ///< approaching against and along the edge orientation
};

/// Divided quotient (f(y,l1) - f(y,l2)) / (l1 - l2) along dyadic points approaching the point
/// where two sheets coalesce near branch_sample. Throws InvalidArgument unless exactly two
/// sheets coalesce there and the base is an interval or circle.
Lemma4Result lemma4_test(const RootBundle & source, const Lift & f, int branch_sample);

/// Samples of an interval or circle bundle where exactly two sheets are identified.
std::vector<int> two_sheet_branch_samples(const RootBundle & bundle);

struct AhFit {
    bool accepted = false;
    std::vector<SampledFunction> q;
    double bound = 0.0;
    double max_jump = 0.0;
    // refusal details
    std::string refusal_kind;
    int refusal_sample = -1;
    int refusal_edge = -1;
    double refusal_jump = 0.0;
    // largest jump relative to its bound, anywhere
    int worst_sample = -1;
    double worst_ratio = 0.0;
};

/// Solves the Vandermonde system for q_0..q_{n-1} at every unflagged sample and checks the
/// fitted coefficients for discrete continuity. Flagged samples take the value of the nearest
/// unflagged sample.
AhFit ah_fit(const RootBundle & source, const Lift & f);

/// Coefficients q with q(l_i) = v_i (Bjorck-Pereyra); the nodes must be distinct.
std::vector<cplx> interpolate_coefficients(const std::vector<cplx> & nodes, const std::vector<cplx> & values);

Verdict ah_extendable(const ExtensionProblem & prob, const DecideOptions & opts = {});
Verdict ah_extendable(const MonicPolynomial & p, const SelfMap & phi, const DecideOptions & opts = {});

struct ConsistencyReport {
    bool consistent = true;
    Answer first = Answer::inconclusive;
    Answer second = Answer::inconclusive;
    std::string note;
};

/// AH yes with Cole no would contradict the inclusion of the Arens-Hoffman extension in the Cole one.
/// first = AH, second = Cole.
ConsistencyReport corollary3_check(const ExtensionProblem & prob, const DecideOptions & opts = {});
/// A root of the pulled-back polynomial forces AH yes. first = has_root(p^T), second = AH.
ConsistencyReport root_implies_extendable_check(const ExtensionProblem & prob, const DecideOptions & opts = {});

/// Trivial one-sheet bundle (fiber {0}) over a base; the source of section problems.
BundlePtr trivial_bundle(const BasePtr & base);

}
