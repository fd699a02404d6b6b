#pragma once

#include <polyext/bundle.hh>

#include <cstdint>
#include <vector>

namespace polyext {

/// Sheet permutation picked up by following a closed walk: sheet i at the start
/// ends on sheet result[i] of the same fiber.
Perm loop_monodromy(const RootBundle & bundle, const Loop & loop);

/// Sorted cycle lengths.
std::vector<int> cycle_type(const Perm & p);

struct Strip {
    std::vector<int> sheets; ///< sheets of the fiber over sample 0, in the order the strip visits them
    int winding;
};

struct StripDecomposition {
    std::vector<Strip> strips;
    std::vector<int> windings() const; ///< sorted
};

/// Cycle decomposition of the monodromy around a circle base.
StripDecomposition strips(const RootBundle & bundle);

/// Bundle points modulo coincidence at branch samples: one node per (sample, cluster),
/// joined along every base edge by the sheet matching.
class PointGraph {
public:
    using Mask = std::uint32_t;

    explicit PointGraph(const RootBundle & bundle);

    int node_count() const noexcept { return static_cast<int>(sample_of_.size()); }
    int node(int sample, int cluster) const { return offset_[sample] + cluster; }
    int node_of_sheet(int sample, int sheet) const { return offset_[sample] + cluster_of_[sample][sheet]; }
    int sample_of(int node) const { return sample_of_[node]; }
    int cluster_of(int node) const { return node - offset_[sample_of_[node]]; }
    int clusters_at(int sample) const { return offset_[sample + 1] - offset_[sample]; }
    int first_node(int sample) const { return offset_[sample]; }

    /// clusters at the head of edge e joined to cluster c at its tail, and the reverse
    Mask forward(int edge, int tail_cluster) const { return fwd_[edge][tail_cluster]; }
    Mask backward(int edge, int head_cluster) const { return bwd_[edge][head_cluster]; }

private:
    std::vector<int> offset_;
    std::vector<int> sample_of_;
    std::vector<std::vector<int>> cluster_of_;
    std::vector<std::vector<Mask>> fwd_;
    std::vector<std::vector<Mask>> bwd_;
};

struct Components {
    int count = 0;
    /// label[sample][sheet]
    std::vector<std::vector<int>> label;
};

Components components(const RootBundle & bundle);

}
