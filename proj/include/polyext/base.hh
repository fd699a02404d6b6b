#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace polyext {

using cplx = std::complex<double>;

enum class BaseKind { interval, circle, graph, torus2 };

std::string to_string(BaseKind kind);

/// Coordinate of a point of a base space.
///   interval: u = x in [0,1]
///   circle:   u = theta in [0, 2pi)
///   torus2:   (u, v) = (theta1, theta2)
///   graph:    u = combinatorial edge index, v = parameter along it
///             (a vertex is reported on its lowest-numbered incident edge)
struct Coordinate {
    double u = 0.0;
    double v = 0.0;
};

struct Edge {
    int tail;
    int head;
};

struct LoopStep {
    int edge;
    bool forward;
};

using Loop = std::vector<LoopStep>;

/// A point on the 1-skeleton: an edge and a parameter t in [0,1] measured from its tail.
struct EdgePoint {
    int edge = 0;
    double t = 0.0;
};

struct Incidence {
    int edge;
    bool forward; ///< true when the sample is the tail of `edge`
    int other;
};

class BaseSpace;
using BasePtr = std::shared_ptr<const BaseSpace>;

/// A discretized compact space: samples joined by oriented edges, plus a loop basis.
/// Immutable once built; share it through BasePtr.
class BaseSpace {
public:
    BaseKind kind() const noexcept { return kind_; }
    int sample_count() const noexcept { return static_cast<int>(coords_.size()); }
    int edge_count() const noexcept { return static_cast<int>(edges_.size()); }

    const std::vector<Coordinate> & coordinates() const noexcept { return coords_; }
    const Coordinate & coordinate(int sample) const { return coords_.at(sample); }
    const std::vector<Edge> & edges() const noexcept { return edges_; }
    const Edge & edge(int e) const { return edges_.at(e); }
    const std::vector<Loop> & loop_basis() const noexcept { return loops_; }
    const std::vector<Incidence> & incident(int sample) const { return incidence_.at(sample); }

    /// torus2 grid dimensions (n along theta1, m along theta2); zero otherwise.
    int grid_n() const noexcept { return grid_n_; }
    int grid_m() const noexcept { return grid_m_; }

    /// graph bases: the combinatorial edges and vertex count used to build the subdivision.
    int graph_vertex_count() const noexcept { return graph_vertices_; }
    const std::vector<Edge> & graph_edges() const noexcept { return graph_edges_; }

    Coordinate coordinate_at(const EdgePoint & p) const;
    std::optional<int> sample_at(const EdgePoint & p) const;
    EdgePoint sample_location(int sample) const;

    /// Nearest point of the 1-skeleton to a coordinate. Not available on graph bases.
    EdgePoint locate(const Coordinate & c) const;

    /// Length, in edges, of the shortest route between two skeleton points.
    double edge_distance(const EdgePoint & a, const EdgePoint & b) const;

    /// Samples visited by a walk, first sample repeated at the end when closed.
    std::vector<int> walk_samples(const Loop & loop) const;
    bool is_closed_walk(const Loop & loop) const;

    friend BasePtr make_interval(int n);
    friend BasePtr make_circle(int n);
    friend BasePtr make_graph(int vertices, const std::vector<Edge> & edges, int samples_per_edge);
    friend BasePtr make_torus2(int n, int m);

private:
    BaseSpace() = default;
    void finish();

    BaseKind kind_ = BaseKind::interval;
    std::vector<Coordinate> coords_;
    std::vector<Edge> edges_;
    std::vector<Loop> loops_;
    std::vector<std::vector<Incidence>> incidence_;

    int grid_n_ = 0;
    int grid_m_ = 0;

    int graph_vertices_ = 0;
    std::vector<Edge> graph_edges_;
    // per sample edge: combinatorial edge and parameter range along it
    std::vector<int> edge_cell_;
    std::vector<double> edge_s0_;
    std::vector<double> edge_s1_;
};

BasePtr make_interval(int n);
BasePtr make_circle(int n);
BasePtr make_graph(int vertices, const std::vector<Edge> & edges, int samples_per_edge);
BasePtr make_torus2(int n, int m);

/// The shortest closed sub-walk of a loop obtained by peeling off back-and-forth stems.
Loop simple_cycle(const Loop & loop);

class Expr;

/// A continuous self-map of a base, stored as the image location of every sample.
/// Images live on the skeleton, so they need not coincide with samples.
class SelfMap {
public:
    using ExactMap = std::function<Coordinate(const Coordinate &)>;

    SelfMap(BasePtr base, std::vector<EdgePoint> images, ExactMap exact = {});

    const BasePtr & base() const noexcept { return base_; }
    const std::vector<EdgePoint> & images() const noexcept { return images_; }
    const EdgePoint & image(int sample) const { return images_.at(sample); }
    bool has_exact() const noexcept { return static_cast<bool>(exact_); }

    /// Exact image coordinate of an arbitrary coordinate; requires has_exact().
    Coordinate exact_image(const Coordinate & c) const;

    /// Largest edge distance between images of edge-adjacent samples.
    double max_edge_stretch() const;

    bool is_identity() const;

private:
    BasePtr base_;
    std::vector<EdgePoint> images_;
    ExactMap exact_;
};

/// Samples a map given by image-coordinate expressions (one for interval/circle, two for torus2).
/// Throws ContinuityError when adjacent samples land more than `continuity_bound` edges apart.
SelfMap sample_selfmap(const BasePtr & base, const std::vector<Expr> & image_exprs, double continuity_bound = 2.0);

/// Builds a map from a table of image locations.
SelfMap selfmap_from_table(const BasePtr & base, std::vector<EdgePoint> images, double continuity_bound = 2.0);

SelfMap identity_map(const BasePtr & base);

/// (outer o inner), evaluated at the samples.
SelfMap compose(const SelfMap & outer, const SelfMap & inner, double continuity_bound = 2.0);

}
