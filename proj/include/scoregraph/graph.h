/**
 * @file graph.h
 * @brief Heterogeneous attributed score graph and its builders.
 *
 * Notes are nodes identified by their index in (onset, pitch, id) order.
 * Four note relations are derived from exact integer time comparisons:
 *
 *   (u, onset, v)   on(u) == on(v)
 *   (u, during, v)  on(v) <  on(u) <= on(v) + dur(v)
 *   (u, follow, v)  on(u) + dur(u) == on(v)
 *   (u, silence, v) on(u) + dur(u) < on(v) and no onset lies strictly between
 *
 * Optionally, inverse relations and a metrical hierarchy of beat and measure
 * nodes are added. Edges point from message source to destination.
 */

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scoregraph/edge_type.h"
#include "scoregraph/matrix.h"
#include "scoregraph/score.h"

namespace scoregraph {

using NodeId = std::int64_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  auto operator<=>(const Edge&) const = default;
};

using EdgeList = std::vector<Edge>;
using EdgeMap = std::map<EdgeType, EdgeList>;

/// Half-open time interval [start, end) in divisions.
struct TimeSpan {
  Tick start = 0;
  Tick end = 0;
  bool operator==(const TimeSpan&) const = default;
};

struct MetricalGrid {
  std::vector<TimeSpan> beats;
  std::vector<TimeSpan> measures;
};

struct GraphOptions {
  bool inverse_edges = false;
  bool metrical = false;
  bool operator==(const GraphOptions&) const = default;
};

struct BuildOptions {
  bool inverse_edges = false;
  bool metrical = false;
  /// Replaces the default note features; must have one row per note.
  std::optional<Matrix> note_features;
};

/// Compressed in-adjacency for one edge type: the sources of every edge into
/// `dst` are sources[offsets[dst] .. offsets[dst + 1]), ascending.
struct InAdjacency {
  std::vector<std::int64_t> offsets;
  std::vector<NodeId> sources;

  std::span<const NodeId> in_neighbors(NodeId dst) const noexcept {
    const auto b = static_cast<std::size_t>(offsets[static_cast<std::size_t>(dst)]);
    const auto e = static_cast<std::size_t>(offsets[static_cast<std::size_t>(dst) + 1]);
    return {sources.data() + b, e - b};
  }
  bool operator==(const InAdjacency&) const = default;
};

InAdjacency build_in_adjacency(const EdgeList& edges, std::int64_t dst_count);

struct ScoreGraph {
  std::int64_t note_count = 0;
  std::int64_t beat_count = 0;
  std::int64_t measure_count = 0;
  EdgeMap edges;
  Matrix note_features;
  Matrix beat_features;
  Matrix measure_features;
  std::vector<Tick> note_onsets;
  std::vector<int> note_pitches;
  std::vector<TimeSpan> beat_spans;
  std::vector<TimeSpan> measure_spans;
  int divisions_per_quarter = 1;
  GraphOptions options;
  std::string source_name;

  /// Derived from `edges`; refreshed by rebuild_index().
  std::map<EdgeType, InAdjacency> in_index;

  std::int64_t node_count(NodeType type) const noexcept;
  std::size_t feature_dim() const noexcept { return note_features.cols(); }
  const EdgeList& edges_of(EdgeType type) const noexcept;
  bool has_edge_type(EdgeType type) const noexcept { return edges.count(type) != 0; }
  std::size_t edge_count() const noexcept;

  /// Throws InternalError if the type is absent.
  const InAdjacency& in_adjacency(EdgeType type) const;
  void rebuild_index();

  bool operator==(const ScoreGraph&) const = default;
};

/// Literal O(n^2) evaluation of the four note relations over all ordered pairs.
EdgeMap build_note_edges_reference(const Score& score);

/// Same edge sets as build_note_edges_reference, computed from onset-group and
/// end-time lookups in O(n log n + |E|).
EdgeMap build_note_edges(const Score& score);

/// Adds during_rev/follow_rev/silence_rev for each during/follow/silence edge.
EdgeMap add_inverse_edges(EdgeMap edges);

/// Measures and beats tiling the score from division 0. Throws
/// UnsupportedMeterError when a beat is not a whole number of divisions.
MetricalGrid build_metrical_grid(const Score& score);

ScoreGraph attach_metrical_nodes(ScoreGraph graph, const MetricalGrid& grid);

inline constexpr std::size_t kNoteFeatureDim = 23;

/// 12 pitch-class one-hot, 10 octave one-hot, 1 clamped duration feature.
Matrix compute_note_features(const Score& score);

/// Beat and measure features become the mean of their connected notes'
/// features; empty spans get the zero vector.
ScoreGraph aggregate_metrical_features(ScoreGraph graph);

/// Requires a sorted, valid score (throws ValidationError otherwise).
ScoreGraph build_score_graph(const Score& score, const BuildOptions& options = {});

}  // namespace scoregraph
