/**
 * @file graph.cpp
 * @brief ScoreGraph accessors, default note features, and the build pipeline.
 */

#include "scoregraph/graph.h"

#include <algorithm>

#include "scoregraph/error.h"

namespace scoregraph {

InAdjacency build_in_adjacency(const EdgeList& edges, std::int64_t dst_count) {
  InAdjacency adj;
  adj.offsets.assign(static_cast<std::size_t>(dst_count) + 1, 0);
  for (const Edge& e : edges) ++adj.offsets[static_cast<std::size_t>(e.dst) + 1];
  for (std::size_t i = 1; i < adj.offsets.size(); ++i) adj.offsets[i] += adj.offsets[i - 1];
  adj.sources.resize(edges.size());
  std::vector<std::int64_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  // Edges are sorted by src, so each bucket fills in ascending source order.
  for (const Edge& e : edges) {
    adj.sources[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.dst)]++)] = e.src;
  }
  return adj;
}

std::int64_t ScoreGraph::node_count(NodeType type) const noexcept {
  switch (type) {
    case NodeType::note:
      return note_count;
    case NodeType::beat:
      return beat_count;
    case NodeType::measure:
      return measure_count;
  }
  return 0;
}

const EdgeList& ScoreGraph::edges_of(EdgeType type) const noexcept {
  static const EdgeList kEmpty;
  auto it = edges.find(type);
  return it == edges.end() ? kEmpty : it->second;
}

std::size_t ScoreGraph::edge_count() const noexcept {
  std::size_t total = 0;
  for (const auto& [type, list] : edges) total += list.size();
  return total;
}

const InAdjacency& ScoreGraph::in_adjacency(EdgeType type) const {
  auto it = in_index.find(type);
  if (it == in_index.end()) {
    throw InternalError("graph has no in-adjacency for edge type " +
                        std::string(to_string(type)));
  }
  return it->second;
}

void ScoreGraph::rebuild_index() {
  in_index.clear();
  for (const auto& [type, list] : edges) {
    in_index.emplace(type, build_in_adjacency(list, node_count(target_node_type(type))));
  }
}

Matrix compute_note_features(const Score& score) {
  Matrix x(score.notes.size(), kNoteFeatureDim);
  const double whole = 4.0 * score.divisions_per_quarter;
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    const Note& note = score.notes[i];
    x(i, static_cast<std::size_t>(note.pitch % 12)) = 1.0f;
    const int octave = std::clamp(note.pitch / 12, 0, 9);
    x(i, 12 + static_cast<std::size_t>(octave)) = 1.0f;
    const double wholes = static_cast<double>(note.duration) / whole;
    x(i, 22) = static_cast<float>(std::min(wholes, 4.0) / 4.0);
  }
  return x;
}

ScoreGraph build_score_graph(const Score& score, const BuildOptions& options) {
  if (auto violations = validate_score(score); !violations.empty()) {
    std::vector<std::int64_t> ids;
    for (const auto& v : violations) {
      if (v.note_id) ids.push_back(*v.note_id);
    }
    throw ValidationError("invalid score '" + score.source_name +
                              "': " + format_violations(violations),
                          std::move(ids));
  }
  for (std::size_t i = 1; i < score.notes.size(); ++i) {
    const Note& a = score.notes[i - 1];
    const Note& b = score.notes[i];
    if (a.onset > b.onset || (a.onset == b.onset && a.pitch > b.pitch) ||
        b.id != static_cast<std::int64_t>(i)) {
      throw ValidationError("score '" + score.source_name + "' is not sorted; call sort_score",
                            {b.id});
    }
  }

  ScoreGraph graph;
  graph.source_name = score.source_name;
  graph.divisions_per_quarter = score.divisions_per_quarter;
  graph.note_count = static_cast<std::int64_t>(score.notes.size());
  graph.options.inverse_edges = options.inverse_edges;
  for (const Note& note : score.notes) {
    graph.note_onsets.push_back(note.onset);
    graph.note_pitches.push_back(note.pitch);
  }

  if (options.note_features) {
    if (options.note_features->rows() != score.notes.size()) {
      throw ShapeError("user note features have " +
                       std::to_string(options.note_features->rows()) + " rows for " +
                       std::to_string(score.notes.size()) + " notes");
    }
    graph.note_features = *options.note_features;
  } else {
    graph.note_features = compute_note_features(score);
  }

  graph.edges = build_note_edges(score);
  if (options.inverse_edges) graph.edges = add_inverse_edges(std::move(graph.edges));
  graph.rebuild_index();

  if (options.metrical) {
    graph = attach_metrical_nodes(std::move(graph), build_metrical_grid(score));
    graph = aggregate_metrical_features(std::move(graph));
  }
  return graph;
}

}  // namespace scoregraph
