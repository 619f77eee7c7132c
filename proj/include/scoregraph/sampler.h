/**
 * @file sampler.h
 * @brief Onset-aware target windows, layered k-hop neighbor sampling, and
 *        multi-score batch assembly.
 *
 * Per score, a random anchor note is drawn and widened to a window of at most
 * S notes in (onset, pitch) order that never splits an onset group (unless a
 * single group is larger than S). In-edges are then sampled per relation and
 * layer. Samples from up to B scores are joined into one Batch with
 * contiguous per-score node blocks.
 */

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scoregraph/graph.h"
#include "scoregraph/matrix.h"
#include "scoregraph/rng.h"

namespace scoregraph {

/// Fan-out value meaning "take every in-edge".
inline constexpr std::int64_t kUnbounded = -1;

struct SamplerConfig {
  std::int64_t target_size = 300;  // S
  std::int64_t batch_size = 300;   // B
  std::vector<std::int64_t> fanouts{3, 3, 3};
  std::uint64_t seed = 0;
  bool include_metrical = false;

  /// Pitch-spelling preset: B = 300, S = 300.
  static SamplerConfig pitch_spelling() { return {}; }
  /// Cadence preset: B = 200, S = 500.
  static SamplerConfig cadence() {
    SamplerConfig cfg;
    cfg.target_size = 500;
    cfg.batch_size = 200;
    return cfg;
  }

  /// Throws ConfigError on S < 1, B < 1, no layers, or a fan-out < 1 other
  /// than kUnbounded.
  void validate() const;
  std::size_t layers() const noexcept { return fanouts.size(); }
};

struct TargetWindow {
  std::int64_t score_index = 0;
  NodeId lo = 0;  // first target note
  NodeId hi = 0;  // one past the last target note
  bool truncated_tail = false;

  std::int64_t size() const noexcept { return hi - lo; }
  bool contains(NodeId n) const noexcept { return n >= lo && n < hi; }
  bool operator==(const TargetWindow&) const = default;
};

struct LayeredSubgraph {
  TargetWindow targets;
  /// layer_edges[l] holds the edges sampled into frontier l (l = 0 is the
  /// edges into the targets). Note relations only.
  std::vector<EdgeMap> layer_edges;
  /// Every note touched, ascending.
  std::vector<NodeId> node_set;
  std::vector<NodeId> beat_ids;
  std::vector<NodeId> measure_ids;
  /// connect/next edges added by extend_metrical.
  EdgeMap metrical_edges;
};

/// Window for a fixed anchor. Exposed for tests; sample_target_window draws
/// the anchor uniformly over notes.
TargetWindow target_window_at(const ScoreGraph& graph, NodeId anchor, std::int64_t target_size,
                              std::int64_t score_index = 0);

TargetWindow sample_target_window(const ScoreGraph& graph, std::int64_t target_size, Rng& rng,
                                  std::int64_t score_index = 0);

/// Layered node-wise sampling over the note relations present in `graph`.
/// Each node is expanded once, in the layer after it is first reached, with
/// at most fanouts[l] in-edges drawn without replacement per relation.
LayeredSubgraph sample_khop(const ScoreGraph& graph, const TargetWindow& targets,
                            std::span<const std::int64_t> fanouts, Rng& rng);

/// Adds the beats and measures of the target notes with their connect edges
/// and the next edges between consecutive included ones. Throws ConfigError
/// for graphs built without metrical nodes.
LayeredSubgraph extend_metrical(const ScoreGraph& graph, LayeredSubgraph sub);

struct ScoreRecord {
  std::int64_t score_index = 0;
  std::int64_t target_offset = 0;  // into Batch::target_nodes
  std::int64_t target_count = 0;
  std::int64_t note_offset = 0;
  std::int64_t note_count = 0;
  std::int64_t beat_offset = 0;
  std::int64_t beat_count = 0;
  std::int64_t measure_offset = 0;
  std::int64_t measure_count = 0;
  bool operator==(const ScoreRecord&) const = default;
};

struct Batch {
  std::int64_t note_count = 0;
  std::int64_t beat_count = 0;
  std::int64_t measure_count = 0;
  EdgeMap edges;
  Matrix note_features;
  Matrix beat_features;
  Matrix measure_features;
  std::vector<Tick> note_onsets;
  std::vector<int> note_pitches;
  /// Source-graph id of every batch note, beat and measure.
  std::vector<NodeId> source_note_ids;
  std::vector<NodeId> source_beat_ids;
  std::vector<NodeId> source_measure_ids;
  /// Batch note ids of all targets, score after score, each in (onset, pitch) order.
  std::vector<NodeId> target_nodes;
  std::vector<ScoreRecord> records;

  std::int64_t total_targets() const noexcept {
    return static_cast<std::int64_t>(target_nodes.size());
  }
  std::int64_t node_count(NodeType type) const noexcept;
  bool operator==(const Batch&) const = default;
};

/// Joins samples in the given order. graphs[s.targets.score_index] must be the
/// graph each sample was drawn from. Throws AssemblyError on a repeated score
/// index or an out-of-range index, ShapeError on mismatched feature widths.
Batch assemble_batch(std::span<const LayeredSubgraph> samples,
                     std::span<const ScoreGraph> graphs);

struct UnfoldedBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::size_t dim = 0;
  std::vector<float> values;  // batch x seq x dim, row-major
  std::vector<std::uint8_t> mask;  // batch x seq

  float at(std::size_t b, std::size_t s, std::size_t k) const noexcept {
    return values[(b * seq + s) * dim + k];
  }
  bool valid(std::size_t b, std::size_t s) const noexcept { return mask[b * seq + s] != 0; }
};

/// Target feature rows per score, zero-padded to target_size.
UnfoldedBatch unfold_targets(const Batch& batch, std::int64_t target_size);

/// Samples the given scores (in order) into one batch using child streams of
/// `rng` per position, so scores can be sampled independently.
Batch sample_batch_for(std::span<const ScoreGraph> corpus,
                       std::span<const std::int64_t> score_indices, const SamplerConfig& cfg,
                       const Rng& rng);

/// Draws min(B, |corpus|) distinct scores uniformly and samples them.
Batch sample_batch(std::span<const ScoreGraph> corpus, const SamplerConfig& cfg, Rng& rng);

/// Batch number `draw` of the stream seeded by cfg.seed.
Batch sample_batch(std::span<const ScoreGraph> corpus, const SamplerConfig& cfg,
                   std::uint64_t draw);

/// Shuffled partition of [0, corpus_size) into chunks of at most batch_size.
std::vector<std::vector<std::int64_t>> epoch_partition(std::size_t corpus_size,
                                                       std::int64_t batch_size, Rng& rng);

}  // namespace scoregraph
