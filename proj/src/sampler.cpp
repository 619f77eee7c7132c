/**
 * @file sampler.cpp
 * @brief Target windows, layered neighbor sampling, batch assembly and unfolding.
 */

#include "scoregraph/sampler.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "scoregraph/error.h"

namespace scoregraph {

void SamplerConfig::validate() const {
  if (target_size < 1) throw ConfigError("target size S must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size B must be >= 1");
  if (fanouts.empty()) throw ConfigError("at least one sampling layer is required");
  for (auto f : fanouts) {
    if (f < 1 && f != kUnbounded) {
      throw ConfigError("fan-out must be positive or unbounded, got " + std::to_string(f));
    }
  }
}

std::int64_t Batch::node_count(NodeType type) const noexcept {
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

namespace {

NodeId group_start(const ScoreGraph& g, NodeId i) {
  const auto& on = g.note_onsets;
  while (i > 0 && on[static_cast<std::size_t>(i - 1)] == on[static_cast<std::size_t>(i)]) --i;
  return i;
}

// Partial Fisher-Yates: `count` distinct values of [0, n) in draw order.
std::vector<std::int64_t> draw_without_replacement(std::int64_t n, std::int64_t count, Rng& rng) {
  std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::int64_t>(rng.uniform(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

}  // namespace

TargetWindow target_window_at(const ScoreGraph& graph, NodeId anchor, std::int64_t target_size,
                              std::int64_t score_index) {
  if (anchor < 0 || anchor >= graph.note_count) {
    throw ConfigError("anchor " + std::to_string(anchor) + " outside note range");
  }
  if (target_size < 1) throw ConfigError("target size S must be >= 1");
  const auto& on = graph.note_onsets;
  const NodeId n = graph.note_count;

  TargetWindow w;
  w.score_index = score_index;
  w.lo = group_start(graph, anchor);
  w.hi = std::min(w.lo + target_size, n);
  if (w.hi < n && on[static_cast<std::size_t>(w.hi)] == on[static_cast<std::size_t>(w.hi - 1)]) {
    // The budget boundary splits an onset group: drop the whole group.
    const NodeId split = group_start(graph, w.hi - 1);
    if (split > w.lo) {
      w.hi = split;
    } else {
      w.truncated_tail = true;
    }
  }
  return w;
}

TargetWindow sample_target_window(const ScoreGraph& graph, std::int64_t target_size, Rng& rng,
                                  std::int64_t score_index) {
  if (graph.note_count < 1) throw ConfigError("cannot sample a window from an empty score");
  const auto anchor = static_cast<NodeId>(rng.uniform(static_cast<std::uint64_t>(graph.note_count)));
  return target_window_at(graph, anchor, target_size, score_index);
}

LayeredSubgraph sample_khop(const ScoreGraph& graph, const TargetWindow& targets,
                            std::span<const std::int64_t> fanouts, Rng& rng) {
  LayeredSubgraph sub;
  sub.targets = targets;

  std::vector<EdgeType> relations;
  for (const auto& [type, list] : graph.edges) {
    if (is_note_relation(type)) relations.push_back(type);
  }

  std::vector<std::uint8_t> visited(static_cast<std::size_t>(graph.note_count), 0);
  std::vector<NodeId> frontier;
  for (NodeId v = targets.lo; v < targets.hi; ++v) {
    visited[static_cast<std::size_t>(v)] = 1;
    frontier.push_back(v);
  }

  for (const std::int64_t fanout : fanouts) {
    EdgeMap layer;
    std::vector<NodeId> next;
    for (EdgeType r : relations) {
      auto& out = layer[r];
      const InAdjacency& adj = graph.in_adjacency(r);
      for (const NodeId v : frontier) {
        const auto nbrs = adj.in_neighbors(v);
        const auto degree = static_cast<std::int64_t>(nbrs.size());
        auto take = [&](NodeId u) {
          out.push_back({u, v});
          if (!visited[static_cast<std::size_t>(u)]) {
            visited[static_cast<std::size_t>(u)] = 1;
            next.push_back(u);
          }
        };
        if (fanout == kUnbounded || fanout >= degree) {
          for (const NodeId u : nbrs) take(u);
        } else {
          auto picks = draw_without_replacement(degree, fanout, rng);
          std::sort(picks.begin(), picks.end());
          for (const auto p : picks) take(nbrs[static_cast<std::size_t>(p)]);
        }
      }
      std::sort(out.begin(), out.end());
    }
    std::sort(next.begin(), next.end());
    sub.layer_edges.push_back(std::move(layer));
    frontier = std::move(next);
  }

  for (NodeId v = 0; v < graph.note_count; ++v) {
    if (visited[static_cast<std::size_t>(v)]) sub.node_set.push_back(v);
  }
  return sub;
}

LayeredSubgraph extend_metrical(const ScoreGraph& graph, LayeredSubgraph sub) {
  if (!graph.options.metrical) {
    throw ConfigError("extend_metrical requires a graph built with metrical nodes");
  }
  auto extend = [&](EdgeType connect, EdgeType connect_rev, EdgeType next,
                    std::vector<NodeId>& ids) {
    const EdgeList& links = graph.edges_of(connect);
    std::set<NodeId> included;
    EdgeList fwd;
    for (NodeId t = sub.targets.lo; t < sub.targets.hi; ++t) {
      const Edge& e = links.at(static_cast<std::size_t>(t));
      if (e.src != t) throw InternalError("connect edges are not one per note in note order");
      fwd.push_back(e);
      included.insert(e.dst);
    }
    ids.assign(included.begin(), included.end());
    if (graph.has_edge_type(connect_rev)) {
      EdgeList rev;
      for (const Edge& e : fwd) rev.push_back({e.dst, e.src});
      std::sort(rev.begin(), rev.end());
      sub.metrical_edges[connect_rev] = std::move(rev);
    }
    sub.metrical_edges[connect] = std::move(fwd);
    EdgeList chain;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      if (ids[i + 1] == ids[i] + 1) chain.push_back({ids[i], ids[i + 1]});
    }
    sub.metrical_edges[next] = std::move(chain);
  };
  extend(EdgeType::connect_beat, EdgeType::connect_beat_rev, EdgeType::next_beat, sub.beat_ids);
  extend(EdgeType::connect_measure, EdgeType::connect_measure_rev, EdgeType::next_measure,
         sub.measure_ids);
  return sub;
}

Batch assemble_batch(std::span<const LayeredSubgraph> samples,
                     std::span<const ScoreGraph> graphs) {
  Batch batch;
  std::set<std::int64_t> seen;
  std::size_t k = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto index = samples[i].targets.score_index;
    if (index < 0 || static_cast<std::size_t>(index) >= graphs.size()) {
      throw AssemblyError("sample " + std::to_string(i) + " refers to missing score " +
                          std::to_string(index));
    }
    if (!seen.insert(index).second) {
      throw AssemblyError("score " + std::to_string(index) + " appears twice in one batch");
    }
    const std::size_t dim = graphs[static_cast<std::size_t>(index)].feature_dim();
    if (i == 0) {
      k = dim;
    } else if (dim != k) {
      throw ShapeError("feature width differs across scores in a batch");
    }
  }

  std::vector<float> note_rows, beat_rows, measure_rows;
  for (const LayeredSubgraph& s : samples) {
    const ScoreGraph& g = graphs[static_cast<std::size_t>(s.targets.score_index)];
    ScoreRecord rec;
    rec.score_index = s.targets.score_index;
    rec.note_offset = batch.note_count;
    rec.note_count = static_cast<std::int64_t>(s.node_set.size());
    rec.beat_offset = batch.beat_count;
    rec.beat_count = static_cast<std::int64_t>(s.beat_ids.size());
    rec.measure_offset = batch.measure_count;
    rec.measure_count = static_cast<std::int64_t>(s.measure_ids.size());
    rec.target_offset = batch.total_targets();
    rec.target_count = s.targets.size();

    auto relabel = [&](NodeType type, NodeId id) -> NodeId {
      const std::vector<NodeId>& ids = type == NodeType::note   ? s.node_set
                                       : type == NodeType::beat ? s.beat_ids
                                                                : s.measure_ids;
      const NodeId base = type == NodeType::note   ? rec.note_offset
                          : type == NodeType::beat ? rec.beat_offset
                                                   : rec.measure_offset;
      auto it = std::lower_bound(ids.begin(), ids.end(), id);
      if (it == ids.end() || *it != id) {
        throw AssemblyError(std::string(to_string(type)) + " " + std::to_string(id) +
                            " used by an edge but missing from the sample");
      }
      return base + static_cast<NodeId>(it - ids.begin());
    };
    auto add_edges = [&](const EdgeMap& edges) {
      for (const auto& [type, list] : edges) {
        auto& out = batch.edges[type];
        for (const Edge& e : list) {
          out.push_back({relabel(source_node_type(type), e.src),
                         relabel(target_node_type(type), e.dst)});
        }
      }
    };
    for (const EdgeMap& layer : s.layer_edges) add_edges(layer);
    add_edges(s.metrical_edges);

    for (NodeId t = s.targets.lo; t < s.targets.hi; ++t) {
      batch.target_nodes.push_back(relabel(NodeType::note, t));
    }
    auto gather = [](const Matrix& src, const std::vector<NodeId>& ids, std::vector<float>& dst) {
      for (NodeId id : ids) {
        const auto row = src.row(static_cast<std::size_t>(id));
        dst.insert(dst.end(), row.begin(), row.end());
      }
    };
    gather(g.note_features, s.node_set, note_rows);
    gather(g.beat_features, s.beat_ids, beat_rows);
    gather(g.measure_features, s.measure_ids, measure_rows);
    for (NodeId n : s.node_set) {
      batch.note_onsets.push_back(g.note_onsets[static_cast<std::size_t>(n)]);
      batch.note_pitches.push_back(g.note_pitches[static_cast<std::size_t>(n)]);
    }
    batch.source_note_ids.insert(batch.source_note_ids.end(), s.node_set.begin(),
                                 s.node_set.end());
    batch.source_beat_ids.insert(batch.source_beat_ids.end(), s.beat_ids.begin(),
                                 s.beat_ids.end());
    batch.source_measure_ids.insert(batch.source_measure_ids.end(), s.measure_ids.begin(),
                                    s.measure_ids.end());

    batch.note_count += rec.note_count;
    batch.beat_count += rec.beat_count;
    batch.measure_count += rec.measure_count;
    batch.records.push_back(rec);
  }
  for (auto& [type, list] : batch.edges) std::sort(list.begin(), list.end());
  batch.note_features = Matrix(static_cast<std::size_t>(batch.note_count), k, std::move(note_rows));
  batch.beat_features = Matrix(static_cast<std::size_t>(batch.beat_count), k, std::move(beat_rows));
  batch.measure_features =
      Matrix(static_cast<std::size_t>(batch.measure_count), k, std::move(measure_rows));
  return batch;
}

UnfoldedBatch unfold_targets(const Batch& batch, std::int64_t target_size) {
  if (target_size < 1) throw ConfigError("target size S must be >= 1");
  UnfoldedBatch out;
  out.batch = batch.records.size();
  out.seq = static_cast<std::size_t>(target_size);
  out.dim = batch.note_features.cols();
  out.values.assign(out.batch * out.seq * out.dim, 0.0f);
  out.mask.assign(out.batch * out.seq, 0);
  for (std::size_t b = 0; b < batch.records.size(); ++b) {
    const ScoreRecord& rec = batch.records[b];
    if (rec.target_count > target_size) {
      throw InternalError("score " + std::to_string(rec.score_index) + " has " +
                          std::to_string(rec.target_count) + " targets, more than S=" +
                          std::to_string(target_size));
    }
    for (std::int64_t i = 0; i < rec.target_count; ++i) {
      const NodeId node = batch.target_nodes[static_cast<std::size_t>(rec.target_offset + i)];
      const auto row = batch.note_features.row(static_cast<std::size_t>(node));
      std::copy(row.begin(), row.end(),
                out.values.begin() +
                    static_cast<std::ptrdiff_t>((b * out.seq + static_cast<std::size_t>(i)) * out.dim));
      out.mask[b * out.seq + static_cast<std::size_t>(i)] = 1;
    }
  }
  return out;
}

Batch sample_batch_for(std::span<const ScoreGraph> corpus,
                       std::span<const std::int64_t> score_indices, const SamplerConfig& cfg,
                       const Rng& rng) {
  cfg.validate();
  if (static_cast<std::int64_t>(score_indices.size()) > cfg.batch_size) {
    throw ConfigError("more scores requested than the batch size B");
  }
  std::vector<LayeredSubgraph> samples;
  samples.reserve(score_indices.size());
  for (std::size_t pos = 0; pos < score_indices.size(); ++pos) {
    const auto index = score_indices[pos];
    if (index < 0 || static_cast<std::size_t>(index) >= corpus.size()) {
      throw ConfigError("score index " + std::to_string(index) + " outside corpus");
    }
    const ScoreGraph& g = corpus[static_cast<std::size_t>(index)];
    if (g.note_count == 0) continue;
    Rng local = rng.split(pos);
    TargetWindow w = sample_target_window(g, cfg.target_size, local, index);
    LayeredSubgraph sub = sample_khop(g, w, cfg.fanouts, local);
    if (cfg.include_metrical) sub = extend_metrical(g, std::move(sub));
    samples.push_back(std::move(sub));
  }
  Batch batch = assemble_batch(samples, corpus);
  if (batch.total_targets() > cfg.target_size * cfg.batch_size) {
    throw InternalError("batch exceeds the S x B target budget");
  }
  return batch;
}

Batch sample_batch(std::span<const ScoreGraph> corpus, const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  if (corpus.empty()) throw ConfigError("cannot sample from an empty corpus");
  const auto n = static_cast<std::int64_t>(corpus.size());
  const auto picks = draw_without_replacement(n, std::min(cfg.batch_size, n), rng);
  return sample_batch_for(corpus, picks, cfg, rng.split(rng.draws()));
}

Batch sample_batch(std::span<const ScoreGraph> corpus, const SamplerConfig& cfg,
                   std::uint64_t draw) {
  Rng rng = Rng(cfg.seed).split(draw);
  return sample_batch(corpus, cfg, rng);
}

std::vector<std::vector<std::int64_t>> epoch_partition(std::size_t corpus_size,
                                                       std::int64_t batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch size B must be >= 1");
  const auto order =
      draw_without_replacement(static_cast<std::int64_t>(corpus_size),
                               static_cast<std::int64_t>(corpus_size), rng);
  std::vector<std::vector<std::int64_t>> chunks;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    chunks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                        order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return chunks;
}

}  // namespace scoregraph
