#include "scoregraph/sampler.h"

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "scoregraph/error.h"
#include "scoregraph/loader.h"
#include "test_util.h"

namespace scoregraph {
namespace {

using testing::make_score;
using testing::score_from_onsets;

ScoreGraph graph_of(const Score& s, bool metrical = false) {
  return build_score_graph(s, {.inverse_edges = true, .metrical = metrical});
}

std::vector<ScoreGraph> random_corpus(std::uint64_t seed, int count, std::size_t max_notes,
                                      bool metrical = false) {
  Rng rng(seed);
  std::vector<ScoreGraph> corpus;
  for (int i = 0; i < count; ++i) corpus.push_back(graph_of(testing::random_score(rng, max_notes), metrical));
  return corpus;
}

TEST(TargetWindow, ExpandsToWholeOnsetGroups) {
  const ScoreGraph g = graph_of(score_from_onsets({0, 0, 1, 2, 2, 2, 3, 4, 4, 5}));
  const TargetWindow w = target_window_at(g, 4, 5);
  EXPECT_EQ(w.lo, 3);
  // [3, 8) would split the group {7, 8} at onset 4, so it is dropped.
  EXPECT_EQ(w.hi, 7);
  EXPECT_FALSE(w.truncated_tail);
}

TEST(TargetWindow, LastNoteAndWholeScore) {
  const ScoreGraph g = graph_of(score_from_onsets({0, 0, 1, 2, 2, 2, 3, 4, 4, 5}));
  EXPECT_EQ(target_window_at(g, 9, 5), (TargetWindow{0, 9, 10, false}));
  EXPECT_EQ(target_window_at(g, 0, 50), (TargetWindow{0, 0, 10, false}));
  EXPECT_EQ(target_window_at(g, 1, 50), (TargetWindow{0, 0, 10, false}));
}

TEST(TargetWindow, OversizedGroupIsTruncated) {
  const ScoreGraph g = graph_of(score_from_onsets({0, 1, 1, 1, 1, 1, 2}));
  const TargetWindow w = target_window_at(g, 3, 3);
  EXPECT_EQ(w.lo, 1);
  EXPECT_EQ(w.hi, 4);
  EXPECT_TRUE(w.truncated_tail);
}

TEST(TargetWindow, BadArguments) {
  const ScoreGraph g = graph_of(score_from_onsets({0, 1}));
  EXPECT_THROW(target_window_at(g, 2, 3), ConfigError);
  EXPECT_THROW(target_window_at(g, 0, 0), ConfigError);
  Rng rng(1);
  EXPECT_THROW(sample_target_window(graph_of(testing::make_score({})), 3, rng), ConfigError);
}

TEST(TargetWindow, RandomWindowsRespectGroups) {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const ScoreGraph g = graph_of(testing::random_score(rng, 120));
    const std::int64_t s = 1 + static_cast<std::int64_t>(rng.uniform(40));
    const TargetWindow w = sample_target_window(g, s, rng);
    ASSERT_LE(w.size(), s);
    ASSERT_GE(w.size(), 1);
    const auto& on = g.note_onsets;
    if (w.lo > 0) EXPECT_NE(on[w.lo - 1], on[w.lo]);
    if (!w.truncated_tail && w.hi < g.note_count) EXPECT_NE(on[w.hi - 1], on[w.hi]);
  }
}

TEST(SampleKhop, UnboundedTakesAllInEdges) {
  const ScoreGraph g = graph_of(make_score({{0, 2, 60}, {0, 2, 64}, {2, 2, 62}, {6, 1, 60}}));
  Rng rng(0);
  const std::vector<std::int64_t> fanouts{kUnbounded, kUnbounded};
  const LayeredSubgraph sub = sample_khop(g, target_window_at(g, 2, 1), fanouts, rng);
  ASSERT_EQ(sub.layer_edges.size(), 2u);
  for (const auto& [type, list] : sub.layer_edges[0]) {
    EdgeList expected;
    for (const Edge& e : g.edges_of(type)) {
      if (e.dst == 2) expected.push_back(e);
    }
    EXPECT_EQ(list, expected) << to_string(type);
  }
  EXPECT_EQ(sub.node_set, (std::vector<NodeId>{0, 1, 2, 3}));
}

TEST(SampleKhop, IsolatedTargetHasNoEdges) {
  const ScoreGraph g = graph_of(make_score({{0, 1, 60}}));
  Rng rng(0);
  const std::vector<std::int64_t> fanouts{3, 3};
  const LayeredSubgraph sub = sample_khop(g, target_window_at(g, 0, 1), fanouts, rng);
  for (const auto& layer : sub.layer_edges) {
    for (const auto& [type, list] : layer) EXPECT_TRUE(list.empty());
  }
  EXPECT_EQ(sub.node_set, std::vector<NodeId>{0});
}

TEST(SampleKhop, FanoutOneFromThreeNeighbors) {
  // Note 3 has three onset-relation in-neighbors.
  const ScoreGraph g = graph_of(make_score({{0, 1, 60}, {0, 1, 62}, {0, 1, 64}, {0, 1, 67}}));
  std::set<NodeId> chosen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::vector<std::int64_t> fanouts{1};
    const TargetWindow w{0, 3, 4, false};
    const LayeredSubgraph sub = sample_khop(g, w, fanouts, rng);
    const auto& onset = sub.layer_edges[0].at(EdgeType::onset);
    ASSERT_EQ(onset.size(), 1u);
    EXPECT_EQ(onset[0].dst, 3);
    chosen.insert(onset[0].src);
  }
  EXPECT_EQ(chosen, (std::set<NodeId>{0, 1, 2}));
}

TEST(SampleKhop, InvariantsOnRandomGraphs) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const ScoreGraph g = graph_of(testing::random_score(rng, 200));
    const TargetWindow w = sample_target_window(g, 20, rng);
    const std::vector<std::int64_t> fanouts{3, 2, 3};
    const LayeredSubgraph sub = sample_khop(g, w, fanouts, rng);
    std::set<NodeId> expanded;
    for (std::size_t l = 0; l < sub.layer_edges.size(); ++l) {
      std::set<NodeId> dsts;
      for (const auto& [type, list] : sub.layer_edges[l]) {
        EXPECT_TRUE(is_note_relation(type));
        const auto& full = g.edges_of(type);
        std::map<NodeId, std::int64_t> indeg;
        for (const Edge& e : list) {
          EXPECT_TRUE(std::binary_search(full.begin(), full.end(), e));
          EXPECT_TRUE(std::binary_search(sub.node_set.begin(), sub.node_set.end(), e.src));
          ++indeg[e.dst];
          dsts.insert(e.dst);
        }
        for (const auto& [v, d] : indeg) EXPECT_LE(d, fanouts[l]);
      }
      for (NodeId v : dsts) EXPECT_TRUE(expanded.insert(v).second) << "node expanded twice";
      if (l == 0) {
        for (NodeId v : dsts) EXPECT_TRUE(w.contains(v));
      }
    }
  }
}

TEST(SampleKhop, Deterministic) {
  const ScoreGraph g = random_corpus(3, 1, 300)[0];
  const std::vector<std::int64_t> fanouts{3, 3, 3};
  Rng a(17), b(17);
  const auto wa = sample_target_window(g, 30, a);
  const auto wb = sample_target_window(g, 30, b);
  const auto sa = sample_khop(g, wa, fanouts, a);
  const auto sb = sample_khop(g, wb, fanouts, b);
  EXPECT_EQ(sa.layer_edges, sb.layer_edges);
  EXPECT_EQ(sa.node_set, sb.node_set);
}

TEST(ExtendMetrical, AddsTargetBeatsAndMeasures) {
  // dpq 4, 4/4: beats of 4 divisions, measures of 16.
  const ScoreGraph g = graph_of(make_score({{0, 4, 60}, {4, 4, 62}, {12, 4, 64}, {16, 4, 65}, {36, 4, 67}}), true);
  Rng rng(0);
  const std::vector<std::int64_t> fanouts{1};
  const TargetWindow w{0, 0, 5, false};
  const LayeredSubgraph sub = extend_metrical(g, sample_khop(g, w, fanouts, rng));
  EXPECT_EQ(sub.beat_ids, (std::vector<NodeId>{0, 1, 3, 4, 9}));
  EXPECT_EQ(sub.measure_ids, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(sub.metrical_edges.at(EdgeType::next_beat), (EdgeList{{0, 1}, {3, 4}}));
  EXPECT_EQ(sub.metrical_edges.at(EdgeType::next_measure), (EdgeList{{0, 1}, {1, 2}}));
  EXPECT_EQ(sub.metrical_edges.at(EdgeType::connect_beat).size(), 5u);
  EXPECT_EQ(sub.metrical_edges.at(EdgeType::connect_measure_rev).size(), 5u);
}

TEST(ExtendMetrical, RequiresMetricalGraph) {
  const ScoreGraph g = graph_of(make_score({{0, 4, 60}}));
  EXPECT_THROW(extend_metrical(g, LayeredSubgraph{}), ConfigError);
}

TEST(AssembleBatch, RecordsAndOffsets) {
  std::vector<ScoreGraph> graphs{graph_of(score_from_onsets({0, 1, 2, 3})),
                                 graph_of(score_from_onsets({0, 1, 2, 3, 4, 5}))};
  Rng rng(0);
  const std::vector<std::int64_t> fanouts{kUnbounded};
  std::vector<LayeredSubgraph> samples{
      sample_khop(graphs[0], TargetWindow{0, 0, 4, false}, fanouts, rng),
      sample_khop(graphs[1], TargetWindow{1, 0, 6, false}, fanouts, rng)};
  const Batch b = assemble_batch(samples, graphs);
  ASSERT_EQ(b.records.size(), 2u);
  EXPECT_EQ(b.records[0].score_index, 0);
  EXPECT_EQ(b.records[0].note_offset, 0);
  EXPECT_EQ(b.records[0].note_count, 4);
  EXPECT_EQ(b.records[1].note_offset, 4);
  EXPECT_EQ(b.records[1].note_count, 6);
  EXPECT_EQ(b.records[1].target_offset, 4);
  EXPECT_EQ(b.note_count, 10);
  EXPECT_EQ(b.note_features.rows(), 10u);
  EXPECT_EQ(b.note_features.cols(), kNoteFeatureDim);
  EXPECT_EQ(b.total_targets(), 10);
}

TEST(AssembleBatch, RelabelingPreservesOrderAndEdges) {
  const auto corpus = random_corpus(44, 6, 150);
  SamplerConfig cfg;
  cfg.target_size = 25;
  cfg.batch_size = 4;
  Rng rng(5);
  const Batch b = sample_batch(corpus, cfg, rng);
  ASSERT_EQ(b.records.size(), 4u);
  std::size_t edges_from_sources = 0;
  for (const ScoreRecord& r : b.records) {
    const ScoreGraph& g = corpus[static_cast<std::size_t>(r.score_index)];
    for (std::int64_t i = 1; i < r.note_count; ++i) {
      EXPECT_LT(b.source_note_ids[r.note_offset + i - 1], b.source_note_ids[r.note_offset + i]);
    }
    for (std::int64_t i = 0; i < r.note_count; ++i) {
      const NodeId src = b.source_note_ids[r.note_offset + i];
      EXPECT_EQ(b.note_onsets[r.note_offset + i], g.note_onsets[src]);
      for (std::size_t k = 0; k < g.feature_dim(); ++k) {
        EXPECT_EQ(b.note_features(r.note_offset + i, k), g.note_features(src, k));
      }
    }
    for (std::int64_t t = 1; t < r.target_count; ++t) {
      EXPECT_EQ(b.target_nodes[r.target_offset + t], b.target_nodes[r.target_offset + t - 1] + 1);
    }
  }
  for (const auto& [type, list] : b.edges) {
    for (const Edge& e : list) {
      // Map back through the owning record and check against the source graph.
      auto owner = std::find_if(b.records.begin(), b.records.end(), [&](const ScoreRecord& r) {
        return e.dst >= r.note_offset && e.dst < r.note_offset + r.note_count;
      });
      ASSERT_NE(owner, b.records.end());
      EXPECT_GE(e.src, owner->note_offset);
      EXPECT_LT(e.src, owner->note_offset + owner->note_count);
      const auto& full = corpus[owner->score_index].edges_of(type);
      EXPECT_TRUE(std::binary_search(full.begin(), full.end(),
                                     Edge{b.source_note_ids[e.src], b.source_note_ids[e.dst]}));
      ++edges_from_sources;
    }
  }
  EXPECT_GT(edges_from_sources, 0u);
}

TEST(AssembleBatch, Errors) {
  std::vector<ScoreGraph> graphs{graph_of(score_from_onsets({0, 1}))};
  LayeredSubgraph s;
  s.targets = {0, 0, 1, false};
  s.node_set = {0};
  std::vector<LayeredSubgraph> dup{s, s};
  EXPECT_THROW(assemble_batch(dup, graphs), AssemblyError);
  s.targets.score_index = 3;
  std::vector<LayeredSubgraph> missing{s};
  EXPECT_THROW(assemble_batch(missing, graphs), AssemblyError);

  BuildOptions narrow;
  narrow.note_features = Matrix(2, 4);
  graphs.push_back(build_score_graph(score_from_onsets({0, 1}), narrow));
  LayeredSubgraph a = s, c = s;
  a.targets.score_index = 0;
  c.targets.score_index = 1;
  std::vector<LayeredSubgraph> mixed{a, c};
  EXPECT_THROW(assemble_batch(mixed, graphs), ShapeError);
}

TEST(UnfoldTargets, ShapeAndMask) {
  std::vector<ScoreGraph> graphs{graph_of(score_from_onsets({0, 1, 2, 3})),
                                 graph_of(score_from_onsets({0, 1}))};
  Rng rng(0);
  const std::vector<std::int64_t> fanouts{1};
  BuildOptions small;
  small.note_features = Matrix(4, 4);
  for (std::size_t r = 0; r < 4; ++r) small.note_features->operator()(r, 0) = static_cast<float>(r + 1);
  graphs[0] = build_score_graph(score_from_onsets({0, 1, 2, 3}), small);
  small.note_features = Matrix(2, 4, 9.0f);
  graphs[1] = build_score_graph(score_from_onsets({0, 1}), small);
  std::vector<LayeredSubgraph> samples{
      sample_khop(graphs[0], TargetWindow{0, 0, 4, false}, fanouts, rng),
      sample_khop(graphs[1], TargetWindow{1, 0, 2, false}, fanouts, rng)};
  const Batch b = assemble_batch(samples, graphs);
  const UnfoldedBatch u = unfold_targets(b, 5);
  EXPECT_EQ(u.batch, 2u);
  EXPECT_EQ(u.seq, 5u);
  EXPECT_EQ(u.dim, 4u);
  EXPECT_EQ(u.values.size(), 40u);
  for (std::size_t s = 0; s < 5; ++s) {
    EXPECT_EQ(u.valid(0, s), s < 4);
    EXPECT_EQ(u.valid(1, s), s < 2);
  }
  EXPECT_EQ(u.at(0, 2, 0), 3.0f);
  EXPECT_EQ(u.at(1, 1, 3), 9.0f);
  EXPECT_EQ(u.at(1, 3, 3), 0.0f);
  EXPECT_THROW(unfold_targets(b, 3), InternalError);
}

TEST(SampleBatch, SmallCorpusGivesOneRecordPerScore) {
  const auto corpus = random_corpus(1, 2, 100);
  SamplerConfig cfg;  // B = 300
  Rng rng(0);
  const Batch b = sample_batch(corpus, cfg, rng);
  EXPECT_EQ(b.records.size(), 2u);
  EXPECT_LE(b.total_targets(), cfg.target_size * cfg.batch_size);
}

TEST(SampleBatch, DeterministicPerDraw) {
  const auto corpus = random_corpus(2, 8, 200, true);
  SamplerConfig cfg;
  cfg.batch_size = 3;
  cfg.target_size = 40;
  cfg.include_metrical = true;
  cfg.seed = 7;
  EXPECT_EQ(sample_batch(corpus, cfg, std::uint64_t{4}), sample_batch(corpus, cfg, std::uint64_t{4}));
  EXPECT_FALSE(sample_batch(corpus, cfg, std::uint64_t{4}) == sample_batch(corpus, cfg, std::uint64_t{5}));
}

TEST(SampleBatch, SingleScoreUnboundedEqualsFullGraph) {
  const auto corpus = random_corpus(3, 1, 60);
  SamplerConfig cfg;
  cfg.batch_size = 1;
  cfg.target_size = 1000;
  cfg.fanouts = {kUnbounded, kUnbounded, kUnbounded};
  const ScoreGraph& g = corpus[0];
  // Draw until the anchor falls in the first onset group so every note is a target.
  Batch b;
  for (std::uint64_t draw = 0; draw < 1000; ++draw) {
    b = sample_batch(corpus, cfg, draw);
    if (b.total_targets() == g.note_count) break;
  }
  ASSERT_EQ(b.total_targets(), g.note_count);
  for (const auto& [type, list] : b.edges) {
    if (!list.empty()) EXPECT_LE(list.size(), g.edges_of(type).size());
  }
  // Every note reaches every in-edge within three hops when all notes are targets.
  for (const auto& [type, list] : g.edges) {
    const auto it = b.edges.find(type);
    const EdgeList got = it == b.edges.end() ? EdgeList{} : it->second;
    EXPECT_EQ(got, list) << to_string(type);
  }
}

TEST(SampleBatch, EmptyCorpusAndBadConfig) {
  SamplerConfig cfg;
  Rng rng(0);
  EXPECT_THROW(sample_batch(std::vector<ScoreGraph>{}, cfg, rng), ConfigError);
  cfg.fanouts = {0};
  const auto corpus = random_corpus(1, 1, 10);
  EXPECT_THROW(sample_batch(corpus, cfg, rng), ConfigError);
  cfg.fanouts = {};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SampleBatch, EveryOnsetGroupEventuallyAnchored) {
  Rng build(0);
  const ScoreGraph g = graph_of(make_synthetic_score(100, build));
  std::set<NodeId> starts;
  Rng rng(99);
  for (int i = 0; i < 100000; ++i) starts.insert(sample_target_window(g, 1, rng).lo);
  std::set<NodeId> groups;
  for (NodeId v = 0; v < g.note_count; ++v) {
    if (v == 0 || g.note_onsets[v] != g.note_onsets[v - 1]) groups.insert(v);
  }
  EXPECT_EQ(starts, groups);
}

TEST(EpochPartition, CoversEachScoreOnce) {
  Rng rng(3);
  const auto parts = epoch_partition(23, 5, rng);
  ASSERT_EQ(parts.size(), 5u);
  std::vector<std::int64_t> all;
  for (const auto& p : parts) {
    EXPECT_LE(p.size(), 5u);
    all.insert(all.end(), p.begin(), p.end());
  }
  std::sort(all.begin(), all.end());
  for (std::int64_t i = 0; i < 23; ++i) EXPECT_EQ(all[i], i);
}

TEST(BatchStream, IndependentOfWorkerCount) {
  const auto corpus = random_corpus(8, 10, 120);
  SamplerConfig cfg;
  cfg.batch_size = 3;
  cfg.target_size = 30;
  cfg.seed = 11;
  auto collect = [&](std::size_t workers) {
    BatchStream stream(corpus, cfg, 6, workers, 2);
    std::vector<Batch> out;
    while (auto b = stream.next()) out.push_back(std::move(*b));
    return out;
  };
  const auto one = collect(1);
  const auto three = collect(3);
  ASSERT_EQ(one.size(), 6u);
  EXPECT_EQ(one, three);
  for (std::uint64_t i = 0; i < 6; ++i) EXPECT_EQ(one[i], sample_batch(corpus, cfg, i));
}

}  // namespace
}  // namespace scoregraph
