/**
 * @file metrical.cpp
 * @brief Beat/measure grid from time signatures, connect/next edges, and
 *        mean-pooled metrical node features.
 */

#include <algorithm>
#include <limits>

#include "scoregraph/error.h"
#include "scoregraph/graph.h"

namespace scoregraph {

namespace {

// Smallest grid extent that covers every onset and every note end.
Tick required_extent(const Score& score) {
  Tick extent = 0;
  for (const auto& note : score.notes) {
    extent = std::max({extent, note.offset(), note.onset + 1});
  }
  return extent;
}

std::size_t span_containing(const std::vector<TimeSpan>& spans, Tick t) {
  auto it = std::upper_bound(spans.begin(), spans.end(), t,
                             [](Tick value, const TimeSpan& s) { return value < s.start; });
  if (it == spans.begin()) return spans.size();
  --it;
  if (t >= it->end) return spans.size();
  return static_cast<std::size_t>(it - spans.begin());
}

}  // namespace

MetricalGrid build_metrical_grid(const Score& score) {
  std::vector<TimeSigEvent> sigs = score.time_sigs;
  if (sigs.empty() || sigs.front().at != 0) {
    Score tmp;
    tmp.time_sigs = sigs;
    normalize_time_sigs(tmp);
    sigs = std::move(tmp.time_sigs);
  }
  for (const auto& ts : sigs) {
    if (ts.denominator <= 0 || (ts.denominator & (ts.denominator - 1)) != 0) {
      throw UnsupportedMeterError("time signature " + std::to_string(ts.numerator) + "/" +
                                  std::to_string(ts.denominator) +
                                  ": denominator is not a power of two");
    }
    if (ts.numerator <= 0) {
      throw UnsupportedMeterError("time signature numerator must be positive");
    }
    if ((static_cast<Tick>(score.divisions_per_quarter) * 4) % ts.denominator != 0) {
      throw UnsupportedMeterError(
          "time signature " + std::to_string(ts.numerator) + "/" +
          std::to_string(ts.denominator) + ": beat is not a whole number of divisions at " +
          std::to_string(score.divisions_per_quarter) + " per quarter");
    }
  }

  MetricalGrid grid;
  const Tick extent = required_extent(score);
  Tick cursor = 0;
  std::size_t region = 0;
  while (cursor < extent) {
    while (region + 1 < sigs.size() && sigs[region + 1].at <= cursor) ++region;
    const auto& ts = sigs[region];
    const Tick beat = static_cast<Tick>(score.divisions_per_quarter) * 4 / ts.denominator;
    const Tick next_region = region + 1 < sigs.size() ? sigs[region + 1].at
                                                      : std::numeric_limits<Tick>::max();
    // A signature change inside a measure cuts that measure short.
    const Tick measure_end = std::min(cursor + beat * ts.numerator, next_region);
    grid.measures.push_back({cursor, measure_end});
    for (Tick b = cursor; b < measure_end; b += beat) {
      grid.beats.push_back({b, std::min(b + beat, measure_end)});
    }
    cursor = measure_end;
  }
  return grid;
}

ScoreGraph attach_metrical_nodes(ScoreGraph graph, const MetricalGrid& grid) {
  graph.beat_spans = grid.beats;
  graph.measure_spans = grid.measures;
  graph.beat_count = static_cast<std::int64_t>(grid.beats.size());
  graph.measure_count = static_cast<std::int64_t>(grid.measures.size());
  graph.options.metrical = true;

  auto connect = [&](const std::vector<TimeSpan>& spans, EdgeType fwd, EdgeType rev,
                     EdgeType next) {
    EdgeList forward;
    EdgeList backward;
    forward.reserve(static_cast<std::size_t>(graph.note_count));
    for (NodeId n = 0; n < graph.note_count; ++n) {
      const Tick on = graph.note_onsets[static_cast<std::size_t>(n)];
      const std::size_t s = span_containing(spans, on);
      if (s == spans.size()) {
        throw InternalError("note " + std::to_string(n) + " at onset " + std::to_string(on) +
                            " lies outside the metrical grid");
      }
      forward.push_back({n, static_cast<NodeId>(s)});
      backward.push_back({static_cast<NodeId>(s), n});
    }
    std::sort(backward.begin(), backward.end());
    EdgeList chain;
    for (std::size_t i = 0; i + 1 < spans.size(); ++i) {
      chain.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1)});
    }
    graph.edges[fwd] = std::move(forward);
    if (graph.options.inverse_edges) graph.edges[rev] = std::move(backward);
    graph.edges[next] = std::move(chain);
  };
  connect(grid.beats, EdgeType::connect_beat, EdgeType::connect_beat_rev, EdgeType::next_beat);
  connect(grid.measures, EdgeType::connect_measure, EdgeType::connect_measure_rev,
          EdgeType::next_measure);

  const std::size_t k = graph.note_features.cols();
  graph.beat_features = Matrix(static_cast<std::size_t>(graph.beat_count), k);
  graph.measure_features = Matrix(static_cast<std::size_t>(graph.measure_count), k);
  graph.rebuild_index();
  return graph;
}

ScoreGraph aggregate_metrical_features(ScoreGraph graph) {
  const std::size_t k = graph.note_features.cols();
  auto pool = [&](EdgeType connect, std::int64_t count) {
    std::vector<double> sum(static_cast<std::size_t>(count) * k, 0.0);
    std::vector<std::int64_t> members(static_cast<std::size_t>(count), 0);
    for (const Edge& e : graph.edges_of(connect)) {
      const auto row = graph.note_features.row(static_cast<std::size_t>(e.src));
      double* acc = sum.data() + static_cast<std::size_t>(e.dst) * k;
      for (std::size_t c = 0; c < k; ++c) acc[c] += row[c];
      ++members[static_cast<std::size_t>(e.dst)];
    }
    Matrix out(static_cast<std::size_t>(count), k);
    for (std::size_t r = 0; r < out.rows(); ++r) {
      if (members[r] == 0) continue;
      for (std::size_t c = 0; c < k; ++c) {
        out(r, c) = static_cast<float>(sum[r * k + c] / static_cast<double>(members[r]));
      }
    }
    return out;
  };
  graph.beat_features = pool(EdgeType::connect_beat, graph.beat_count);
  graph.measure_features = pool(EdgeType::connect_measure, graph.measure_count);
  return graph;
}

}  // namespace scoregraph
