/**
 * @file note_edges.cpp
 * @brief Note-to-note relation builders: literal pairwise reference and the
 *        onset-indexed builder used in production.
 */

#include <algorithm>
#include <set>

#include "scoregraph/graph.h"

namespace scoregraph {

EdgeMap build_note_edges_reference(const Score& score) {
  const auto& notes = score.notes;
  const auto n = static_cast<NodeId>(notes.size());
  std::set<Tick> onsets;
  for (const auto& note : notes) onsets.insert(note.onset);

  EdgeMap out;
  for (EdgeType t : kBaseNoteEdgeTypes) out[t];
  for (NodeId u = 0; u < n; ++u) {
    const Note& a = notes[static_cast<std::size_t>(u)];
    for (NodeId v = 0; v < n; ++v) {
      if (u == v) continue;
      const Note& b = notes[static_cast<std::size_t>(v)];
      if (a.onset == b.onset) out[EdgeType::onset].push_back({u, v});
      if (a.onset > b.onset && a.onset <= b.onset + b.duration) {
        out[EdgeType::during].push_back({u, v});
      }
      if (a.onset + a.duration == b.onset) out[EdgeType::follow].push_back({u, v});
      if (a.onset + a.duration < b.onset) {
        // No v' with end(u) < on(v') < on(v).
        auto it = onsets.upper_bound(a.onset + a.duration);
        if (it == onsets.end() || *it >= b.onset) out[EdgeType::silence].push_back({u, v});
      }
    }
  }
  return out;
}

namespace {

// Distinct onsets with the index range of notes sharing each one.
struct OnsetGroups {
  std::vector<Tick> onset;
  std::vector<NodeId> begin;  // size = groups + 1

  explicit OnsetGroups(const std::vector<Note>& notes) {
    for (std::size_t i = 0; i < notes.size(); ++i) {
      if (i == 0 || notes[i].onset != notes[i - 1].onset) {
        onset.push_back(notes[i].onset);
        begin.push_back(static_cast<NodeId>(i));
      }
    }
    begin.push_back(static_cast<NodeId>(notes.size()));
  }

  std::size_t size() const noexcept { return onset.size(); }

  /// First group whose onset is >= t (or > t when strict).
  std::size_t first_at_or_after(Tick t) const {
    return static_cast<std::size_t>(std::lower_bound(onset.begin(), onset.end(), t) -
                                    onset.begin());
  }
  std::size_t first_after(Tick t) const {
    return static_cast<std::size_t>(std::upper_bound(onset.begin(), onset.end(), t) -
                                    onset.begin());
  }
};

}  // namespace

EdgeMap build_note_edges(const Score& score) {
  const auto& notes = score.notes;
  const auto n = static_cast<NodeId>(notes.size());
  const OnsetGroups groups(notes);

  EdgeMap out;
  auto& onset_edges = out[EdgeType::onset];
  auto& during_edges = out[EdgeType::during];
  auto& follow_edges = out[EdgeType::follow];
  auto& silence_edges = out[EdgeType::silence];

  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (NodeId u = groups.begin[g]; u < groups.begin[g + 1]; ++u) {
      for (NodeId v = groups.begin[g]; v < groups.begin[g + 1]; ++v) {
        if (u != v) onset_edges.push_back({u, v});
      }
    }
  }

  for (NodeId u = 0; u < n; ++u) {
    const Tick end = notes[static_cast<std::size_t>(u)].offset();
    const std::size_t g = groups.first_at_or_after(end);
    if (g < groups.size() && groups.onset[g] == end) {
      for (NodeId v = groups.begin[g]; v < groups.begin[g + 1]; ++v) {
        if (v != u) follow_edges.push_back({u, v});
      }
    }
    // Silence targets are exactly the first onset group strictly after end(u).
    const std::size_t s = (g < groups.size() && groups.onset[g] == end) ? g + 1 : g;
    if (s < groups.size()) {
      for (NodeId v = groups.begin[s]; v < groups.begin[s + 1]; ++v) {
        silence_edges.push_back({u, v});
      }
    }
  }

  // during: for each sounding note v, the notes u starting in (on(v), end(v)]
  // form one contiguous index range. Bucket by u so the list comes out sorted.
  std::vector<std::pair<NodeId, NodeId>> ranges(static_cast<std::size_t>(n));
  std::vector<std::int64_t> count(static_cast<std::size_t>(n) + 1, 0);
  for (NodeId v = 0; v < n; ++v) {
    const Note& b = notes[static_cast<std::size_t>(v)];
    const NodeId lo = groups.begin[groups.first_after(b.onset)];
    const NodeId hi = groups.begin[groups.first_after(b.offset())];
    ranges[static_cast<std::size_t>(v)] = {lo, hi};
    for (NodeId u = lo; u < hi; ++u) ++count[static_cast<std::size_t>(u) + 1];
  }
  for (std::size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
  during_edges.resize(static_cast<std::size_t>(count.back()));
  std::vector<std::int64_t> cursor(count.begin(), count.end() - 1);
  for (NodeId v = 0; v < n; ++v) {
    const auto [lo, hi] = ranges[static_cast<std::size_t>(v)];
    for (NodeId u = lo; u < hi; ++u) {
      during_edges[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = {u, v};
    }
  }
  return out;
}

EdgeMap add_inverse_edges(EdgeMap edges) {
  for (EdgeType base : {EdgeType::during, EdgeType::follow, EdgeType::silence}) {
    auto it = edges.find(base);
    if (it == edges.end()) continue;
    EdgeList reversed;
    reversed.reserve(it->second.size());
    for (const Edge& e : it->second) reversed.push_back({e.dst, e.src});
    std::sort(reversed.begin(), reversed.end());
    edges[*inverse_of(base)] = std::move(reversed);
  }
  return edges;
}

}  // namespace scoregraph
