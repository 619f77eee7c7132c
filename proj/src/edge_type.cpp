#include "scoregraph/edge_type.h"

namespace scoregraph {

namespace {

constexpr std::array<std::string_view, kEdgeTypeCount> kEdgeNames = {
    "onset",        "during",          "follow",           "silence",
    "during_rev",   "follow_rev",      "silence_rev",      "connect_beat",
    "connect_beat_rev", "next_beat",   "connect_measure",  "connect_measure_rev",
    "next_measure",
};

}  // namespace

std::string_view to_string(EdgeType type) noexcept {
  return kEdgeNames[static_cast<std::size_t>(type)];
}

std::string_view to_string(NodeType type) noexcept {
  switch (type) {
    case NodeType::note:
      return "note";
    case NodeType::beat:
      return "beat";
    case NodeType::measure:
      return "measure";
  }
  return "?";
}

std::optional<EdgeType> edge_type_from_string(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kEdgeNames.size(); ++i) {
    if (kEdgeNames[i] == name) return static_cast<EdgeType>(i);
  }
  return std::nullopt;
}

NodeType source_node_type(EdgeType type) noexcept {
  switch (type) {
    case EdgeType::connect_beat_rev:
    case EdgeType::next_beat:
      return NodeType::beat;
    case EdgeType::connect_measure_rev:
    case EdgeType::next_measure:
      return NodeType::measure;
    default:
      return NodeType::note;
  }
}

NodeType target_node_type(EdgeType type) noexcept {
  switch (type) {
    case EdgeType::connect_beat:
    case EdgeType::next_beat:
      return NodeType::beat;
    case EdgeType::connect_measure:
    case EdgeType::next_measure:
      return NodeType::measure;
    default:
      return NodeType::note;
  }
}

bool is_note_relation(EdgeType type) noexcept {
  return static_cast<std::uint8_t>(type) <= static_cast<std::uint8_t>(EdgeType::silence_rev);
}

std::optional<EdgeType> inverse_of(EdgeType type) noexcept {
  switch (type) {
    case EdgeType::during:
      return EdgeType::during_rev;
    case EdgeType::follow:
      return EdgeType::follow_rev;
    case EdgeType::silence:
      return EdgeType::silence_rev;
    default:
      return std::nullopt;
  }
}

}  // namespace scoregraph
