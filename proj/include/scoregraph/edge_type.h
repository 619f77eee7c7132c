/**
 * @file edge_type.h
 * @brief Node and edge type vocabulary of the heterogeneous score graph.
 */

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace scoregraph {

enum class NodeType : std::uint8_t { note, beat, measure };

enum class EdgeType : std::uint8_t {
  onset,
  during,
  follow,
  silence,
  during_rev,
  follow_rev,
  silence_rev,
  connect_beat,
  connect_beat_rev,
  next_beat,
  connect_measure,
  connect_measure_rev,
  next_measure,
};

inline constexpr std::size_t kEdgeTypeCount = 13;

inline constexpr std::array<EdgeType, kEdgeTypeCount> kAllEdgeTypes = {
    EdgeType::onset,           EdgeType::during,           EdgeType::follow,
    EdgeType::silence,         EdgeType::during_rev,       EdgeType::follow_rev,
    EdgeType::silence_rev,     EdgeType::connect_beat,     EdgeType::connect_beat_rev,
    EdgeType::next_beat,       EdgeType::connect_measure,  EdgeType::connect_measure_rev,
    EdgeType::next_measure,
};

inline constexpr std::array<EdgeType, 4> kBaseNoteEdgeTypes = {
    EdgeType::onset, EdgeType::during, EdgeType::follow, EdgeType::silence};

std::string_view to_string(EdgeType type) noexcept;
std::string_view to_string(NodeType type) noexcept;
std::optional<EdgeType> edge_type_from_string(std::string_view name) noexcept;

NodeType source_node_type(EdgeType type) noexcept;
NodeType target_node_type(EdgeType type) noexcept;

/// True for the seven note-to-note relations (base plus inverses).
bool is_note_relation(EdgeType type) noexcept;

/// Inverse relation for during/follow/silence; nullopt otherwise.
std::optional<EdgeType> inverse_of(EdgeType type) noexcept;

}  // namespace scoregraph
