/**
 * @file io.h
 * @brief Binary containers for graphs, batches, and encoder parameters.
 *
 * Each record is
 *
 *   bytes 0..3    magic "SGRC"
 *   bytes 4..7    uint32 format version (1)
 *   bytes 8..15   uint64 manifest length M
 *   M bytes       JSON manifest
 *   payload       sections listed in the manifest
 *
 * All integers are little-endian. Sections are int64 or float32 arrays laid
 * out row-major at the manifest's byte offsets (relative to the payload
 * start), each with its own CRC32. A batch file is a plain concatenation of
 * batch records.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "scoregraph/encoder.h"
#include "scoregraph/graph.h"
#include "scoregraph/sampler.h"

namespace scoregraph {

inline constexpr std::uint32_t kFormatVersion = 1;

std::vector<std::uint8_t> encode_graph(const ScoreGraph& graph);
ScoreGraph decode_graph(std::span<const std::uint8_t> bytes);
void write_graph_file(const ScoreGraph& graph, const std::filesystem::path& path);
ScoreGraph read_graph_file(const std::filesystem::path& path);

/// Sampling settings echoed into each batch manifest.
struct BatchEcho {
  SamplerConfig config;
  std::uint64_t draw_index = 0;
  bool operator==(const BatchEcho& o) const {
    return config.target_size == o.config.target_size &&
           config.batch_size == o.config.batch_size && config.fanouts == o.config.fanouts &&
           config.seed == o.config.seed && config.include_metrical == o.config.include_metrical &&
           draw_index == o.draw_index;
  }
};

struct StoredBatch {
  Batch batch;
  BatchEcho echo;
};

std::vector<std::uint8_t> encode_batch(const Batch& batch, const BatchEcho& echo);
void append_batch(std::ostream& out, const Batch& batch, const BatchEcho& echo);
std::vector<StoredBatch> decode_batches(std::span<const std::uint8_t> bytes);
std::vector<StoredBatch> read_batch_file(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_params(const EncoderParams& params);
EncoderParams decode_params(std::span<const std::uint8_t> bytes);
void write_params_file(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams read_params_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace scoregraph
