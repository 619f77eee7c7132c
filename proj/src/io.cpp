/**
 * @file io.cpp
 * @brief Manifest + little-endian payload containers with per-section CRC32.
 */

#include "scoregraph/io.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>

#include <json.hpp>
#include <zlib.h>

#include "scoregraph/error.h"

namespace scoregraph {

namespace {

using nlohmann::json;

constexpr std::uint8_t kMagic[4] = {'S', 'G', 'R', 'C'};
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kAlign = 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large sections in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = crc32(crc, bytes.data() + pos, n);
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

class RecordWriter {
 public:
  void add_i64(const std::string& name, std::vector<std::int64_t> shape,
               std::span<const std::int64_t> values) {
    const std::size_t start = begin_section();
    for (std::int64_t v : values) put_u64(payload_, static_cast<std::uint64_t>(v));
    end_section(name, "int64", std::move(shape), start);
  }

  void add_f32(const std::string& name, const Matrix& m) {
    const std::size_t start = begin_section();
    for (float f : m.data()) put_u32(payload_, std::bit_cast<std::uint32_t>(f));
    end_section(name, "float32",
                {static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols())}, start);
  }

  void add_edges(const std::string& name, const EdgeList& edges) {
    std::vector<std::int64_t> flat;
    flat.reserve(edges.size() * 2);
    for (const Edge& e : edges) {
      flat.push_back(e.src);
      flat.push_back(e.dst);
    }
    add_i64(name, {static_cast<std::int64_t>(edges.size()), 2}, flat);
  }

  std::uint64_t offset_of(const std::string& name) const { return offsets_.at(name); }

  std::vector<std::uint8_t> finish(json manifest) {
    manifest["format_version"] = kFormatVersion;
    manifest["sections"] = sections_;
    manifest["payload_bytes"] = payload_.size();
    const std::string text = manifest.dump();
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_u32(out, kFormatVersion);
    put_u64(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), payload_.begin(), payload_.end());
    return out;
  }

 private:
  std::size_t begin_section() {
    while (payload_.size() % kAlign) payload_.push_back(0);
    return payload_.size();
  }
  void end_section(const std::string& name, const char* dtype, std::vector<std::int64_t> shape,
                   std::size_t start) {
    const std::size_t bytes = payload_.size() - start;
    offsets_[name] = start;
    sections_.push_back({{"name", name},
                         {"dtype", dtype},
                         {"shape", std::move(shape)},
                         {"offset", start},
                         {"bytes", bytes},
                         {"crc32", crc_of(std::span(payload_).subspan(start, bytes))}});
  }

  std::vector<std::uint8_t> payload_;
  json sections_ = json::array();
  std::map<std::string, std::uint64_t> offsets_;
};

struct SectionInfo {
  std::string dtype;
  std::vector<std::int64_t> shape;
  std::span<const std::uint8_t> data;
};

class RecordReader {
 public:
  /// Parses the record starting at bytes[0]; consumed() reports its length.
  explicit RecordReader(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes) throw FormatError("truncated record header");
    if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw FormatError("bad record magic");
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != kFormatVersion) {
      throw FormatError("unsupported format version " + std::to_string(version));
    }
    const std::uint64_t mlen = get_u64(bytes.data() + 8);
    if (mlen > bytes.size() - kHeaderBytes) throw FormatError("truncated manifest");
    const auto text = bytes.subspan(kHeaderBytes, mlen);
    try {
      manifest_ = json::parse(text.begin(), text.end());
      if (manifest_.at("format_version").get<std::uint32_t>() != kFormatVersion) {
        throw FormatError("manifest format version mismatch");
      }
      const auto payload_bytes = manifest_.at("payload_bytes").get<std::uint64_t>();
      if (payload_bytes > bytes.size() - kHeaderBytes - mlen) {
        throw FormatError("truncated payload");
      }
      payload_ = bytes.subspan(kHeaderBytes + mlen, payload_bytes);
      consumed_ = kHeaderBytes + mlen + payload_bytes;

      std::vector<std::pair<std::uint64_t, std::uint64_t>> extents;
      for (const auto& s : manifest_.at("sections")) {
        SectionInfo info;
        info.dtype = s.at("dtype").get<std::string>();
        info.shape = s.at("shape").get<std::vector<std::int64_t>>();
        const auto offset = s.at("offset").get<std::uint64_t>();
        const auto size = s.at("bytes").get<std::uint64_t>();
        if (offset > payload_.size() || size > payload_.size() - offset) {
          throw FormatError("section extends past payload");
        }
        std::uint64_t elements = 1;
        for (auto d : info.shape) {
          if (d < 0) throw FormatError("negative section dimension");
          elements *= static_cast<std::uint64_t>(d);
        }
        const std::uint64_t width = info.dtype == "int64" ? 8 : info.dtype == "float32" ? 4 : 0;
        if (width == 0) throw FormatError("unknown dtype " + info.dtype);
        if (elements * width != size) throw FormatError("section size does not match its shape");
        info.data = payload_.subspan(offset, size);
        if (crc_of(info.data) != s.at("crc32").get<std::uint32_t>()) {
          throw ChecksumError("checksum mismatch in section " + s.at("name").get<std::string>());
        }
        extents.emplace_back(offset, offset + size);
        sections_[s.at("name").get<std::string>()] = std::move(info);
      }
      std::sort(extents.begin(), extents.end());
      for (std::size_t i = 1; i < extents.size(); ++i) {
        if (extents[i].first < extents[i - 1].second) throw FormatError("sections overlap");
      }
    } catch (const json::exception& e) {
      throw FormatError(std::string("malformed manifest: ") + e.what());
    }
  }

  const json& manifest() const noexcept { return manifest_; }
  std::size_t consumed() const noexcept { return consumed_; }

  const SectionInfo& section(const std::string& name, const char* dtype) const {
    auto it = sections_.find(name);
    if (it == sections_.end()) throw FormatError("missing section " + name);
    if (it->second.dtype != dtype) throw FormatError("section " + name + " has wrong dtype");
    return it->second;
  }

  std::vector<std::int64_t> i64(const std::string& name, std::size_t cols = 1) const {
    const SectionInfo& s = section(name, "int64");
    const std::size_t want_rank = cols == 1 ? 1 : 2;
    if (s.shape.size() != want_rank ||
        (want_rank == 2 && s.shape[1] != static_cast<std::int64_t>(cols))) {
      throw FormatError("section " + name + " has unexpected shape");
    }
    std::vector<std::int64_t> out(s.data.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<std::int64_t>(get_u64(s.data.data() + 8 * i));
    }
    return out;
  }

  EdgeList edges(const std::string& name) const {
    const auto flat = i64(name, 2);
    EdgeList out(flat.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {flat[2 * i], flat[2 * i + 1]};
    return out;
  }

  Matrix f32(const std::string& name) const {
    const SectionInfo& s = section(name, "float32");
    if (s.shape.size() != 2) throw FormatError("section " + name + " is not a matrix");
    std::vector<float> values(s.data.size() / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = std::bit_cast<float>(get_u32(s.data.data() + 4 * i));
    }
    return Matrix(static_cast<std::size_t>(s.shape[0]), static_cast<std::size_t>(s.shape[1]),
                  std::move(values));
  }

 private:
  json manifest_;
  std::span<const std::uint8_t> payload_;
  std::map<std::string, SectionInfo> sections_;
  std::size_t consumed_ = 0;
};

std::string edge_section(EdgeType type) { return "edges/" + std::string(to_string(type)); }

json node_counts(std::int64_t notes, std::int64_t beats, std::int64_t measures) {
  return {{"note", notes}, {"beat", beats}, {"measure", measures}};
}

void write_edge_sections(RecordWriter& w, const EdgeMap& edges, json& manifest) {
  json table = json::array();
  for (const auto& [type, list] : edges) w.add_edges(edge_section(type), list);
  for (const auto& [type, list] : edges) {
    table.push_back({{"type", to_string(type)},
                     {"count", list.size()},
                     {"offset", w.offset_of(edge_section(type))}});
  }
  manifest["edge_types"] = std::move(table);
}

EdgeMap read_edge_sections(const RecordReader& r, const std::int64_t counts[3]) {
  EdgeMap edges;
  for (const auto& entry : r.manifest().at("edge_types")) {
    const auto name = entry.at("type").get<std::string>();
    const auto type = edge_type_from_string(name);
    if (!type) throw FormatError("unknown edge type " + name);
    EdgeList list = r.edges(edge_section(*type));
    if (list.size() != entry.at("count").get<std::size_t>()) {
      throw FormatError("edge count mismatch for " + name);
    }
    const auto src_max = counts[static_cast<int>(source_node_type(*type))];
    const auto dst_max = counts[static_cast<int>(target_node_type(*type))];
    for (const Edge& e : list) {
      if (e.src < 0 || e.src >= src_max || e.dst < 0 || e.dst >= dst_max) {
        throw FormatError("edge endpoint out of range in " + name);
      }
    }
    edges[*type] = std::move(list);
  }
  return edges;
}

std::vector<std::int64_t> spans_flat(const std::vector<TimeSpan>& spans) {
  std::vector<std::int64_t> flat;
  for (const auto& s : spans) {
    flat.push_back(s.start);
    flat.push_back(s.end);
  }
  return flat;
}

std::vector<TimeSpan> spans_from(const std::vector<std::int64_t>& flat) {
  std::vector<TimeSpan> out;
  for (std::size_t i = 0; i + 1 < flat.size(); i += 2) out.push_back({flat[i], flat[i + 1]});
  return out;
}

void expect_kind(const RecordReader& r, const char* kind) {
  const auto actual = r.manifest().at("kind").get<std::string>();
  if (actual != kind) throw FormatError("expected a " + std::string(kind) + " record, got " + actual);
}

void expect_whole(const RecordReader& r, std::span<const std::uint8_t> bytes) {
  if (r.consumed() != bytes.size()) throw FormatError("trailing bytes after record");
}

void expect_rows(const Matrix& m, std::int64_t rows, const char* what) {
  if (static_cast<std::int64_t>(m.rows()) != rows) {
    throw FormatError(std::string(what) + " row count does not match node count");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_graph(const ScoreGraph& graph) {
  RecordWriter w;
  json manifest;
  manifest["kind"] = "graph";
  manifest["source_name"] = graph.source_name;
  manifest["divisions_per_quarter"] = graph.divisions_per_quarter;
  manifest["feature_dim"] = graph.feature_dim();
  manifest["options"] = {{"inverse_edges", graph.options.inverse_edges},
                         {"metrical", graph.options.metrical}};
  manifest["node_counts"] = node_counts(graph.note_count, graph.beat_count, graph.measure_count);
  write_edge_sections(w, graph.edges, manifest);
  w.add_f32("features/note", graph.note_features);
  w.add_i64("note_onsets", {graph.note_count}, graph.note_onsets);
  const std::vector<std::int64_t> pitches(graph.note_pitches.begin(), graph.note_pitches.end());
  w.add_i64("note_pitches", {graph.note_count}, pitches);
  if (graph.options.metrical) {
    w.add_f32("features/beat", graph.beat_features);
    w.add_f32("features/measure", graph.measure_features);
    w.add_i64("beat_spans", {graph.beat_count, 2}, spans_flat(graph.beat_spans));
    w.add_i64("measure_spans", {graph.measure_count, 2}, spans_flat(graph.measure_spans));
  }
  return w.finish(std::move(manifest));
}

ScoreGraph decode_graph(std::span<const std::uint8_t> bytes) {
  RecordReader r(bytes);
  expect_kind(r, "graph");
  expect_whole(r, bytes);
  const json& m = r.manifest();
  try {
    ScoreGraph g;
    g.source_name = m.at("source_name").get<std::string>();
    g.divisions_per_quarter = m.at("divisions_per_quarter").get<int>();
    g.options.inverse_edges = m.at("options").at("inverse_edges").get<bool>();
    g.options.metrical = m.at("options").at("metrical").get<bool>();
    g.note_count = m.at("node_counts").at("note").get<std::int64_t>();
    g.beat_count = m.at("node_counts").at("beat").get<std::int64_t>();
    g.measure_count = m.at("node_counts").at("measure").get<std::int64_t>();
    const std::int64_t counts[3] = {g.note_count, g.beat_count, g.measure_count};
    g.edges = read_edge_sections(r, counts);
    g.note_features = r.f32("features/note");
    expect_rows(g.note_features, g.note_count, "note features");
    g.note_onsets = r.i64("note_onsets");
    const auto pitches = r.i64("note_pitches");
    g.note_pitches.assign(pitches.begin(), pitches.end());
    if (g.options.metrical) {
      g.beat_features = r.f32("features/beat");
      g.measure_features = r.f32("features/measure");
      expect_rows(g.beat_features, g.beat_count, "beat features");
      expect_rows(g.measure_features, g.measure_count, "measure features");
      g.beat_spans = spans_from(r.i64("beat_spans", 2));
      g.measure_spans = spans_from(r.i64("measure_spans", 2));
    }
    if (static_cast<std::int64_t>(g.note_onsets.size()) != g.note_count ||
        static_cast<std::int64_t>(g.note_pitches.size()) != g.note_count ||
        static_cast<std::int64_t>(g.beat_spans.size()) != g.beat_count ||
        static_cast<std::int64_t>(g.measure_spans.size()) != g.measure_count) {
      throw FormatError("array lengths do not match node counts");
    }
    g.rebuild_index();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed graph manifest: ") + e.what());
  }
}

void write_graph_file(const ScoreGraph& graph, const std::filesystem::path& path) {
  write_file_bytes(path, encode_graph(graph));
}

ScoreGraph read_graph_file(const std::filesystem::path& path) {
  return decode_graph(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_batch(const Batch& batch, const BatchEcho& echo) {
  RecordWriter w;
  json manifest;
  manifest["kind"] = "batch";
  manifest["feature_dim"] = batch.note_features.cols();
  manifest["node_counts"] = node_counts(batch.note_count, batch.beat_count, batch.measure_count);
  manifest["total_targets"] = batch.total_targets();
  manifest["score_count"] = batch.records.size();
  manifest["config"] = {{"target_size", echo.config.target_size},
                        {"batch_size", echo.config.batch_size},
                        {"fanouts", echo.config.fanouts},
                        {"seed", echo.config.seed},
                        {"include_metrical", echo.config.include_metrical},
                        {"draw_index", echo.draw_index}};
  write_edge_sections(w, batch.edges, manifest);
  w.add_f32("features/note", batch.note_features);
  w.add_f32("features/beat", batch.beat_features);
  w.add_f32("features/measure", batch.measure_features);
  w.add_i64("note_onsets", {batch.note_count}, batch.note_onsets);
  const std::vector<std::int64_t> pitches(batch.note_pitches.begin(), batch.note_pitches.end());
  w.add_i64("note_pitches", {batch.note_count}, pitches);
  w.add_i64("source_note_ids", {batch.note_count}, batch.source_note_ids);
  w.add_i64("source_beat_ids", {batch.beat_count}, batch.source_beat_ids);
  w.add_i64("source_measure_ids", {batch.measure_count}, batch.source_measure_ids);
  w.add_i64("target_nodes", {batch.total_targets()}, batch.target_nodes);
  std::vector<std::int64_t> records;
  for (const ScoreRecord& r : batch.records) {
    records.insert(records.end(), {r.score_index, r.target_offset, r.target_count, r.note_offset,
                                   r.note_count, r.beat_offset, r.beat_count, r.measure_offset,
                                   r.measure_count});
  }
  w.add_i64("records", {static_cast<std::int64_t>(batch.records.size()), 9}, records);
  return w.finish(std::move(manifest));
}

void append_batch(std::ostream& out, const Batch& batch, const BatchEcho& echo) {
  const auto bytes = encode_batch(batch, echo);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed to write batch record");
}

std::vector<StoredBatch> decode_batches(std::span<const std::uint8_t> bytes) {
  std::vector<StoredBatch> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    RecordReader r(bytes.subspan(pos));
    pos += r.consumed();
    expect_kind(r, "batch");
    const json& m = r.manifest();
    try {
      StoredBatch s;
      const json& c = m.at("config");
      s.echo.config.target_size = c.at("target_size").get<std::int64_t>();
      s.echo.config.batch_size = c.at("batch_size").get<std::int64_t>();
      s.echo.config.fanouts = c.at("fanouts").get<std::vector<std::int64_t>>();
      s.echo.config.seed = c.at("seed").get<std::uint64_t>();
      s.echo.config.include_metrical = c.at("include_metrical").get<bool>();
      s.echo.draw_index = c.at("draw_index").get<std::uint64_t>();

      Batch& b = s.batch;
      b.note_count = m.at("node_counts").at("note").get<std::int64_t>();
      b.beat_count = m.at("node_counts").at("beat").get<std::int64_t>();
      b.measure_count = m.at("node_counts").at("measure").get<std::int64_t>();
      const std::int64_t counts[3] = {b.note_count, b.beat_count, b.measure_count};
      b.edges = read_edge_sections(r, counts);
      b.note_features = r.f32("features/note");
      b.beat_features = r.f32("features/beat");
      b.measure_features = r.f32("features/measure");
      expect_rows(b.note_features, b.note_count, "note features");
      expect_rows(b.beat_features, b.beat_count, "beat features");
      expect_rows(b.measure_features, b.measure_count, "measure features");
      b.note_onsets = r.i64("note_onsets");
      const auto pitches = r.i64("note_pitches");
      b.note_pitches.assign(pitches.begin(), pitches.end());
      b.source_note_ids = r.i64("source_note_ids");
      b.source_beat_ids = r.i64("source_beat_ids");
      b.source_measure_ids = r.i64("source_measure_ids");
      b.target_nodes = r.i64("target_nodes");
      const auto rec = r.i64("records", 9);
      for (std::size_t i = 0; i + 8 < rec.size(); i += 9) {
        b.records.push_back({rec[i], rec[i + 1], rec[i + 2], rec[i + 3], rec[i + 4], rec[i + 5],
                             rec[i + 6], rec[i + 7], rec[i + 8]});
      }
      for (NodeId t : b.target_nodes) {
        if (t < 0 || t >= b.note_count) throw FormatError("target node out of range");
      }
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed batch manifest: ") + e.what());
    }
  }
  return out;
}

std::vector<StoredBatch> read_batch_file(const std::filesystem::path& path) {
  return decode_batches(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_params(const EncoderParams& params) {
  RecordWriter w;
  json manifest;
  manifest["kind"] = "params";
  manifest["activation"] = params.activation == Activation::relu ? "relu" : "identity";
  json layers = json::array();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const EncoderLayer& layer = params.layers[l];
    const std::string prefix = "layers/" + std::to_string(l) + "/";
    json relations = json::array();
    w.add_f32(prefix + "self", layer.self_weight);
    for (const auto& [type, weight] : layer.relation_weights) {
      w.add_f32(prefix + std::string(to_string(type)), weight);
      relations.push_back(to_string(type));
    }
    layers.push_back({{"relations", std::move(relations)},
                      {"d_out", layer.self_weight.rows()},
                      {"d_in", layer.self_weight.cols()}});
  }
  manifest["layers"] = std::move(layers);
  return w.finish(std::move(manifest));
}

EncoderParams decode_params(std::span<const std::uint8_t> bytes) {
  RecordReader r(bytes);
  expect_whole(r, bytes);
  expect_kind(r, "params");
  try {
    EncoderParams params;
    const auto act = r.manifest().at("activation").get<std::string>();
    if (act != "relu" && act != "identity") throw FormatError("unknown activation " + act);
    params.activation = act == "relu" ? Activation::relu : Activation::identity;
    const auto& layers = r.manifest().at("layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string prefix = "layers/" + std::to_string(l) + "/";
      EncoderLayer layer;
      layer.self_weight = r.f32(prefix + "self");
      for (const auto& name : layers[l].at("relations")) {
        const auto type = edge_type_from_string(name.get<std::string>());
        if (!type) throw FormatError("unknown relation in params");
        layer.relation_weights[*type] = r.f32(prefix + name.get<std::string>());
      }
      params.layers.push_back(std::move(layer));
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed params manifest: ") + e.what());
  }
}

void write_params_file(const EncoderParams& params, const std::filesystem::path& path) {
  write_file_bytes(path, encode_params(params));
}

EncoderParams read_params_file(const std::filesystem::path& path) {
  return decode_params(read_file_bytes(path));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace scoregraph
