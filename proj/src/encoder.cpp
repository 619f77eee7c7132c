/**
 * @file encoder.cpp
 * @brief Reference message-passing forward passes and onset pooling.
 */

#include "scoregraph/encoder.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "scoregraph/error.h"

namespace scoregraph {

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (float& w : m.data()) w = static_cast<float>((2.0 * rng.uniform_real() - 1.0) * a);
  return m;
}

void check_weight(const Matrix& w, std::size_t dout, std::size_t din, const char* what) {
  if (w.rows() != dout || w.cols() != din) {
    throw ShapeError(std::string(what) + " weight is " + std::to_string(w.rows()) + "x" +
                     std::to_string(w.cols()) + ", expected " + std::to_string(dout) + "x" +
                     std::to_string(din));
  }
}

// acc[o] += sum_i w(o, i) * x[i]
void add_matvec(const Matrix& w, const double* x, double* acc) {
  for (std::size_t o = 0; o < w.rows(); ++o) {
    const auto row = w.row(o);
    double s = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) s += static_cast<double>(row[i]) * x[i];
    acc[o] += s;
  }
}

void append_edges(EdgeMap& dst, const EdgeMap& src) {
  for (const auto& [type, list] : src) {
    auto& out = dst[type];
    out.insert(out.end(), list.begin(), list.end());
  }
}

}  // namespace

EncoderParams init_params(const EncoderDims& dims, Rng& rng, std::span<const EdgeType> relations,
                          Activation activation) {
  if (dims.input == 0 || dims.hidden == 0 || dims.layers == 0) {
    throw ShapeError("encoder dimensions must be positive");
  }
  EncoderParams params;
  params.activation = activation;
  for (std::size_t l = 0; l < dims.layers; ++l) {
    const std::size_t din = l == 0 ? dims.input : dims.hidden;
    EncoderLayer layer;
    for (EdgeType r : relations) layer.relation_weights[r] = glorot(dims.hidden, din, rng);
    layer.self_weight = glorot(dims.hidden, din, rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Matrix sage_layer_forward(const EdgeMap& edges, const Matrix& h_in, const EncoderLayer& layer,
                          Activation activation) {
  const std::size_t n = h_in.rows();
  const std::size_t din = h_in.cols();
  const std::size_t dout = layer.self_weight.rows();
  check_weight(layer.self_weight, dout, din, "self");

  std::vector<double> acc(n * dout, 0.0);
  std::vector<double> x(din);
  for (std::size_t v = 0; v < n; ++v) {
    const auto row = h_in.row(v);
    std::copy(row.begin(), row.end(), x.begin());
    add_matvec(layer.self_weight, x.data(), acc.data() + v * dout);
  }

  std::vector<double> agg;
  std::vector<std::int64_t> count;
  for (const auto& [type, list] : edges) {
    if (list.empty()) continue;
    auto w = layer.relation_weights.find(type);
    if (w == layer.relation_weights.end()) {
      throw ShapeError("no weight for relation " + std::string(to_string(type)));
    }
    check_weight(w->second, dout, din, to_string(type).data());

    agg.assign(n * din, 0.0);
    count.assign(n, 0);
    for (const Edge& e : list) {
      if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= n ||
          static_cast<std::size_t>(e.dst) >= n) {
        throw ShapeError("edge endpoint outside the feature matrix");
      }
      const auto src = h_in.row(static_cast<std::size_t>(e.src));
      double* dst = agg.data() + static_cast<std::size_t>(e.dst) * din;
      for (std::size_t i = 0; i < din; ++i) dst[i] += src[i];
      ++count[static_cast<std::size_t>(e.dst)];
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (count[v] == 0) continue;
      double* mean = agg.data() + v * din;
      for (std::size_t i = 0; i < din; ++i) mean[i] /= static_cast<double>(count[v]);
      add_matvec(w->second, mean, acc.data() + v * dout);
    }
  }

  Matrix out(n, dout);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double value = activation == Activation::relu ? std::max(acc[i], 0.0) : acc[i];
    out.data()[i] = static_cast<float>(value);
  }
  return out;
}

MessageGraph flatten(const ScoreGraph& graph) {
  MessageGraph mg;
  mg.beat_offset = graph.note_count;
  mg.measure_offset = graph.note_count + graph.beat_count;
  mg.node_count = mg.measure_offset + graph.measure_count;
  auto offset = [&](NodeType t) {
    return t == NodeType::note ? 0 : t == NodeType::beat ? mg.beat_offset : mg.measure_offset;
  };
  for (const auto& [type, list] : graph.edges) {
    auto& out = mg.edges[type];
    const NodeId so = offset(source_node_type(type));
    const NodeId dof = offset(target_node_type(type));
    out.reserve(list.size());
    for (const Edge& e : list) out.push_back({e.src + so, e.dst + dof});
  }
  const std::size_t k = graph.feature_dim();
  std::vector<float> rows = graph.note_features.data();
  if (graph.beat_count) {
    rows.insert(rows.end(), graph.beat_features.data().begin(), graph.beat_features.data().end());
  }
  if (graph.measure_count) {
    rows.insert(rows.end(), graph.measure_features.data().begin(),
                graph.measure_features.data().end());
  }
  mg.features = Matrix(static_cast<std::size_t>(mg.node_count), k, std::move(rows));
  return mg;
}

MessageGraph flatten(const Batch& batch) {
  MessageGraph mg;
  mg.beat_offset = batch.note_count;
  mg.measure_offset = batch.note_count + batch.beat_count;
  mg.node_count = mg.measure_offset + batch.measure_count;
  auto offset = [&](NodeType t) {
    return t == NodeType::note ? 0 : t == NodeType::beat ? mg.beat_offset : mg.measure_offset;
  };
  for (const auto& [type, list] : batch.edges) {
    auto& out = mg.edges[type];
    const NodeId so = offset(source_node_type(type));
    const NodeId dof = offset(target_node_type(type));
    for (const Edge& e : list) out.push_back({e.src + so, e.dst + dof});
  }
  std::vector<float> rows = batch.note_features.data();
  rows.insert(rows.end(), batch.beat_features.data().begin(), batch.beat_features.data().end());
  rows.insert(rows.end(), batch.measure_features.data().begin(),
              batch.measure_features.data().end());
  mg.features = Matrix(static_cast<std::size_t>(mg.node_count), batch.note_features.cols(),
                       std::move(rows));
  return mg;
}

Matrix encoder_forward(const EdgeMap& edges, const Matrix& x, const EncoderParams& params) {
  Matrix h = x;
  for (const EncoderLayer& layer : params.layers) {
    h = sage_layer_forward(edges, h, layer, params.activation);
  }
  return h;
}

Matrix encoder_forward(const MessageGraph& graph, const EncoderParams& params) {
  return encoder_forward(graph.edges, graph.features, params);
}

Matrix encoder_forward(const ScoreGraph& graph, const LayeredSubgraph& sub,
                       const EncoderParams& params) {
  const std::size_t depth = sub.layer_edges.size();
  if (params.depth() != depth) {
    throw ConfigError("encoder depth " + std::to_string(params.depth()) +
                      " does not match sampled layer count " + std::to_string(depth));
  }

  // Local ids: sampled notes, then beats, then measures.
  const auto notes = static_cast<NodeId>(sub.node_set.size());
  const auto beats = static_cast<NodeId>(sub.beat_ids.size());
  auto local = [&](NodeType type, NodeId id) -> NodeId {
    const auto& ids = type == NodeType::note   ? sub.node_set
                      : type == NodeType::beat ? sub.beat_ids
                                               : sub.measure_ids;
    const NodeId base = type == NodeType::note ? 0 : type == NodeType::beat ? notes : notes + beats;
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) throw InternalError("subgraph edge endpoint not in node set");
    return base + static_cast<NodeId>(it - ids.begin());
  };
  auto relabel = [&](const EdgeMap& edges) {
    EdgeMap out;
    for (const auto& [type, list] : edges) {
      auto& dst = out[type];
      for (const Edge& e : list) {
        dst.push_back({local(source_node_type(type), e.src), local(target_node_type(type), e.dst)});
      }
    }
    return out;
  };

  std::vector<EdgeMap> hops;
  for (const EdgeMap& layer : sub.layer_edges) hops.push_back(relabel(layer));
  const EdgeMap metrical = relabel(sub.metrical_edges);

  const std::size_t k = graph.feature_dim();
  std::vector<float> rows;
  auto gather = [&](const Matrix& src, const std::vector<NodeId>& ids) {
    for (NodeId id : ids) {
      const auto row = src.row(static_cast<std::size_t>(id));
      rows.insert(rows.end(), row.begin(), row.end());
    }
  };
  gather(graph.note_features, sub.node_set);
  gather(graph.beat_features, sub.beat_ids);
  gather(graph.measure_features, sub.measure_ids);
  Matrix h(sub.node_set.size() + sub.beat_ids.size() + sub.measure_ids.size(), k, std::move(rows));

  for (std::size_t j = 0; j < depth; ++j) {
    EdgeMap edges = metrical;
    for (std::size_t hop = 0; hop < depth - j; ++hop) append_edges(edges, hops[hop]);
    h = sage_layer_forward(edges, h, params.layers[j], params.activation);
  }

  Matrix out(static_cast<std::size_t>(sub.targets.size()), h.cols());
  for (NodeId t = sub.targets.lo; t < sub.targets.hi; ++t) {
    const auto row = h.row(static_cast<std::size_t>(local(NodeType::note, t)));
    std::copy(row.begin(), row.end(), out.row(static_cast<std::size_t>(t - sub.targets.lo)).begin());
  }
  return out;
}

Matrix encode_batch_targets(const Batch& batch, const EncoderParams& params) {
  const Matrix h = encoder_forward(flatten(batch), params);
  Matrix out(batch.target_nodes.size(), h.cols());
  for (std::size_t i = 0; i < batch.target_nodes.size(); ++i) {
    const auto row = h.row(static_cast<std::size_t>(batch.target_nodes[i]));
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

Matrix onset_pool(const Matrix& embeddings, std::span<const Tick> onsets) {
  if (embeddings.rows() != onsets.size()) {
    throw ShapeError("onset_pool: " + std::to_string(embeddings.rows()) + " rows but " +
                     std::to_string(onsets.size()) + " onsets");
  }
  const std::size_t d = embeddings.cols();
  std::map<Tick, std::pair<std::vector<double>, std::int64_t>> groups;
  for (std::size_t r = 0; r < onsets.size(); ++r) {
    auto& [sum, count] = groups[onsets[r]];
    sum.resize(d, 0.0);
    const auto row = embeddings.row(r);
    for (std::size_t c = 0; c < d; ++c) sum[c] += row[c];
    ++count;
  }
  Matrix out(embeddings.rows(), d);
  for (std::size_t r = 0; r < onsets.size(); ++r) {
    const auto& [sum, count] = groups[onsets[r]];
    for (std::size_t c = 0; c < d; ++c) {
      out(r, c) = static_cast<float>(sum[c] / static_cast<double>(count));
    }
  }
  return out;
}

}  // namespace scoregraph
