/**
 * @file encoder.h
 * @brief Reference heterogeneous SAGE-style encoder used to certify sampling.
 *
 * One layer computes, for every node v,
 *
 *   h'_v = act( W_self h_v + sum_r W_r mean_{u in N_r(v)} h_u )
 *
 * where N_r(v) are the sources of v's in-edges of relation r. Relations with
 * no in-edges contribute nothing. Storage is float32; every reduction
 * accumulates in double.
 */

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "scoregraph/edge_type.h"
#include "scoregraph/graph.h"
#include "scoregraph/matrix.h"
#include "scoregraph/rng.h"
#include "scoregraph/sampler.h"

namespace scoregraph {

enum class Activation : std::uint8_t { relu, identity };

struct EncoderDims {
  std::size_t input = kNoteFeatureDim;
  std::size_t hidden = 256;
  std::size_t layers = 3;
};

struct EncoderLayer {
  std::map<EdgeType, Matrix> relation_weights;  // each hidden x d_in
  Matrix self_weight;                           // hidden x d_in
  bool operator==(const EncoderLayer&) const = default;
};

struct EncoderParams {
  std::vector<EncoderLayer> layers;
  Activation activation = Activation::relu;

  std::size_t depth() const noexcept { return layers.size(); }
  bool operator==(const EncoderParams&) const = default;
};

/// Glorot-uniform weights for every relation in `relations`.
EncoderParams init_params(const EncoderDims& dims, Rng& rng,
                          std::span<const EdgeType> relations = kAllEdgeTypes,
                          Activation activation = Activation::relu);

/// Throws ShapeError when an edge endpoint exceeds h_in's rows, a relation has
/// no weight, or weight widths disagree with h_in.
Matrix sage_layer_forward(const EdgeMap& edges, const Matrix& h_in, const EncoderLayer& layer,
                          Activation activation);

/// Homogeneous view of a heterogeneous graph: notes first, then beats, then
/// measures, with every edge rewritten into that single id space.
struct MessageGraph {
  std::int64_t node_count = 0;
  std::int64_t beat_offset = 0;
  std::int64_t measure_offset = 0;
  EdgeMap edges;
  Matrix features;
};

MessageGraph flatten(const ScoreGraph& graph);
MessageGraph flatten(const Batch& batch);

/// Embeddings for every node of the graph.
Matrix encoder_forward(const EdgeMap& edges, const Matrix& x, const EncoderParams& params);
Matrix encoder_forward(const MessageGraph& graph, const EncoderParams& params);

/// Layered evaluation of a sampled subgraph of `graph`; returns one row per
/// target note in window order. Encoder layer j (0 = first applied) uses the
/// edges sampled in hops 0 .. depth-1-j plus any metrical edges. Throws
/// ConfigError when params.depth() differs from the number of sampled layers.
Matrix encoder_forward(const ScoreGraph& graph, const LayeredSubgraph& sub,
                       const EncoderParams& params);

/// Rows of a batch-level forward pass that belong to target notes, in
/// Batch::target_nodes order.
Matrix encode_batch_targets(const Batch& batch, const EncoderParams& params);

/// Replaces each row by the mean over rows sharing its onset.
Matrix onset_pool(const Matrix& embeddings, std::span<const Tick> onsets);

}  // namespace scoregraph
