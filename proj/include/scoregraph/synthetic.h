/**
 * @file synthetic.h
 * @brief Random score generator for tests and benchmarks.
 */

#pragma once

#include <cstddef>

#include "scoregraph/rng.h"
#include "scoregraph/score.h"

namespace scoregraph {

struct SyntheticOptions {
  int divisions_per_quarter = 4;
  int max_chord = 4;
  /// Probability that a note has zero duration (grace-note like).
  double zero_duration_rate = 0.05;
  /// Probability of a rest before the next onset cluster.
  double rest_rate = 0.1;
  /// Add occasional 3/4 and 6/8 changes to the default 4/4.
  bool meter_changes = true;
};

/// Score with `notes` notes in onset clusters ("chords") advancing through
/// time at a density independent of `notes`. Returned sorted.
Score make_synthetic_score(std::size_t notes, Rng& rng, const SyntheticOptions& options = {});

}  // namespace scoregraph
