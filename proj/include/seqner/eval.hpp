#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "seqner/types.hpp"

namespace seqner::eval {

// Case-fold, strip punctuation, collapse whitespace runs, trim. Idempotent.
std::string normalize(const std::string& surface);

struct LabelCounts {
  long long relevant = 0;
  long long retrieved = 0;
  long long intersection = 0;
};

struct EntitySetMetrics {
  double precision = 0.0;  // percentages in [0, 100]
  double recall = 0.0;
  double f1 = 0.0;
  LabelCounts counts;
  std::map<std::string, LabelCounts> per_label;
};

// Micro-averaged set precision/recall/F1 over (label, normalized surface)
// pairs. predicted and gold are parallel per-document entity lists; ids are
// checked for agreement.
EntitySetMetrics entity_prf(const std::vector<std::string>& pred_ids,
                            const std::vector<std::vector<Entity>>& predicted,
                            const std::vector<std::string>& gold_ids,
                            const std::vector<std::vector<Entity>>& gold);

std::string metrics_to_json(const EntitySetMetrics& m);

// Unit-cost insert/delete/substitute edit distance.
size_t levenshtein(const std::string& a, const std::string& b);

struct ToleranceCurve {
  std::vector<int> tolerance;   // 0..k_max
  std::vector<double> accuracy; // fraction in [0, 1], non-decreasing
};

ToleranceCurve tolerance_curve(const std::vector<std::string>& predictions,
                               const std::vector<std::string>& truths,
                               int k_max);

void write_tolerance_csv(const std::string& path, const ToleranceCurve& curve);

// One emitted decode step, as recorded by the beam search.
struct StepTrace {
  double p_gen = 1.0;
  double p_vocab = 0.0;    // generator probability of the emitted token
  double copy_mass = 0.0;  // attention mass over source copies of the emitted token
  bool marker = false;     // label-marker tokens are excluded from the copy rate
};

// Fraction of emitted non-marker tokens whose copy component outweighs the
// generator component.
double copy_rate(const std::vector<std::vector<StepTrace>>& traces);

}  // namespace seqner::eval
