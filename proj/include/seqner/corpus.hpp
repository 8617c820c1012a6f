#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqner/rng.hpp"
#include "seqner/types.hpp"

namespace seqner::corpus {

struct LengthPercentiles {
  int p5 = 80;
  int p50 = 300;
  int p95 = 1600;
};

struct NoiseConfig {
  double char_sub_prob = 0.0;        // per character
  double interleave_prob = 0.0;      // per entity span
  double variant_prob = 0.0;         // per mention (initials / dropped middle)
  LengthPercentiles length_percentiles;
  double duplicate_mention_prob = 0.0;  // per party, repeats the name in the body
  uint64_t rng_seed = 1;

  // Throws ConfigError naming the offending field.
  void validate() const;

  static NoiseConfig desk_default();
  // Length distribution of the full-scale setting (kept for fidelity runs).
  static NoiseConfig paper_scale();
};

// Each character independently rewritten through a fixed OCR-style confusion
// table with the given probability. Digraph entries (rn <-> m) consume two
// positions on one draw.
std::string apply_char_noise(const std::string& token, double char_sub_prob, Rng& rng);

// Row-wise concatenation left_row ++ right_row, flattened. Shorter row lists
// are padded with empty rows.
std::vector<std::string> interleave_columns(const std::vector<std::vector<std::string>>& left,
                                            const std::vector<std::vector<std::string>>& right);

// One of: middle name -> initial, middle dropped, first -> initial.
// Single-part names are returned unchanged.
std::string make_name_variant(const std::string& surface, Rng& rng);

// Court-style identifier sampled from a small template inventory mixing
// digits, letters and {:, /, -}; length 8..14.
std::string generate_case_number(Rng& rng);

// Deterministic function of (config, n_docs); per-document RNG streams are
// derived from (seed, index) so generation parallelizes without ordering
// effects.
std::vector<Document> generate_corpus(const NoiseConfig& config, int n_docs, int threads = 1);

}  // namespace seqner::corpus
