#pragma once

#include <string>
#include <vector>

#include "seqner/types.hpp"

namespace seqner::align {

// All start positions (overlapping included, ascending) where pattern matches
// text exactly, token-wise. Linear-time failure-function search.
std::vector<int> kmp_find_all(const std::vector<std::string>& pattern,
                              const std::vector<std::string>& text);

struct AlignedExample {
  Document doc;
  std::vector<Tag> tags;       // parallel to doc.source_tokens, well-formed BILOU
  std::vector<bool> matched;   // per entity: found at least once by exact match
  std::vector<Span> spans;     // the non-overlapping occurrences that were tagged
};

// Locates every entity surface in the source by exact match over normalized
// tokens and tags all non-overlapping occurrences in BILOU. Overlaps between
// different entities are resolved earlier-start, then longer, then
// plaintiff-before-defendant.
AlignedExample align_entities(const Document& doc);

struct CoverageCurve {
  std::vector<int> grid;          // ascending token-length cutoffs
  std::vector<double> coverage;   // percent of entities aligned within each cutoff
};

CoverageCurve coverage_curve(const std::vector<Document>& corpus, const std::vector<int>& grid,
                             int threads = 1);

// Smallest grid point whose forward discrete slope (percent per token) drops
// to slope_threshold or below; the last grid point when none qualifies.
int select_cutoff(const CoverageCurve& curve, double slope_threshold);

void write_coverage_csv(const std::string& path, const CoverageCurve& curve);

std::string aligned_to_json_line(const AlignedExample& ex);

}  // namespace seqner::align
