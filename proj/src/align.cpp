#include "seqner/align.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "seqner/error.hpp"
#include "seqner/eval.hpp"
#include "seqner/textproc.hpp"
#include "seqner/threadpool.hpp"

namespace seqner::align {

std::vector<int> kmp_find_all(const std::vector<std::string>& pattern,
                              const std::vector<std::string>& text) {
  if (pattern.empty()) throw ArgumentError("kmp_find_all: empty pattern");
  const int m = static_cast<int>(pattern.size());
  const int n = static_cast<int>(text.size());
  std::vector<int> hits;
  if (n < m) return hits;

  // failure[i] = length of the longest proper prefix of pattern[0..i] that is
  // also a suffix of it
  std::vector<int> failure(m, 0);
  for (int i = 1, k = 0; i < m; ++i) {
    while (k > 0 && pattern[i] != pattern[k]) k = failure[k - 1];
    if (pattern[i] == pattern[k]) ++k;
    failure[i] = k;
  }

  for (int i = 0, k = 0; i < n; ++i) {
    while (k > 0 && text[i] != pattern[k]) k = failure[k - 1];
    if (text[i] == pattern[k]) ++k;
    if (k == m) {
      hits.push_back(i - m + 1);
      k = failure[k - 1];  // continue, overlaps allowed
    }
  }
  return hits;
}

namespace {

std::vector<std::string> normalized_pattern(const std::string& surface) {
  std::vector<std::string> out;
  for (const std::string& w : textproc::tokenize_words(surface)) {
    std::string norm = eval::normalize(w);
    if (!norm.empty()) out.push_back(std::move(norm));
  }
  return out;
}

struct Candidate {
  int start;
  int len;
  int entity;
  EntityLabel label;
};

}  // namespace

AlignedExample align_entities(const Document& doc) {
  AlignedExample ex;
  ex.doc = doc;
  const int n = static_cast<int>(doc.source_tokens.size());
  ex.tags.assign(n, Tag{Chunk::O, EntityLabel::plaintiff});
  ex.matched.assign(doc.entities.size(), false);

  std::vector<std::string> text(n);
  for (int i = 0; i < n; ++i) text[i] = eval::normalize(doc.source_tokens[i]);

  std::vector<Candidate> candidates;
  for (size_t e = 0; e < doc.entities.size(); ++e) {
    std::vector<std::string> pattern = normalized_pattern(doc.entities[e].surface);
    if (pattern.empty()) continue;
    std::vector<int> hits = kmp_find_all(pattern, text);
    if (!hits.empty()) ex.matched[e] = true;
    for (int start : hits)
      candidates.push_back(Candidate{start, static_cast<int>(pattern.size()),
                                     static_cast<int>(e), doc.entities[e].label});
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.len != b.len) return a.len > b.len;
    if (a.label != b.label) return static_cast<int>(a.label) < static_cast<int>(b.label);
    return a.entity < b.entity;
  });

  std::vector<bool> taken(n, false);
  for (const Candidate& c : candidates) {
    bool free = true;
    for (int i = c.start; i < c.start + c.len; ++i)
      if (taken[i]) {
        free = false;
        break;
      }
    if (!free) continue;
    for (int i = c.start; i < c.start + c.len; ++i) taken[i] = true;
    ex.spans.push_back(Span{c.start, c.start + c.len - 1, c.label});
  }
  std::sort(ex.spans.begin(), ex.spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  ex.tags = bilou_spans_to_tags(n, ex.spans);
  return ex;
}

CoverageCurve coverage_curve(const std::vector<Document>& corpus, const std::vector<int>& grid,
                             int threads) {
  if (corpus.empty()) throw ArgumentError("coverage_curve: empty corpus");
  if (grid.empty()) throw ArgumentError("coverage_curve: empty grid");
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] <= 0) throw ArgumentError("coverage_curve: grid values must be positive");
    if (i > 0 && grid[i] <= grid[i - 1]) throw ArgumentError("coverage_curve: grid must ascend");
  }

  // per document: for each entity, the smallest cutoff that fully contains a
  // match (or INT_MAX when unmatched anywhere)
  std::vector<std::vector<int>> first_fit(corpus.size());
  parallel_for(corpus.size(), threads, [&](size_t d) {
    const Document& doc = corpus[d];
    std::vector<std::string> text(doc.source_tokens.size());
    for (size_t i = 0; i < text.size(); ++i) text[i] = eval::normalize(doc.source_tokens[i]);
    std::vector<int> fits;
    for (const Entity& ent : doc.entities) {
      std::vector<std::string> pattern = normalized_pattern(ent.surface);
      int best = std::numeric_limits<int>::max();
      if (!pattern.empty()) {
        std::vector<int> hits = kmp_find_all(pattern, text);
        if (!hits.empty()) best = hits.front() + static_cast<int>(pattern.size());
      }
      fits.push_back(best);
    }
    first_fit[d] = std::move(fits);
  });

  long long total = 0;
  for (const auto& fits : first_fit) total += static_cast<long long>(fits.size());
  CoverageCurve curve;
  curve.grid = grid;
  for (int g : grid) {
    long long covered = 0;
    for (const auto& fits : first_fit)
      for (int f : fits)
        if (f <= g) ++covered;
    curve.coverage.push_back(total > 0 ? 100.0 * covered / total : 0.0);
  }
  return curve;
}

int select_cutoff(const CoverageCurve& curve, double slope_threshold) {
  if (curve.grid.size() < 2) throw ArgumentError("select_cutoff: need at least two grid points");
  for (size_t i = 0; i + 1 < curve.grid.size(); ++i) {
    double slope = (curve.coverage[i + 1] - curve.coverage[i]) /
                   static_cast<double>(curve.grid[i + 1] - curve.grid[i]);
    if (slope <= slope_threshold) return curve.grid[i];
  }
  return curve.grid.back();
}

void write_coverage_csv(const std::string& path, const CoverageCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "cutoff,coverage_pct\n";
  for (size_t i = 0; i < curve.grid.size(); ++i)
    out << curve.grid[i] << ',' << curve.coverage[i] << '\n';
}

std::string aligned_to_json_line(const AlignedExample& ex) {
  nlohmann::json j;
  j["id"] = ex.doc.id;
  j["source_tokens"] = ex.doc.source_tokens;
  std::vector<std::string> tags;
  tags.reserve(ex.tags.size());
  for (const Tag& t : ex.tags) tags.push_back(to_string(t));
  j["tags"] = std::move(tags);
  std::vector<int> matched;
  for (bool m : ex.matched) matched.push_back(m ? 1 : 0);
  j["matched"] = std::move(matched);
  return j.dump();
}

}  // namespace seqner::align
