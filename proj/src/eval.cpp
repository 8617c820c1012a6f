#include "seqner/eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "seqner/error.hpp"

namespace seqner::eval {

std::string normalize(const std::string& surface) {
  std::string out;
  out.reserve(surface.size());
  bool pending_space = false;
  for (unsigned char c : surface) {
    if (std::isspace(c)) {
      pending_space = true;
      continue;
    }
    if (std::ispunct(c)) continue;
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

using Item = std::pair<EntityLabel, std::string>;

std::set<Item> normalized_set(const std::vector<Entity>& entities) {
  std::set<Item> items;
  for (const Entity& e : entities) {
    std::string norm = normalize(e.surface);
    if (!norm.empty()) items.insert({e.label, std::move(norm)});
  }
  return items;
}

void finish(double& precision, double& recall, double& f1, const LabelCounts& c) {
  precision = c.retrieved > 0 ? 100.0 * c.intersection / c.retrieved : 0.0;
  recall = c.relevant > 0 ? 100.0 * c.intersection / c.relevant : 0.0;
  f1 = (precision + recall) > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

EntitySetMetrics entity_prf(const std::vector<std::string>& pred_ids,
                            const std::vector<std::vector<Entity>>& predicted,
                            const std::vector<std::string>& gold_ids,
                            const std::vector<std::vector<Entity>>& gold) {
  if (pred_ids.size() != predicted.size() || gold_ids.size() != gold.size() ||
      pred_ids.size() != gold_ids.size())
    throw ArgumentError("entity_prf: prediction/gold lists are not aligned");
  EntitySetMetrics m;
  for (size_t d = 0; d < gold.size(); ++d) {
    if (pred_ids[d] != gold_ids[d])
      throw ArgumentError("entity_prf: document id mismatch at index " + std::to_string(d) +
                          " (" + pred_ids[d] + " vs " + gold_ids[d] + ")");
    std::set<Item> retr = normalized_set(predicted[d]);
    std::set<Item> rel = normalized_set(gold[d]);
    for (const Item& it : rel) {
      m.counts.relevant++;
      m.per_label[to_string(it.first)].relevant++;
    }
    for (const Item& it : retr) {
      m.counts.retrieved++;
      m.per_label[to_string(it.first)].retrieved++;
      if (rel.count(it)) {
        m.counts.intersection++;
        m.per_label[to_string(it.first)].intersection++;
      }
    }
  }
  finish(m.precision, m.recall, m.f1, m.counts);
  return m;
}

std::string metrics_to_json(const EntitySetMetrics& m) {
  nlohmann::json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["counts"] = {{"relevant", m.counts.relevant},
                 {"retrieved", m.counts.retrieved},
                 {"intersection", m.counts.intersection}};
  nlohmann::json per;
  for (const auto& [label, c] : m.per_label) {
    double p, r, f;
    finish(p, r, f, c);
    per[label] = {{"precision", p},
                  {"recall", r},
                  {"f1", f},
                  {"relevant", c.relevant},
                  {"retrieved", c.retrieved},
                  {"intersection", c.intersection}};
  }
  j["per_label"] = std::move(per);
  return j.dump(2);
}

size_t levenshtein(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

ToleranceCurve tolerance_curve(const std::vector<std::string>& predictions,
                               const std::vector<std::string>& truths,
                               int k_max) {
  if (predictions.size() != truths.size())
    throw ArgumentError("tolerance_curve: prediction/truth lists are not aligned");
  if (k_max < 0) throw ArgumentError("tolerance_curve: k_max must be >= 0");
  ToleranceCurve curve;
  std::vector<size_t> dist(predictions.size());
  for (size_t i = 0; i < predictions.size(); ++i)
    dist[i] = levenshtein(predictions[i], truths[i]);
  for (int k = 0; k <= k_max; ++k) {
    size_t hits = 0;
    for (size_t d : dist)
      if (d <= static_cast<size_t>(k)) ++hits;
    curve.tolerance.push_back(k);
    curve.accuracy.push_back(predictions.empty() ? 0.0
                                                 : static_cast<double>(hits) / predictions.size());
  }
  return curve;
}

void write_tolerance_csv(const std::string& path, const ToleranceCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "tolerance,accuracy\n";
  for (size_t i = 0; i < curve.tolerance.size(); ++i)
    out << curve.tolerance[i] << ',' << curve.accuracy[i] << '\n';
}

double copy_rate(const std::vector<std::vector<StepTrace>>& traces) {
  if (traces.empty()) throw ArgumentError("copy_rate: no traces given");
  long long total = 0, copied = 0;
  for (const auto& doc : traces) {
    for (const StepTrace& step : doc) {
      if (step.marker) continue;
      ++total;
      if ((1.0 - step.p_gen) * step.copy_mass > step.p_gen * step.p_vocab) ++copied;
    }
  }
  return total > 0 ? static_cast<double>(copied) / total : 0.0;
}

}  // namespace seqner::eval
