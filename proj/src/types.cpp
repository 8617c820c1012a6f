#include "seqner/types.hpp"

#include <fstream>

#include <json.hpp>

#include "seqner/error.hpp"

namespace seqner {

const char* to_string(EntityLabel label) {
  switch (label) {
    case EntityLabel::plaintiff: return "plaintiff";
    case EntityLabel::defendant: return "defendant";
    case EntityLabel::casenumber: return "casenumber";
  }
  return "?";
}

std::optional<EntityLabel> entity_label_from_string(const std::string& s) {
  if (s == "plaintiff") return EntityLabel::plaintiff;
  if (s == "defendant") return EntityLabel::defendant;
  if (s == "casenumber") return EntityLabel::casenumber;
  return std::nullopt;
}

std::string to_string(const Tag& tag) {
  switch (tag.chunk) {
    case Chunk::O: return "O";
    case Chunk::B: return std::string("B-") + to_string(tag.label);
    case Chunk::I: return std::string("I-") + to_string(tag.label);
    case Chunk::L: return std::string("L-") + to_string(tag.label);
    case Chunk::U: return std::string("U-") + to_string(tag.label);
  }
  return "O";
}

std::optional<Tag> tag_from_string(const std::string& s) {
  if (s == "O") return Tag{Chunk::O, EntityLabel::plaintiff};
  if (s.size() < 3 || s[1] != '-') return std::nullopt;
  Chunk chunk;
  switch (s[0]) {
    case 'B': chunk = Chunk::B; break;
    case 'I': chunk = Chunk::I; break;
    case 'L': chunk = Chunk::L; break;
    case 'U': chunk = Chunk::U; break;
    default: return std::nullopt;
  }
  auto label = entity_label_from_string(s.substr(2));
  if (!label) return std::nullopt;
  return Tag{chunk, *label};
}

bool bilou_is_wellformed(const std::vector<Tag>& tags) {
  bool open = false;
  EntityLabel open_label = EntityLabel::plaintiff;
  for (const Tag& t : tags) {
    switch (t.chunk) {
      case Chunk::O:
      case Chunk::U:
        if (open) return false;
        break;
      case Chunk::B:
        if (open) return false;
        open = true;
        open_label = t.label;
        break;
      case Chunk::I:
        if (!open || t.label != open_label) return false;
        break;
      case Chunk::L:
        if (!open || t.label != open_label) return false;
        open = false;
        break;
    }
  }
  return !open;
}

std::vector<Tag> bilou_spans_to_tags(int length, const std::vector<Span>& spans) {
  std::vector<Tag> tags(static_cast<size_t>(length), Tag{Chunk::O, EntityLabel::plaintiff});
  for (const Span& sp : spans) {
    if (sp.start < 0 || sp.end < sp.start || sp.end >= length)
      throw ArgumentError("bilou_spans_to_tags: span out of range");
    if (sp.start == sp.end) {
      tags[sp.start] = Tag{Chunk::U, sp.label};
      continue;
    }
    tags[sp.start] = Tag{Chunk::B, sp.label};
    for (int i = sp.start + 1; i < sp.end; ++i) tags[i] = Tag{Chunk::I, sp.label};
    tags[sp.end] = Tag{Chunk::L, sp.label};
  }
  return tags;
}

std::vector<Span> bilou_tags_to_spans(const std::vector<Tag>& tags) {
  if (!bilou_is_wellformed(tags))
    throw ArgumentError("bilou_tags_to_spans: tag sequence is not well-formed");
  std::vector<Span> spans;
  int open_start = -1;
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    switch (tags[i].chunk) {
      case Chunk::U: spans.push_back(Span{i, i, tags[i].label}); break;
      case Chunk::B: open_start = i; break;
      case Chunk::L: spans.push_back(Span{open_start, i, tags[i].label}); break;
      default: break;
    }
  }
  return spans;
}

std::vector<Tag> bilou_repair(const std::vector<Tag>& tags) {
  const Tag kO{Chunk::O, EntityLabel::plaintiff};
  std::vector<Tag> out(tags.size(), kO);
  size_t i = 0;
  while (i < tags.size()) {
    const Tag& t = tags[i];
    if (t.chunk == Chunk::U) {
      out[i] = t;
      ++i;
      continue;
    }
    if (t.chunk == Chunk::B) {
      // Accept the run only if it closes with L of the same label.
      size_t j = i + 1;
      while (j < tags.size() && tags[j].chunk == Chunk::I && tags[j].label == t.label) ++j;
      if (j < tags.size() && tags[j].chunk == Chunk::L && tags[j].label == t.label) {
        for (size_t k = i; k <= j; ++k) out[k] = tags[k];
        i = j + 1;
      } else {
        ++i;  // dangling B demoted to O, rescan from next token
      }
      continue;
    }
    ++i;  // O, or stray I/L demoted to O
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string document_to_json_line(const Document& doc) {
  nlohmann::json j;
  j["id"] = doc.id;
  j["source_tokens"] = doc.source_tokens;
  nlohmann::json ents = nlohmann::json::array();
  for (const Entity& e : doc.entities)
    ents.push_back({{"label", to_string(e.label)}, {"surface", e.surface}});
  j["entities"] = std::move(ents);
  if (!doc.truth_spans.empty()) {
    nlohmann::json spans = nlohmann::json::array();
    for (const TruthSpan& s : doc.truth_spans)
      spans.push_back({s.entity, s.start, s.end});
    j["truth_spans"] = std::move(spans);
  }
  return j.dump();
}

Document document_from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad corpus line: ") + e.what());
  }
  Document doc;
  doc.id = j.at("id").get<std::string>();
  doc.source_tokens = j.at("source_tokens").get<std::vector<std::string>>();
  for (const auto& ej : j.at("entities")) {
    auto label = entity_label_from_string(ej.at("label").get<std::string>());
    if (!label) throw IoError("unknown entity label in corpus line: " + ej.at("label").dump());
    doc.entities.push_back(Entity{*label, ej.at("surface").get<std::string>()});
  }
  if (j.contains("truth_spans")) {
    for (const auto& sj : j.at("truth_spans"))
      doc.truth_spans.push_back(TruthSpan{sj.at(0).get<int>(), sj.at(1).get<int>(), sj.at(2).get<int>()});
  }
  return doc;
}

void write_corpus_jsonl(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const Document& d : docs) out << document_to_json_line(d) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Document> read_corpus_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<Document> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    docs.push_back(document_from_json_line(line));
  }
  return docs;
}

}  // namespace seqner
