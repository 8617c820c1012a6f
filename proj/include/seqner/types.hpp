#pragma once

#include <optional>
#include <string>
#include <vector>

namespace seqner {

enum class EntityLabel { plaintiff, defendant, casenumber };

const char* to_string(EntityLabel label);
std::optional<EntityLabel> entity_label_from_string(const std::string& s);

struct Entity {
  EntityLabel label;
  std::string surface;  // annotator-style target; may differ from any source substring

  bool operator==(const Entity& other) const = default;
};

// Token span recorded at generation time, kept for synthetic audit only.
struct TruthSpan {
  int entity;  // index into Document::entities
  int start;   // token index
  int end;     // inclusive token index
};

struct Document {
  std::string id;
  std::vector<std::string> source_tokens;
  std::vector<Entity> entities;
  std::vector<TruthSpan> truth_spans;
};

// ---------------------------------------------------------------------------
// BILOU tagging scheme
// ---------------------------------------------------------------------------

enum class Chunk { O, B, I, L, U };

struct Tag {
  Chunk chunk = Chunk::O;
  EntityLabel label = EntityLabel::plaintiff;  // meaningless when chunk == O

  bool operator==(const Tag& other) const {
    if (chunk == Chunk::O && other.chunk == Chunk::O) return true;
    return chunk == other.chunk && label == other.label;
  }
};

std::string to_string(const Tag& tag);
std::optional<Tag> tag_from_string(const std::string& s);

struct Span {
  int start;
  int end;  // inclusive
  EntityLabel label;

  bool operator==(const Span& other) const = default;
};

// A tag sequence is well-formed when every B-x run is closed by L-x with only
// I-x inside, and I/L never appear outside a run.
bool bilou_is_wellformed(const std::vector<Tag>& tags);

std::vector<Tag> bilou_spans_to_tags(int length, const std::vector<Span>& spans);

// Requires a well-formed sequence; returns the spans in left-to-right order.
std::vector<Span> bilou_tags_to_spans(const std::vector<Tag>& tags);

// Demotes every token that participates in an invalid transition to O, so the
// result always passes bilou_is_wellformed.
std::vector<Tag> bilou_repair(const std::vector<Tag>& tags);

// ---------------------------------------------------------------------------
// Corpus file I/O (JSON Lines, one document per line, UTF-8, LF endings)
// ---------------------------------------------------------------------------

std::string document_to_json_line(const Document& doc);
Document document_from_json_line(const std::string& line);

void write_corpus_jsonl(const std::string& path, const std::vector<Document>& docs);
std::vector<Document> read_corpus_jsonl(const std::string& path);

}  // namespace seqner
