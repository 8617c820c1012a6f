#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqner/types.hpp"

namespace seqner::textproc {

enum class TokenMode { word, ch };

const char* to_string(TokenMode mode);
TokenMode token_mode_from_string(const std::string& s);

// Dedicated space symbol used between words in character mode.
inline constexpr const char* kSpaceSymbol = "<sp>";

// Whitespace split, then leading/trailing punctuation peeled off as separate
// tokens ("corp.," -> "corp" "." ","). Interior punctuation stays attached so
// identifiers like 1:16cv00678 survive as one token.
std::vector<std::string> tokenize_words(const std::string& text);

// Case-folding applied to every token before ids are assigned.
std::string fold_token(const std::string& token);

// Word tokens -> character tokens with the explicit space symbol between
// words. Label markers and specials pass through unsplit.
std::vector<std::string> to_char_tokens(const std::vector<std::string>& tokens);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kPlaintiff = 4;
  static constexpr int kDefendant = 5;
  static constexpr int kCasenumber = 6;
  static constexpr int kNumSpecials = 7;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);  // specials must lead

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  static bool is_marker_id(int id) { return id >= kPlaintiff && id <= kCasenumber; }
  static int marker_id(EntityLabel label);
  static const char* marker_token(EntityLabel label);

  uint64_t hash() const;  // FNV-1a over the token list

  void save(const std::string& path) const;  // one token per line, id = line number
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Keeps the max_size most frequent tokens (ties broken lexicographically)
// over the folded source tokens and linearized targets of the corpus. In
// char mode the inventory is the observed character set plus specials.
Vocabulary build_vocab(const std::vector<Document>& corpus, int max_size, TokenMode mode);

// Label marker followed by the surface tokens, plaintiffs first, then
// defendants, then case numbers, each group in document order. Duplicate
// surfaces (after folding) are emitted once when dedupe is set.
std::vector<std::string> linearize_targets(const std::vector<Entity>& entities, TokenMode mode,
                                           bool dedupe = true);

// Inverse of linearize_targets; tokens before the first marker are dropped,
// as are empty segments.
std::vector<Entity> parse_generated(const std::vector<std::string>& tokens, TokenMode mode);

struct SeqGenExample {
  std::string doc_id;
  std::vector<int> source_ids;      // OOV source tokens -> kUnk
  std::vector<int> source_ext_ids;  // OOV source tokens -> vocab size + oov index
  std::vector<std::string> oov_list;
  std::vector<int> target_ids;      // over the extended vocabulary, EOS-terminated
  int source_truncated_at = 0;
};

SeqGenExample encode_example(const Document& doc, const Vocabulary& vocab, int cutoff,
                             TokenMode mode);

// Maps extended ids back to tokens (left inverse of encoding).
std::vector<std::string> decode_ext_ids(const std::vector<int>& ids, const Vocabulary& vocab,
                                        const std::vector<std::string>& oov_list);

// Binary record stream of encoded examples (length-prefixed little-endian
// 32-bit id arrays) plus a JSON sidecar describing mode/cutoff/vocab hash.
void write_encoded_dataset(const std::string& path, const std::vector<SeqGenExample>& examples,
                           TokenMode mode, int cutoff, const Vocabulary& vocab);
std::vector<SeqGenExample> read_encoded_dataset(const std::string& path, TokenMode* mode_out,
                                                int* cutoff_out, uint64_t* vocab_hash_out);

}  // namespace seqner::textproc
