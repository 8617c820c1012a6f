#include "seqner/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include <json.hpp>

#include "seqner/error.hpp"

namespace seqner::textproc {

const char* to_string(TokenMode mode) { return mode == TokenMode::word ? "word" : "char"; }

TokenMode token_mode_from_string(const std::string& s) {
  if (s == "word") return TokenMode::word;
  if (s == "char") return TokenMode::ch;
  throw ArgumentError("unknown token mode: " + s);
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    std::string chunk = text.substr(i, j - i);
    i = j;
    // peel leading punctuation
    size_t lo = 0;
    while (lo < chunk.size() && std::ispunct(static_cast<unsigned char>(chunk[lo])))
      out.push_back(std::string(1, chunk[lo++]));
    // find trailing punctuation
    size_t hi = chunk.size();
    while (hi > lo && std::ispunct(static_cast<unsigned char>(chunk[hi - 1]))) --hi;
    if (hi > lo) out.push_back(chunk.substr(lo, hi - lo));
    for (size_t k = hi; k < chunk.size(); ++k) out.push_back(std::string(1, chunk[k]));
  }
  return out;
}

std::string fold_token(const std::string& token) {
  std::string out = token;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {

bool is_special_token(const std::string& t) {
  return t == "<pad>" || t == "<bos>" || t == "<eos>" || t == "<unk>" || t == "<plaintiff>" ||
         t == "<defendant>" || t == "<casenumber>" || t == kSpaceSymbol;
}

std::vector<std::string> special_tokens() {
  return {"<pad>", "<bos>", "<eos>", "<unk>", "<plaintiff>", "<defendant>", "<casenumber>"};
}

}  // namespace

std::vector<std::string> to_char_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  bool first = true;
  for (const std::string& t : tokens) {
    if (is_special_token(t)) {
      out.push_back(t);
      first = true;  // no space symbol around specials
      continue;
    }
    if (!first) out.push_back(kSpaceSymbol);
    for (char c : t) out.push_back(std::string(1, c));
    first = false;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  auto specials = special_tokens();
  if (tokens_.size() < specials.size())
    throw ArgumentError("vocabulary must contain at least the special tokens");
  for (size_t i = 0; i < specials.size(); ++i)
    if (tokens_[i] != specials[i])
      throw ArgumentError("vocabulary specials out of order at id " + std::to_string(i));
  for (size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = ids_.emplace(tokens_[i], static_cast<int>(i));
    if (!inserted) throw ArgumentError("duplicate vocabulary token: " + tokens_[i]);
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw ArgumentError("vocabulary id out of range: " + std::to_string(id));
  return tokens_[id];
}

bool Vocabulary::contains(const std::string& token) const { return ids_.count(token) > 0; }

int Vocabulary::marker_id(EntityLabel label) {
  switch (label) {
    case EntityLabel::plaintiff: return kPlaintiff;
    case EntityLabel::defendant: return kDefendant;
    case EntityLabel::casenumber: return kCasenumber;
  }
  return kUnk;
}

const char* Vocabulary::marker_token(EntityLabel label) {
  switch (label) {
    case EntityLabel::plaintiff: return "<plaintiff>";
    case EntityLabel::defendant: return "<defendant>";
    case EntityLabel::casenumber: return "<casenumber>";
  }
  return "<unk>";
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (const std::string& t : tokens_) {
    for (char c : t) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 0x100000001B3ULL;
  }
  return h;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const std::string& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(const std::vector<Document>& corpus, int max_size, TokenMode mode) {
  if (corpus.empty()) throw ArgumentError("build_vocab: empty corpus");
  if (max_size <= Vocabulary::kNumSpecials)
    throw ArgumentError("build_vocab: max_size must exceed the number of specials");
  std::map<std::string, long long> freq;
  auto count = [&](const std::vector<std::string>& tokens) {
    std::vector<std::string> units;
    units.reserve(tokens.size());
    for (const std::string& t : tokens) units.push_back(fold_token(t));
    if (mode == TokenMode::ch) units = to_char_tokens(units);
    for (const std::string& u : units)
      if (!is_special_token(u)) freq[u]++;
  };
  for (const Document& doc : corpus) {
    count(doc.source_tokens);
    count(linearize_targets(doc.entities, TokenMode::word));
  }
  std::vector<std::pair<std::string, long long>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens = special_tokens();
  if (mode == TokenMode::ch) tokens.push_back(kSpaceSymbol);
  for (const auto& [tok, n] : ranked) {
    if (static_cast<int>(tokens.size()) >= max_size) break;
    tokens.push_back(tok);
  }
  return Vocabulary(std::move(tokens));
}

std::vector<std::string> linearize_targets(const std::vector<Entity>& entities, TokenMode mode,
                                           bool dedupe) {
  if (entities.empty()) throw ArgumentError("linearize_targets: no entities");
  std::vector<std::string> out;
  auto emit_group = [&](EntityLabel label) {
    std::vector<std::string> seen;
    for (const Entity& e : entities) {
      if (e.label != label) continue;
      std::vector<std::string> words = tokenize_words(e.surface);
      std::vector<std::string> folded;
      for (const std::string& w : words) folded.push_back(fold_token(w));
      if (folded.empty()) continue;
      if (dedupe) {
        std::string key;
        for (const std::string& w : folded) key += w + ' ';
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
      }
      out.push_back(Vocabulary::marker_token(label));
      for (const std::string& w : folded) out.push_back(w);
    }
  };
  emit_group(EntityLabel::plaintiff);
  emit_group(EntityLabel::defendant);
  emit_group(EntityLabel::casenumber);
  if (mode == TokenMode::ch) out = to_char_tokens(out);
  return out;
}

std::vector<Entity> parse_generated(const std::vector<std::string>& tokens, TokenMode mode) {
  std::vector<Entity> out;
  EntityLabel current = EntityLabel::plaintiff;
  bool in_segment = false;
  std::vector<std::string> segment;
  auto flush = [&]() {
    if (!in_segment) return;
    std::string surface;
    if (mode == TokenMode::word) {
      for (const std::string& t : segment) {
        if (!surface.empty()) surface += ' ';
        surface += t;
      }
    } else {
      for (const std::string& t : segment) surface += (t == kSpaceSymbol) ? " " : t;
    }
    // trim whitespace left over from stray space symbols
    size_t lo = surface.find_first_not_of(' ');
    size_t hi = surface.find_last_not_of(' ');
    surface = lo == std::string::npos ? "" : surface.substr(lo, hi - lo + 1);
    if (!surface.empty()) out.push_back(Entity{current, surface});
    segment.clear();
  };
  for (const std::string& t : tokens) {
    if (t == "<eos>") break;
    if (t == "<plaintiff>" || t == "<defendant>" || t == "<casenumber>") {
      flush();
      current = t == "<plaintiff>"   ? EntityLabel::plaintiff
                : t == "<defendant>" ? EntityLabel::defendant
                                     : EntityLabel::casenumber;
      in_segment = true;
      continue;
    }
    if (t == "<pad>" || t == "<bos>") continue;
    if (in_segment) segment.push_back(t);
  }
  flush();
  return out;
}

SeqGenExample encode_example(const Document& doc, const Vocabulary& vocab, int cutoff,
                             TokenMode mode) {
  if (cutoff < 1) throw ArgumentError("encode_example: cutoff must be >= 1");
  SeqGenExample ex;
  ex.doc_id = doc.id;

  std::vector<std::string> source;
  source.reserve(doc.source_tokens.size());
  for (const std::string& t : doc.source_tokens) source.push_back(fold_token(t));
  if (mode == TokenMode::ch) source = to_char_tokens(source);
  if (static_cast<int>(source.size()) > cutoff) source.resize(cutoff);
  ex.source_truncated_at = cutoff;

  std::unordered_map<std::string, int> oov_index;
  for (const std::string& t : source) {
    int id = vocab.id(t);
    ex.source_ids.push_back(id);
    if (id != Vocabulary::kUnk || vocab.contains(t)) {
      ex.source_ext_ids.push_back(id);
    } else {
      auto [it, inserted] = oov_index.emplace(t, static_cast<int>(ex.oov_list.size()));
      if (inserted) ex.oov_list.push_back(t);
      ex.source_ext_ids.push_back(vocab.size() + it->second);
    }
  }

  std::vector<std::string> target = linearize_targets(doc.entities, mode);
  for (const std::string& t : target) {
    int id = vocab.id(t);
    if (id == Vocabulary::kUnk && !vocab.contains(t)) {
      auto it = oov_index.find(t);
      ex.target_ids.push_back(it == oov_index.end() ? Vocabulary::kUnk
                                                    : vocab.size() + it->second);
    } else {
      ex.target_ids.push_back(id);
    }
  }
  ex.target_ids.push_back(Vocabulary::kEos);
  return ex;
}

std::vector<std::string> decode_ext_ids(const std::vector<int>& ids, const Vocabulary& vocab,
                                        const std::vector<std::string>& oov_list) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < vocab.size()) {
      out.push_back(vocab.token(id));
    } else {
      int k = id - vocab.size();
      if (k >= static_cast<int>(oov_list.size()))
        throw ArgumentError("decode_ext_ids: extended id out of range: " + std::to_string(id));
      out.push_back(oov_list[k]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoded dataset files
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::ofstream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("truncated encoded dataset");
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void put_ids(std::ofstream& out, const std::vector<int>& ids) {
  put_u32(out, static_cast<uint32_t>(ids.size()));
  for (int id : ids) put_u32(out, static_cast<uint32_t>(id));
}

std::vector<int> get_ids(std::ifstream& in) {
  uint32_t n = get_u32(in);
  std::vector<int> ids(n);
  for (uint32_t i = 0; i < n; ++i) ids[i] = static_cast<int>(get_u32(in));
  return ids;
}

void put_str(std::ofstream& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::ifstream& in) {
  uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw IoError("truncated encoded dataset");
  return s;
}

}  // namespace

void write_encoded_dataset(const std::string& path, const std::vector<SeqGenExample>& examples,
                           TokenMode mode, int cutoff, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  put_u32(out, static_cast<uint32_t>(examples.size()));
  for (const SeqGenExample& ex : examples) {
    put_str(out, ex.doc_id);
    put_ids(out, ex.source_ids);
    put_ids(out, ex.source_ext_ids);
    put_ids(out, ex.target_ids);
    put_u32(out, static_cast<uint32_t>(ex.oov_list.size()));
    for (const std::string& t : ex.oov_list) put_str(out, t);
    put_u32(out, static_cast<uint32_t>(ex.source_truncated_at));
  }
  nlohmann::json side;
  side["mode"] = to_string(mode);
  side["cutoff"] = cutoff;
  side["vocab_hash"] = vocab.hash();
  side["examples"] = examples.size();
  std::ofstream sj(path + ".json", std::ios::binary);
  if (!sj) throw IoError("cannot open for writing: " + path + ".json");
  sj << side.dump(2) << '\n';
}

std::vector<SeqGenExample> read_encoded_dataset(const std::string& path, TokenMode* mode_out,
                                                int* cutoff_out, uint64_t* vocab_hash_out) {
  std::ifstream sj(path + ".json", std::ios::binary);
  if (!sj) throw IoError("cannot open sidecar: " + path + ".json");
  nlohmann::json side;
  try {
    sj >> side;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad sidecar: ") + e.what());
  }
  if (mode_out) *mode_out = token_mode_from_string(side.at("mode").get<std::string>());
  if (cutoff_out) *cutoff_out = side.at("cutoff").get<int>();
  if (vocab_hash_out) *vocab_hash_out = side.at("vocab_hash").get<uint64_t>();

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  uint32_t n = get_u32(in);
  std::vector<SeqGenExample> examples(n);
  for (uint32_t i = 0; i < n; ++i) {
    SeqGenExample& ex = examples[i];
    ex.doc_id = get_str(in);
    ex.source_ids = get_ids(in);
    ex.source_ext_ids = get_ids(in);
    ex.target_ids = get_ids(in);
    uint32_t noov = get_u32(in);
    for (uint32_t k = 0; k < noov; ++k) ex.oov_list.push_back(get_str(in));
    ex.source_truncated_at = static_cast<int>(get_u32(in));
  }
  return examples;
}

}  // namespace seqner::textproc
