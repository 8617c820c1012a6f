#include "seqner/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "seqner/error.hpp"
#include "seqner/threadpool.hpp"

namespace seqner::corpus {

void NoiseConfig::validate() const {
  auto check_prob = [](double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError(std::string(field) + " must be in [0,1], got " + std::to_string(p));
  };
  check_prob(char_sub_prob, "char_sub_prob");
  check_prob(interleave_prob, "interleave_prob");
  check_prob(variant_prob, "variant_prob");
  check_prob(duplicate_mention_prob, "duplicate_mention_prob");
  if (length_percentiles.p5 < 1)
    throw ConfigError("length_percentiles.p5 must be >= 1");
  if (!(length_percentiles.p5 <= length_percentiles.p50 &&
        length_percentiles.p50 <= length_percentiles.p95))
    throw ConfigError("length_percentiles must satisfy p5 <= p50 <= p95");
}

NoiseConfig NoiseConfig::desk_default() {
  NoiseConfig c;
  c.char_sub_prob = 0.02;
  c.interleave_prob = 0.5;
  c.variant_prob = 0.1;
  c.duplicate_mention_prob = 0.7;
  c.length_percentiles = LengthPercentiles{80, 300, 1600};
  c.rng_seed = 1;
  return c;
}

NoiseConfig NoiseConfig::paper_scale() {
  NoiseConfig c = desk_default();
  c.length_percentiles = LengthPercentiles{838, 2901, 16713};
  return c;
}

// ---------------------------------------------------------------------------
// OCR confusion table
// ---------------------------------------------------------------------------

namespace {

// Fixed inventory of common OCR confusions. Single-character entries plus the
// rn <-> m digraph pair.
const char* confusion_lookup(char c) {
  switch (c) {
    case 'l': return "1";
    case '1': return "l";
    case 'O': return "0";
    case '0': return "O";
    case 'S': return "5";
    case 's': return "5";
    case '5': return "S";
    case 'e': return "c";
    case 'c': return "e";
    case 'B': return "8";
    case '8': return "B";
    case 'Z': return "2";
    case '2': return "Z";
    case 'i': return "l";
    case 'u': return "v";
    case 'v': return "u";
    case 'g': return "q";
    case 'h': return "b";
    default: return nullptr;
  }
}

}  // namespace

std::string apply_char_noise(const std::string& token, double char_sub_prob, Rng& rng) {
  if (token.empty()) throw ArgumentError("apply_char_noise: empty token");
  std::string out;
  out.reserve(token.size());
  size_t i = 0;
  while (i < token.size()) {
    if (rng.coin(char_sub_prob)) {
      if (i + 1 < token.size() && token[i] == 'r' && token[i + 1] == 'n') {
        out += 'm';
        i += 2;
        continue;
      }
      if (token[i] == 'm') {
        out += "rn";
        ++i;
        continue;
      }
      if (const char* rep = confusion_lookup(token[i])) {
        out += rep;
        ++i;
        continue;
      }
    }
    out += token[i];
    ++i;
  }
  return out;
}

std::vector<std::string> interleave_columns(const std::vector<std::vector<std::string>>& left,
                                            const std::vector<std::vector<std::string>>& right) {
  if (left.empty() || right.empty())
    throw ArgumentError("interleave_columns: both row lists must be non-empty");
  std::vector<std::string> out;
  size_t rows = std::max(left.size(), right.size());
  for (size_t r = 0; r < rows; ++r) {
    if (r < left.size())
      for (const std::string& t : left[r]) out.push_back(t);
    if (r < right.size())
      for (const std::string& t : right[r]) out.push_back(t);
  }
  return out;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> parts;
  std::istringstream in(s);
  std::string w;
  while (in >> w) parts.push_back(w);
  return parts;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

}  // namespace

std::string make_name_variant(const std::string& surface, Rng& rng) {
  std::vector<std::string> parts = split_ws(surface);
  if (parts.size() < 2) return surface;
  int transform = parts.size() >= 3 ? rng.below_int(3) : 2;
  switch (transform) {
    case 0:  // middle name -> initial
      parts[1] = std::string(1, parts[1][0]) + ".";
      break;
    case 1:  // middle dropped
      parts.erase(parts.begin() + 1);
      break;
    default:  // first -> initial
      parts[0] = std::string(1, parts[0][0]) + ".";
      break;
  }
  return join(parts);
}

std::string generate_case_number(Rng& rng) {
  static const std::array<const char*, 5> kTemplates = {
      "d:ddcvddddd", "ddddddd/dddd", "dd-cv-ddddd", "d:dd-aa-ddddd", "dddddddd"};
  const char* tmpl = kTemplates[rng.below(kTemplates.size())];
  std::string out;
  for (const char* p = tmpl; *p; ++p) {
    if (*p == 'd')
      out += static_cast<char>('0' + rng.below_int(10));
    else if (*p == 'a')
      out += static_cast<char>('a' + rng.below_int(26));
    else
      out += *p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic complaint assembly
// ---------------------------------------------------------------------------

namespace {

const std::array<const char*, 72> kFirstNames = {
    "james",   "mary",    "robert",  "patricia", "john",    "jennifer", "michael", "linda",
    "david",   "lydia",   "william", "susan",    "richard", "jessica",  "joseph",  "sarah",
    "thomas",  "karen",   "walter",  "lisa",     "charles", "nancy",    "daniel",  "betty",
    "matthew", "margaret","anthony", "sandra",   "mark",    "ashley",   "donald",  "kim",
    "steven",  "emily",   "paul",    "donna",    "andrew",  "michelle", "joshua",  "dorothy",
    "kenneth", "carol",   "kevin",   "amanda",   "brian",   "melissa",  "george",  "deborah",
    "timothy", "stephanie","ronald", "rebecca",  "edward",  "sharon",   "jason",   "laura",
    "jeffrey", "cynthia", "ryan",    "kathleen", "jacob",   "amy",      "gary",    "angela",
    "nicholas","shirley", "eric",    "anna",     "jonathan","ruth",     "stephen", "brenda"};

const std::array<const char*, 40> kSurnameHeads = {
    "hol", "san", "mor", "gar", "fair", "bell", "whit", "carl", "ander", "peder",
    "lind", "mar", "ross", "win", "hard", "black", "stan", "brook", "cald", "dun",
    "ever", "fitz", "gold", "har", "ken", "lang", "mont", "nor", "oak", "pat",
    "quin", "rich", "sher", "thorn", "under", "van", "wex", "york", "zim", "ash"};

const std::array<const char*, 38> kSurnameTails = {
    "berg", "son", "ton", "field", "man", "sen", "ley", "well", "ford", "wick",
    "worth", "land", "stein", "baum", "gren", "holm", "dale", "ridge", "brook", "wood",
    "ham", "by", "thorpe", "ard", "ell", "ing", "low", "mer", "ner", "rell",
    "ser", "tell", "vale", "wall", "yer", "den", "kin", "mond"};

const std::array<const char*, 28> kCompanyHeads = {
    "apex",    "meridian", "summit",   "pinnacle", "vertex",  "keystone", "paragon",
    "beacon",  "cascade",  "frontier", "horizon",  "liberty", "monarch",  "nexus",
    "omega",   "premier",  "quantum",  "regal",    "sterling","tribune",  "union",
    "vanguard","westfield","zenith",   "atlas",    "crown",   "delta",    "empire"};

const std::array<const char*, 22> kCompanyMids = {
    "logistics",  "industries", "holdings",  "partners",  "solutions", "systems",
    "properties", "ventures",   "financial", "insurance", "builders",  "transport",
    "medical",    "energy",     "capital",   "brands",    "foods",     "materials",
    "services",   "realty",     "freight",   "motors"};

const std::array<const char*, 6> kCompanySuffixes = {"inc", "llc", "corp", "co", "ltd", "group"};

const std::array<const char*, 64> kFunctionWords = {
    "the",   "of",     "and",    "to",      "in",      "a",        "for",     "that",
    "on",    "by",     "with",   "as",      "is",      "was",      "at",      "or",
    "be",    "this",   "any",    "all",     "has",     "have",     "from",    "shall",
    "court", "state",  "county", "against", "pursuant","herein",   "damages", "alleges",
    "action","cause",  "breach", "contract","relief",  "judgment", "jury",    "trial",
    "notice","motion", "filed",  "served",  "claims",  "complaint","amount",  "under",
    "upon",  "said",   "such",   "other",   "further", "within",   "entitled","above",
    "named", "matter", "laws",   "section", "code",    "civil",    "hereby",  "party"};

const std::array<const char*, 20> kBodyOnsets = {"sta", "re",  "con", "pro", "de",  "in",  "ad",
                                                 "sub", "per", "com", "dis", "ex",  "tra", "ob",
                                                 "mis", "pre", "sur", "un",  "co",  "inter"};

const std::array<const char*, 15> kBodyMids = {"si",  "ta",  "mo", "ri", "lu", "ve", "na", "po",
                                               "ga",  "fe",  "du", "ce", "bi", "ha", "qui"};

const std::array<const char*, 20> kBodyCodes = {"tion", "ment", "ness", "ble",  "ture", "sion",
                                                "ward", "ly",   "ing",  "ed",   "al",   "ous",
                                                "ive",  "ic",   "ant",  "ence", "ory",  "um",
                                                "ex",   "or"};

struct WordBank {
  std::vector<std::string> body_words;   // ranked, Zipf-weighted
  std::vector<double> body_cdf;
  std::vector<std::string> surnames;
  std::vector<std::string> middle_pool;
};

const WordBank& word_bank() {
  static const WordBank bank = [] {
    WordBank b;
    for (const char* w : kFunctionWords) b.body_words.push_back(w);
    for (const char* a : kBodyOnsets)
      for (const char* m : kBodyMids)
        for (const char* c : kBodyCodes) b.body_words.push_back(std::string(a) + m + c);
    // a few numeric tokens seen in running text
    for (const char* n : {"14", "42", "100", "2016", "2017", "12", "30", "90"})
      b.body_words.push_back(n);
    double acc = 0.0;
    b.body_cdf.reserve(b.body_words.size());
    for (size_t r = 0; r < b.body_words.size(); ++r) {
      acc += 1.0 / std::pow(static_cast<double>(r) + 2.7, 1.07);
      b.body_cdf.push_back(acc);
    }
    for (double& v : b.body_cdf) v /= acc;
    for (const char* h : kSurnameHeads)
      for (const char* t : kSurnameTails) b.surnames.push_back(std::string(h) + t);
    for (size_t i = 0; i < kFirstNames.size(); i += 2) b.middle_pool.push_back(kFirstNames[i]);
    return b;
  }();
  return bank;
}

std::string sample_body_word(Rng& rng) {
  const WordBank& b = word_bank();
  double u = rng.uniform01();
  auto it = std::lower_bound(b.body_cdf.begin(), b.body_cdf.end(), u);
  size_t idx = static_cast<size_t>(it - b.body_cdf.begin());
  if (idx >= b.body_words.size()) idx = b.body_words.size() - 1;
  return b.body_words[idx];
}

std::string sample_person_name(Rng& rng) {
  const WordBank& b = word_bank();
  std::string name = kFirstNames[rng.below(kFirstNames.size())];
  if (rng.coin(0.35)) name += ' ' + b.middle_pool[rng.below(b.middle_pool.size())];
  name += ' ' + b.surnames[rng.below(b.surnames.size())];
  return name;
}

std::string sample_company_name(Rng& rng) {
  std::string name = kCompanyHeads[rng.below(kCompanyHeads.size())];
  if (rng.coin(0.7)) name += std::string(" ") + kCompanyMids[rng.below(kCompanyMids.size())];
  name += std::string(" ") + kCompanySuffixes[rng.below(kCompanySuffixes.size())];
  return name;
}

int sample_party_count(Rng& rng) {
  double u = rng.uniform01();
  if (u < 0.42) return 2;
  if (u < 0.72) return 3;
  if (u < 0.86) return 4;
  if (u < 0.93) return 5;
  if (u < 0.97) return 6;
  if (u < 0.99) return 7;
  return 8;
}

int sample_doc_length(const LengthPercentiles& lp, Rng& rng) {
  double u = rng.uniform01();
  double lo, hi, flo, fhi;
  if (u < 0.05) {
    lo = 0.6 * lp.p5, hi = lp.p5, flo = 0.0, fhi = 0.05;
  } else if (u < 0.5) {
    lo = lp.p5, hi = lp.p50, flo = 0.05, fhi = 0.5;
  } else if (u < 0.95) {
    lo = lp.p50, hi = lp.p95, flo = 0.5, fhi = 0.95;
  } else {
    lo = lp.p95, hi = 1.4 * lp.p95, flo = 0.95, fhi = 1.0;
  }
  double t = (u - flo) / (fhi - flo);
  double len = std::exp(std::log(std::max(lo, 1.0)) +
                        t * (std::log(std::max(hi, 1.0)) - std::log(std::max(lo, 1.0))));
  return std::max(1, static_cast<int>(std::lround(len)));
}

// Realization of one mention: optional name variant, then character noise.
std::vector<std::string> realize_mention(const std::string& surface, const NoiseConfig& cfg,
                                         Rng& rng) {
  std::string text = surface;
  if (cfg.variant_prob > 0 && rng.coin(cfg.variant_prob)) text = make_name_variant(text, rng);
  std::vector<std::string> tokens = split_ws(text);
  for (std::string& t : tokens) t = apply_char_noise(t, cfg.char_sub_prob, rng);
  return tokens;
}

// Case-block/right-column material fed between interrupted spans.
std::vector<std::vector<std::string>> make_right_chunks(const std::string& casenum_a,
                                                        const std::string& casenum_b, Rng& rng) {
  const WordBank& b = word_bank();
  std::vector<std::vector<std::string>> chunks;
  chunks.push_back({"case", "no"});
  if (casenum_b.empty())
    chunks.push_back({casenum_a});
  else
    chunks.push_back({casenum_a, casenum_b});
  chunks.push_back({"judge", b.surnames[rng.below(b.surnames.size())]});
  chunks.push_back({"division", std::to_string(1 + rng.below_int(9))});
  chunks.push_back({"jury", "trial", "demanded"});
  chunks.push_back({"filed", std::to_string(1 + rng.below_int(12)), std::to_string(2009 + rng.below_int(9))});
  return chunks;
}

struct MentionPlacement {
  int entity;
  int row_first;   // left row holding the first fragment
  int row_second;  // -1 when not split
};

Document generate_document(const NoiseConfig& cfg, uint64_t index, Rng rng) {
  Document doc;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "doc-%06llu", static_cast<unsigned long long>(index));
    doc.id = buf;
  }

  const int parties = sample_party_count(rng);
  const int n_plaintiffs = 1 + rng.below_int(std::max(1, parties - 1));
  const int n_defendants = parties - n_plaintiffs;

  for (int i = 0; i < n_plaintiffs; ++i) {
    std::string name = rng.coin(0.15) ? sample_company_name(rng) : sample_person_name(rng);
    doc.entities.push_back(Entity{EntityLabel::plaintiff, name});
  }
  for (int i = 0; i < n_defendants; ++i) {
    std::string name = rng.coin(0.55) ? sample_company_name(rng) : sample_person_name(rng);
    doc.entities.push_back(Entity{EntityLabel::defendant, name});
  }
  const int casenum_entity = static_cast<int>(doc.entities.size());
  doc.entities.push_back(Entity{EntityLabel::casenumber, generate_case_number(rng)});

  // --- header: left column (party blocks) + right column (case block) ---
  std::vector<std::vector<std::string>> left;
  std::vector<bool> wants_right;  // row starts an interrupted span
  std::vector<MentionPlacement> placements;

  auto push_row = [&](std::vector<std::string> row, bool interrupt) {
    left.push_back(std::move(row));
    wants_right.push_back(interrupt);
  };

  auto emit_party = [&](int entity_idx) {
    std::vector<std::string> tokens = realize_mention(doc.entities[entity_idx].surface, cfg, rng);
    bool split = tokens.size() >= 2 && rng.coin(cfg.interleave_prob);
    MentionPlacement mp{entity_idx, static_cast<int>(left.size()), -1};
    if (split) {
      int k = 1 + rng.below_int(static_cast<int>(tokens.size()) - 1);
      std::vector<std::string> head(tokens.begin(), tokens.begin() + k);
      std::vector<std::string> tail(tokens.begin() + k, tokens.end());
      push_row(std::move(head), true);
      mp.row_second = static_cast<int>(left.size());
      push_row(std::move(tail), false);
    } else {
      push_row(std::move(tokens), false);
    }
    placements.push_back(mp);
  };

  for (int i = 0; i < n_plaintiffs; ++i) {
    emit_party(i);
    if (i + 1 < n_plaintiffs) push_row({rng.coin(0.5) ? "and" : ","}, false);
  }
  push_row({n_plaintiffs > 1 ? "plaintiffs" : "plaintiff", ","}, false);
  push_row({rng.coin(0.5) ? "v." : "vs."}, false);
  for (int i = 0; i < n_defendants; ++i) {
    emit_party(n_plaintiffs + i);
    if (i + 1 < n_defendants) push_row({rng.coin(0.5) ? "and" : ","}, false);
  }
  push_row({n_defendants > 1 ? "defendants" : "defendant", "."}, false);

  // case number realization: OCR whitespace break at a separator with the
  // span-interruption probability, then character noise
  std::string casenum = doc.entities[casenum_entity].surface;
  std::string cn_a = casenum, cn_b;
  if (rng.coin(cfg.interleave_prob)) {
    std::vector<int> cuts;
    for (size_t i = 1; i + 1 < casenum.size(); ++i)
      if (casenum[i] == ':' || casenum[i] == '/' || casenum[i] == '-') cuts.push_back(static_cast<int>(i + 1));
    int cut = cuts.empty() ? static_cast<int>(casenum.size() / 2)
                           : cuts[rng.below(cuts.size())];
    cn_a = casenum.substr(0, static_cast<size_t>(cut));
    cn_b = casenum.substr(static_cast<size_t>(cut));
  }
  cn_a = apply_char_noise(cn_a, cfg.char_sub_prob, rng);
  if (!cn_b.empty()) cn_b = apply_char_noise(cn_b, cfg.char_sub_prob, rng);

  std::vector<std::vector<std::string>> chunks = make_right_chunks(cn_a, cn_b, rng);

  // Assign right rows: interrupted rows get the next chunk, the rest stay
  // empty; unplaced chunks trail after the left column.
  std::vector<std::vector<std::string>> right(left.size());
  size_t next_chunk = 0;
  for (size_t r = 0; r < left.size(); ++r) {
    if (wants_right[r]) {
      if (next_chunk < chunks.size())
        right[r] = chunks[next_chunk++];
      else
        right[r] = {std::to_string(10 + rng.below_int(90))};  // stray page/date fragment
    }
  }
  for (; next_chunk < chunks.size(); ++next_chunk) right.push_back(chunks[next_chunk]);
  while (right.size() > left.size()) left.push_back({});

  std::vector<std::string> header = interleave_columns(left, right);

  // flat start offset of every row after interleaving
  std::vector<int> row_offset(left.size() + 1, 0);
  for (size_t r = 0; r < left.size(); ++r)
    row_offset[r + 1] = row_offset[r] + static_cast<int>(left[r].size()) +
                        static_cast<int>(r < right.size() ? right[r].size() : 0);

  for (const MentionPlacement& mp : placements) {
    int start = row_offset[mp.row_first];
    int end_row = mp.row_second >= 0 ? mp.row_second : mp.row_first;
    int end = row_offset[end_row] + static_cast<int>(left[end_row].size()) - 1;
    doc.truth_spans.push_back(TruthSpan{mp.entity, start, end});
  }
  {  // case number span (single right row; find it)
    int pos = 0;
    for (size_t r = 0; r < std::max(left.size(), right.size()); ++r) {
      int left_len = r < left.size() ? static_cast<int>(left[r].size()) : 0;
      if (r < right.size() && !right[r].empty() && right[r][0] == cn_a) {
        doc.truth_spans.push_back(TruthSpan{casenum_entity, pos + left_len,
                                            pos + left_len + (cn_b.empty() ? 0 : 1)});
        break;
      }
      pos += left_len + static_cast<int>(r < right.size() ? right[r].size() : 0);
    }
  }

  // --- body ---
  int target_len = sample_doc_length(cfg.length_percentiles, rng);
  int body_len = std::max(8, target_len - static_cast<int>(header.size()));
  std::vector<std::string> body(static_cast<size_t>(body_len));
  for (auto& t : body) t = sample_body_word(rng);

  struct Insertion {
    int pos;
    int entity;
    std::vector<std::string> tokens;
  };
  std::vector<Insertion> insertions;
  for (int e = 0; e < static_cast<int>(doc.entities.size()); ++e) {
    if (doc.entities[e].label == EntityLabel::casenumber) continue;
    if (!rng.coin(cfg.duplicate_mention_prob)) continue;
    int copies = rng.coin(0.4) ? 2 : 1;
    for (int c = 0; c < copies; ++c)
      insertions.push_back(Insertion{rng.below_int(body_len + 1), e,
                                     realize_mention(doc.entities[e].surface, cfg, rng)});
  }
  std::stable_sort(insertions.begin(), insertions.end(),
                   [](const Insertion& a, const Insertion& b) { return a.pos < b.pos; });

  std::vector<std::string> final_tokens = header;
  int cursor = 0;
  for (const Insertion& ins : insertions) {
    for (; cursor < ins.pos; ++cursor) final_tokens.push_back(body[cursor]);
    int start = static_cast<int>(final_tokens.size());
    for (const std::string& t : ins.tokens) final_tokens.push_back(t);
    doc.truth_spans.push_back(TruthSpan{ins.entity, start, start + static_cast<int>(ins.tokens.size()) - 1});
  }
  for (; cursor < body_len; ++cursor) final_tokens.push_back(body[cursor]);

  doc.source_tokens = std::move(final_tokens);
  return doc;
}

}  // namespace

std::vector<Document> generate_corpus(const NoiseConfig& config, int n_docs, int threads) {
  config.validate();
  if (n_docs < 1) throw ConfigError("n_docs must be >= 1");
  std::vector<Document> docs(static_cast<size_t>(n_docs));
  parallel_for(static_cast<size_t>(n_docs), threads, [&](size_t i) {
    docs[i] = generate_document(config, i, Rng::child(config.rng_seed, i));
  });
  return docs;
}

}  // namespace seqner::corpus
