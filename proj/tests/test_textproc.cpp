#include <doctest.h>

#include <cstdio>
#include <string>
#include <vector>

#include "seqner/corpus.hpp"
#include "seqner/error.hpp"
#include "seqner/rng.hpp"
#include "seqner/textproc.hpp"

using namespace seqner;
using namespace seqner::textproc;

namespace {

Document tiny_doc(std::vector<std::string> tokens, std::vector<Entity> entities) {
  Document d;
  d.id = "t";
  d.source_tokens = std::move(tokens);
  d.entities = std::move(entities);
  return d;
}

}  // namespace

TEST_CASE("tokenize_words peels edge punctuation") {
  CHECK(tokenize_words("jane doe") == std::vector<std::string>{"jane", "doe"});
  CHECK(tokenize_words("Corp.,") == std::vector<std::string>{"Corp", ".", ","});
  CHECK(tokenize_words("(acme)") == std::vector<std::string>{"(", "acme", ")"});
  CHECK(tokenize_words("1:16cv00678") == std::vector<std::string>{"1:16cv00678"});
  CHECK(tokenize_words("...") == std::vector<std::string>{".", ".", "."});
  CHECK(tokenize_words("  ") == std::vector<std::string>{});
}

TEST_CASE("build_vocab keeps the most frequent tokens") {
  auto doc = tiny_doc({"a", "a", "a", "b", "b", "c"}, {Entity{EntityLabel::plaintiff, "a"}});
  // a appears again in the target, b twice, c once
  Vocabulary v = build_vocab({doc}, Vocabulary::kNumSpecials + 2, TokenMode::word);
  CHECK(v.contains("a"));
  CHECK(v.contains("b"));
  CHECK(!v.contains("c"));
  CHECK(v.id("c") == Vocabulary::kUnk);
  CHECK(v.size() == Vocabulary::kNumSpecials + 2);

  CHECK_THROWS_AS(build_vocab({}, 100, TokenMode::word), ArgumentError);
  CHECK_THROWS_AS(build_vocab({doc}, Vocabulary::kNumSpecials, TokenMode::word), ArgumentError);
}

TEST_CASE("build_vocab char mode covers the observed characters") {
  auto doc = tiny_doc({"1:16cv00678"}, {Entity{EntityLabel::casenumber, "1:16cv00678"}});
  Vocabulary v = build_vocab({doc}, 200, TokenMode::ch);
  for (const std::string& c : {"0", "1", "6", "7", "8", "c", "v", ":"}) CHECK(v.contains(c));
  CHECK(v.contains(kSpaceSymbol));
}

TEST_CASE("build_vocab is deterministic") {
  corpus::NoiseConfig cfg = corpus::NoiseConfig::desk_default();
  cfg.length_percentiles = {30, 60, 120};
  auto docs = corpus::generate_corpus(cfg, 40);
  Vocabulary a = build_vocab(docs, 300, TokenMode::word);
  Vocabulary b = build_vocab(docs, 300, TokenMode::word);
  CHECK(a.hash() == b.hash());
}

TEST_CASE("linearize_targets word and char modes") {
  std::vector<Entity> ents{Entity{EntityLabel::plaintiff, "jane doe"},
                           Entity{EntityLabel::defendant, "acme corporation"}};
  CHECK(linearize_targets(ents, TokenMode::word) ==
        std::vector<std::string>{"<plaintiff>", "jane", "doe", "<defendant>", "acme",
                                 "corporation"});

  std::vector<Entity> cn{Entity{EntityLabel::casenumber, "1:16cv00678"}};
  CHECK(linearize_targets(cn, TokenMode::ch) ==
        std::vector<std::string>{"<casenumber>", "1", ":", "1", "6", "c", "v", "0", "0", "6", "7",
                                 "8"});

  std::vector<Entity> solo{Entity{EntityLabel::plaintiff, "jane doe"}};
  CHECK(linearize_targets(solo, TokenMode::word) ==
        std::vector<std::string>{"<plaintiff>", "jane", "doe"});

  // defendants follow plaintiffs regardless of input order
  std::vector<Entity> swapped{Entity{EntityLabel::defendant, "acme"},
                              Entity{EntityLabel::plaintiff, "jane doe"}};
  CHECK(linearize_targets(swapped, TokenMode::word) ==
        std::vector<std::string>{"<plaintiff>", "jane", "doe", "<defendant>", "acme"});

  CHECK_THROWS_AS(linearize_targets({}, TokenMode::word), ArgumentError);
}

TEST_CASE("char mode target words separated by the space symbol") {
  std::vector<Entity> ents{Entity{EntityLabel::plaintiff, "jo an"}};
  CHECK(linearize_targets(ents, TokenMode::ch) ==
        std::vector<std::string>{"<plaintiff>", "j", "o", kSpaceSymbol, "a", "n"});
}

TEST_CASE("parse_generated") {
  CHECK(parse_generated({"<plaintiff>", "jane", "doe", "<defendant>", "acme"}, TokenMode::word) ==
        std::vector<Entity>{Entity{EntityLabel::plaintiff, "jane doe"},
                            Entity{EntityLabel::defendant, "acme"}});
  CHECK(parse_generated({"noise", "<plaintiff>", "x"}, TokenMode::word) ==
        std::vector<Entity>{Entity{EntityLabel::plaintiff, "x"}});
  CHECK(parse_generated({"<plaintiff>", "<defendant>", "y"}, TokenMode::word) ==
        std::vector<Entity>{Entity{EntityLabel::defendant, "y"}});
  CHECK(parse_generated({}, TokenMode::word).empty());
  CHECK(parse_generated({"garbage", "only"}, TokenMode::word).empty());
}

TEST_CASE("parse inverts linearize on random entity lists") {
  Rng rng(55);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Entity> ents;
    int n = 1 + rng.below_int(4);
    for (int i = 0; i < n; ++i) {
      EntityLabel label = static_cast<EntityLabel>(rng.below_int(3));
      std::string surface;
      int words = 1 + rng.below_int(3);
      for (int w = 0; w < words; ++w) {
        if (w) surface += ' ';
        int len = 1 + rng.below_int(6);
        for (int k = 0; k < len; ++k) surface += static_cast<char>('a' + rng.below_int(26));
      }
      ents.push_back(Entity{label, surface});
    }
    for (TokenMode mode : {TokenMode::word, TokenMode::ch}) {
      auto parsed = parse_generated(linearize_targets(ents, mode, /*dedupe=*/false), mode);
      // linearization reorders into plaintiff/defendant/casenumber groups
      auto expect = [&](EntityLabel label) {
        std::vector<std::string> out;
        for (const Entity& e : ents)
          if (e.label == label) out.push_back(e.surface);
        return out;
      };
      std::vector<std::string> want;
      for (EntityLabel label :
           {EntityLabel::plaintiff, EntityLabel::defendant, EntityLabel::casenumber})
        for (auto& s : expect(label)) want.push_back(s);
      REQUIRE(parsed.size() == want.size());
      for (size_t i = 0; i < want.size(); ++i) CHECK(parsed[i].surface == want[i]);
    }
  }
}

TEST_CASE("encode_example extended vocabulary") {
  auto doc = tiny_doc({"zzq", "foo", "zzq"}, {Entity{EntityLabel::plaintiff, "foo"}});
  std::vector<std::string> tokens{"<pad>", "<bos>", "<eos>", "<unk>",
                                  "<plaintiff>", "<defendant>", "<casenumber>", "foo"};
  Vocabulary v(tokens);

  SeqGenExample ex = encode_example(doc, v, 100, TokenMode::word);
  CHECK(ex.oov_list == std::vector<std::string>{"zzq"});
  CHECK(ex.source_ids == std::vector<int>{Vocabulary::kUnk, 7, Vocabulary::kUnk});
  CHECK(ex.source_ext_ids == std::vector<int>{8, 7, 8});
  CHECK(ex.target_ids == std::vector<int>{Vocabulary::kPlaintiff, 7, Vocabulary::kEos});

  // all-in-vocab doc: no oov, ids equal
  auto doc2 = tiny_doc({"foo", "foo"}, {Entity{EntityLabel::plaintiff, "foo"}});
  SeqGenExample ex2 = encode_example(doc2, v, 100, TokenMode::word);
  CHECK(ex2.oov_list.empty());
  CHECK(ex2.source_ids == ex2.source_ext_ids);

  // target token neither in vocab nor in source -> UNK
  auto doc3 = tiny_doc({"foo"}, {Entity{EntityLabel::plaintiff, "ghost"}});
  SeqGenExample ex3 = encode_example(doc3, v, 100, TokenMode::word);
  CHECK(ex3.target_ids == std::vector<int>{Vocabulary::kPlaintiff, Vocabulary::kUnk,
                                           Vocabulary::kEos});

  CHECK_THROWS_AS(encode_example(doc, v, 0, TokenMode::word), ArgumentError);
}

TEST_CASE("encode truncates before assigning extended ids") {
  auto doc = tiny_doc({"aaa", "bbb", "ccc"}, {Entity{EntityLabel::plaintiff, "aaa"}});
  std::vector<std::string> tokens{"<pad>", "<bos>", "<eos>", "<unk>",
                                  "<plaintiff>", "<defendant>", "<casenumber>"};
  Vocabulary v(tokens);
  SeqGenExample ex = encode_example(doc, v, 2, TokenMode::word);
  CHECK(ex.source_ids.size() == 2);
  CHECK(ex.oov_list == std::vector<std::string>{"aaa", "bbb"});
}

TEST_CASE("extended-id decoding inverts encoding") {
  corpus::NoiseConfig cfg = corpus::NoiseConfig::desk_default();
  cfg.length_percentiles = {30, 60, 120};
  cfg.rng_seed = 66;
  auto docs = corpus::generate_corpus(cfg, 30);
  Vocabulary v = build_vocab(docs, 150, TokenMode::word);
  for (const Document& d : docs) {
    SeqGenExample ex = encode_example(d, v, 64, TokenMode::word);
    auto decoded = decode_ext_ids(ex.source_ext_ids, v, ex.oov_list);
    std::vector<std::string> want;
    for (const std::string& t : d.source_tokens) {
      want.push_back(fold_token(t));
      if (static_cast<int>(want.size()) == 64) break;
    }
    CHECK(decoded == want);
    // id ranges stay disjoint
    for (int id : ex.source_ids) CHECK(id < v.size());
    int max_ext = v.size() + static_cast<int>(ex.oov_list.size());
    for (int id : ex.source_ext_ids) CHECK(id < max_ext);
    for (int id : ex.target_ids) CHECK(id < max_ext);
  }
}

TEST_CASE("vocabulary save/load round trip") {
  auto doc = tiny_doc({"alpha", "beta", "alpha"}, {Entity{EntityLabel::plaintiff, "alpha"}});
  Vocabulary v = build_vocab({doc}, 32, TokenMode::word);
  std::string path = "vocab_test.txt";
  v.save(path);
  Vocabulary back = Vocabulary::load(path);
  CHECK(back.hash() == v.hash());
  CHECK(back.size() == v.size());
  CHECK(back.id("alpha") == v.id("alpha"));
  std::remove(path.c_str());
}

TEST_CASE("encoded dataset round trip") {
  corpus::NoiseConfig cfg = corpus::NoiseConfig::desk_default();
  cfg.length_percentiles = {30, 60, 120};
  cfg.rng_seed = 67;
  auto docs = corpus::generate_corpus(cfg, 12);
  Vocabulary v = build_vocab(docs, 120, TokenMode::word);
  std::vector<SeqGenExample> examples;
  for (const Document& d : docs) examples.push_back(encode_example(d, v, 48, TokenMode::word));

  std::string path = "encoded_test.bin";
  write_encoded_dataset(path, examples, TokenMode::word, 48, v);
  TokenMode mode;
  int cutoff;
  uint64_t hash;
  auto back = read_encoded_dataset(path, &mode, &cutoff, &hash);
  CHECK(mode == TokenMode::word);
  CHECK(cutoff == 48);
  CHECK(hash == v.hash());
  REQUIRE(back.size() == examples.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].doc_id == examples[i].doc_id);
    CHECK(back[i].source_ids == examples[i].source_ids);
    CHECK(back[i].source_ext_ids == examples[i].source_ext_ids);
    CHECK(back[i].target_ids == examples[i].target_ids);
    CHECK(back[i].oov_list == examples[i].oov_list);
  }
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
