#include <doctest.h>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "seqner/align.hpp"
#include "seqner/corpus.hpp"
#include "seqner/error.hpp"
#include "seqner/eval.hpp"
#include "seqner/rng.hpp"
#include "seqner/textproc.hpp"
#include "seqner/types.hpp"

using namespace seqner;
using namespace seqner::corpus;

TEST_CASE("apply_char_noise") {
  Rng rng(1);
  CHECK(apply_char_noise("Olson", 0.0, rng) == "Olson");

  Rng rng2(2);
  CHECK(apply_char_noise("Olson", 1.0, rng2) == "015on");

  Rng rng3(3);
  CHECK(apply_char_noise("burn", 1.0, rng3) == "bvm");  // u->v, rn->m

  // deterministic under a fixed stream
  Rng a(77), b(77);
  for (int i = 0; i < 50; ++i)
    CHECK(apply_char_noise("miscellaneous", 0.4, a) == apply_char_noise("miscellaneous", 0.4, b));

  CHECK_THROWS_AS(apply_char_noise("", 0.5, rng), ArgumentError);
}

TEST_CASE("interleave_columns") {
  CHECK(interleave_columns({{"jane", "doe"}}, {{"case", "no"}}) ==
        std::vector<std::string>{"jane", "doe", "case", "no"});
  CHECK(interleave_columns({{"jane"}, {"doe"}}, {{"case", "no"}, {"14"}}) ==
        std::vector<std::string>{"jane", "case", "no", "doe", "14"});
  CHECK(interleave_columns({{"a"}, {"b"}}, {{}, {}}) == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(interleave_columns({}, {{"x"}}), ArgumentError);
}

TEST_CASE("make_name_variant") {
  std::set<std::string> seen;
  Rng rng(5);
  for (int i = 0; i < 60; ++i) seen.insert(make_name_variant("jane marie doe", rng));
  CHECK(seen.count("jane m. doe"));
  CHECK(seen.count("jane doe"));
  CHECK(seen.count("j. marie doe"));
  CHECK(seen.size() == 3);

  Rng rng2(6);
  CHECK(make_name_variant("acme", rng2) == "acme");
  CHECK(make_name_variant("jane doe", rng2) == "j. doe");
}

TEST_CASE("generate_case_number shapes") {
  Rng rng(11);
  std::set<char> specials{':', '/', '-'};
  for (int i = 0; i < 400; ++i) {
    std::string cn = generate_case_number(rng);
    CHECK(cn.size() >= 8);
    CHECK(cn.size() <= 14);
    for (char c : cn) {
      bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || specials.count(c);
      CHECK(ok);
    }
  }
  Rng a(3), b(3);
  CHECK(generate_case_number(a) == generate_case_number(b));
}

TEST_CASE("generate_corpus determinism and shape") {
  NoiseConfig cfg = NoiseConfig::desk_default();
  cfg.length_percentiles = {40, 90, 200};
  cfg.rng_seed = 31;
  auto docs1 = generate_corpus(cfg, 60);
  auto docs2 = generate_corpus(cfg, 60, /*threads=*/2);
  REQUIRE(docs1.size() == docs2.size());
  for (size_t i = 0; i < docs1.size(); ++i)
    CHECK(document_to_json_line(docs1[i]) == document_to_json_line(docs2[i]));

  for (const Document& d : docs1) {
    int plaintiffs = 0, defendants = 0, casenumbers = 0;
    for (const Entity& e : d.entities) {
      if (e.label == EntityLabel::plaintiff) ++plaintiffs;
      if (e.label == EntityLabel::defendant) ++defendants;
      if (e.label == EntityLabel::casenumber) ++casenumbers;
    }
    CHECK(plaintiffs >= 1);
    CHECK(defendants >= 1);
    CHECK(plaintiffs + defendants >= 2);
    CHECK(plaintiffs + defendants <= 8);
    CHECK(casenumbers <= 1);
    CHECK(!d.source_tokens.empty());
    for (const TruthSpan& s : d.truth_spans) {
      CHECK(s.entity >= 0);
      CHECK(s.entity < static_cast<int>(d.entities.size()));
      CHECK(s.start >= 0);
      CHECK(s.start <= s.end);
      CHECK(s.end < static_cast<int>(d.source_tokens.size()));
    }
  }
}

TEST_CASE("zero noise inserts every surface verbatim") {
  NoiseConfig cfg;  // all probabilities zero
  cfg.length_percentiles = {40, 90, 200};
  cfg.rng_seed = 8;
  auto docs = generate_corpus(cfg, 80);
  for (const Document& d : docs) {
    for (const TruthSpan& s : d.truth_spans) {
      auto expect = textproc::tokenize_words(d.entities[s.entity].surface);
      REQUIRE(s.end - s.start + 1 == static_cast<int>(expect.size()));
      for (size_t k = 0; k < expect.size(); ++k)
        CHECK(d.source_tokens[s.start + static_cast<int>(k)] == expect[k]);
    }
    // and every entity is alignable
    auto ex = align::align_entities(d);
    for (bool m : ex.matched) CHECK(m);
  }
}

TEST_CASE("interleave_prob 1 interrupts every multi-token header party span") {
  NoiseConfig cfg;
  cfg.interleave_prob = 1.0;
  cfg.length_percentiles = {40, 90, 200};
  cfg.rng_seed = 17;
  auto docs = generate_corpus(cfg, 60);
  for (const Document& d : docs) {
    std::map<int, const TruthSpan*> header_span;  // first span per entity
    for (const TruthSpan& s : d.truth_spans)
      if (!header_span.count(s.entity)) header_span[s.entity] = &s;
    for (size_t e = 0; e < d.entities.size(); ++e) {
      if (d.entities[e].label == EntityLabel::casenumber) continue;
      auto surface_tokens = textproc::tokenize_words(d.entities[e].surface);
      if (surface_tokens.size() < 2) continue;
      const TruthSpan* sp = header_span.at(static_cast<int>(e));
      // the recorded stretch must be longer than the name itself: foreign
      // tokens were injected inside
      CHECK(sp->end - sp->start + 1 > static_cast<int>(surface_tokens.size()));
    }
  }
}

TEST_CASE("alignability is non-increasing in char_sub_prob") {
  std::vector<double> probs{0.0, 0.05, 0.15, 0.4};
  std::vector<double> rates;
  for (double p : probs) {
    NoiseConfig cfg;
    cfg.char_sub_prob = p;
    cfg.length_percentiles = {40, 80, 160};
    cfg.rng_seed = 1001;
    auto docs = generate_corpus(cfg, 500);
    long long total = 0, matched = 0;
    for (const Document& d : docs) {
      auto ex = align::align_entities(d);
      for (bool m : ex.matched) {
        ++total;
        if (m) ++matched;
      }
    }
    rates.push_back(static_cast<double>(matched) / static_cast<double>(total));
  }
  for (size_t i = 1; i < rates.size(); ++i) CHECK(rates[i] <= rates[i - 1]);
  CHECK(rates.front() == doctest::Approx(1.0));
}

TEST_CASE("length percentiles roughly realized") {
  NoiseConfig cfg;
  cfg.length_percentiles = {80, 300, 1600};
  cfg.rng_seed = 2;
  auto docs = generate_corpus(cfg, 400);
  std::vector<int> lens;
  for (const Document& d : docs) lens.push_back(static_cast<int>(d.source_tokens.size()));
  std::sort(lens.begin(), lens.end());
  int p50 = lens[lens.size() / 2];
  int p95 = lens[static_cast<size_t>(lens.size() * 0.95)];
  CHECK(p50 > 150);
  CHECK(p50 < 600);
  CHECK(p95 > 1000);
}

TEST_CASE("config validation names the field") {
  NoiseConfig cfg;
  cfg.char_sub_prob = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(),
                       doctest::Contains("char_sub_prob"), ConfigError);
  NoiseConfig cfg2;
  cfg2.length_percentiles = {100, 50, 200};
  CHECK_THROWS_AS(cfg2.validate(), ConfigError);
  CHECK_THROWS_AS(generate_corpus(NoiseConfig{}, 0), ConfigError);
}

TEST_CASE("corpus jsonl round trip") {
  NoiseConfig cfg = NoiseConfig::desk_default();
  cfg.length_percentiles = {30, 60, 100};
  cfg.rng_seed = 4;
  auto docs = generate_corpus(cfg, 10);
  for (const Document& d : docs) {
    Document back = document_from_json_line(document_to_json_line(d));
    CHECK(back.id == d.id);
    CHECK(back.source_tokens == d.source_tokens);
    REQUIRE(back.entities.size() == d.entities.size());
    for (size_t i = 0; i < d.entities.size(); ++i) {
      CHECK(back.entities[i].label == d.entities[i].label);
      CHECK(back.entities[i].surface == d.entities[i].surface);
    }
    CHECK(back.truth_spans.size() == d.truth_spans.size());
  }
}
