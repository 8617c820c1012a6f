#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "seqner/model.hpp"
#include "seqner/rng.hpp"
#include "seqner/textproc.hpp"

using namespace seqner;
using namespace seqner::model;
using textproc::SeqGenExample;
using textproc::Vocabulary;

namespace {

Vocabulary small_vocab(std::vector<std::string> extra) {
  std::vector<std::string> tokens{"<pad>", "<bos>", "<eos>", "<unk>",
                                  "<plaintiff>", "<defendant>", "<casenumber>"};
  for (auto& t : extra) tokens.push_back(std::move(t));
  return Vocabulary(std::move(tokens));
}

PointerGenConfig tiny_cfg(int vocab_size, bool copy = true) {
  PointerGenConfig cfg;
  cfg.embedding_dim = 4;
  cfg.hidden_dim = 5;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.attention_dim = 5;
  cfg.copy_enabled = copy;
  cfg.vocab_size = vocab_size;
  cfg.normalize();
  return cfg;
}

}  // namespace

TEST_CASE("attention over a single source position is a point mass") {
  Vocabulary v = small_vocab({"a", "b"});
  PointerGenConfig cfg = tiny_cfg(v.size());
  auto params = init_pointer_gen_params<double>(cfg, 3);
  Document doc;
  doc.id = "d";
  doc.source_tokens = {"a"};
  doc.entities = {Entity{EntityLabel::plaintiff, "a"}};
  SeqGenExample ex = textproc::encode_example(doc, v, 10, textproc::TokenMode::word);

  PgSession<double> session(params, cfg, ex);
  CHECK(session.source_len() == 1);
  auto state = session.init_state();
  auto outs = session.step_batch({&state}, {Vocabulary::kBos});
  REQUIRE(outs.size() == 1);
  REQUIRE(outs[0].attn.size() == 1);
  CHECK(outs[0].attn[0] == doctest::Approx(1.0));
}

TEST_CASE("identical encoder rows with shared params attend equally") {
  ad::Graph<double> g;
  Rng rng(9);
  const int T = 2, B = 1, K = 6, A = 4, H = 3;
  ad::Tensor<double> hfl(T * B, K);
  for (int c = 0; c < K; ++c) hfl.at(0, c) = hfl.at(1, c) = rng.uniform(-1, 1);
  ad::Tensor<double> wh(K, A), ws(H, A), vv(A, 1), s(B, H);
  for (auto* t : {&wh, &ws, &vv, &s})
    for (double& x : t->data) x = rng.uniform(-1, 1);
  auto* preh = ad::matmul(g, g.constant(hfl), g.constant(wh));
  auto* q = ad::matmul(g, g.constant(s), g.constant(ws));
  auto* scores = ad::matmul(g, ad::tanh_op(g, ad::add(g, preh, ad::tile_rows(g, q, T))),
                            g.constant(vv));
  auto* a = ad::softmax(g, ad::fold_time(g, scores, B), 1);
  CHECK(a->value().at(0, 0) == doctest::Approx(0.5));
  CHECK(a->value().at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("encoder shape contract and determinism") {
  Vocabulary v = small_vocab({"a", "b", "c"});
  PointerGenConfig cfg = tiny_cfg(v.size());
  auto params = init_pointer_gen_params<double>(cfg, 5);

  Document doc;
  doc.id = "d";
  doc.source_tokens = {"a", "b", "c", "b"};
  doc.entities = {Entity{EntityLabel::plaintiff, "b"}};
  SeqGenExample ex = textproc::encode_example(doc, v, 10, textproc::TokenMode::word);

  auto enc1 = pg_encode_doc(params, cfg, ex);
  auto enc2 = pg_encode_doc(params, cfg, ex);
  CHECK(enc1.hflat.rows == 4);
  CHECK(enc1.hflat.cols == 2 * cfg.hidden_dim);
  CHECK(enc1.hflat.data == enc2.hflat.data);
  CHECK(enc1.h0[0].data == enc2.h0[0].data);

  // zero params: every state collapses to zero through the tanh(0) paths
  auto zero_params = init_pointer_gen_params<double>(cfg, 5);
  for (auto& [name, p] : zero_params.slots()) p.value.fill(0.0);
  auto enc0 = pg_encode_doc(zero_params, cfg, ex);
  for (double x : enc0.hflat.data) CHECK(x == doctest::Approx(0.0));
  for (double x : enc0.h0[0].data) CHECK(x == doctest::Approx(0.0));
}

TEST_CASE("p_gen gate boundaries select the pure paths") {
  Vocabulary v = small_vocab({"alpha", "beta"});
  PointerGenConfig cfg = tiny_cfg(v.size());
  Document doc;
  doc.id = "d";
  doc.source_tokens = {"alpha", "zzz", "beta"};  // zzz is OOV -> extended id
  doc.entities = {Entity{EntityLabel::plaintiff, "alpha"}};
  SeqGenExample ex = textproc::encode_example(doc, v, 10, textproc::TokenMode::word);
  REQUIRE(ex.oov_list.size() == 1);

  for (double bias : {50.0, -50.0}) {
    auto params = init_pointer_gen_params<double>(cfg, 7);
    params.at("ptr.w").value.fill(0.0);
    params.at("ptr.b").value.fill(bias);
    PgSession<double> session(params, cfg, ex);
    auto state = session.init_state();
    auto out = session.step_batch({&state}, {Vocabulary::kBos})[0];
    const int V = v.size();
    const int W = session.width();
    if (bias > 0) {
      // pure generation: final dist equals gen dist padded with zeros
      for (int w = 0; w < V; ++w) CHECK(out.dist[w] == doctest::Approx(out.gen[w]).epsilon(1e-9));
      for (int w = V; w < W; ++w) CHECK(out.dist[w] == doctest::Approx(0.0));
    } else {
      // pure copying: final dist equals attention mass aggregated per token
      for (int w = 0; w < W; ++w)
        CHECK(out.dist[w] == doctest::Approx(out.copy_mass[w]).epsilon(1e-9));
    }
  }
}

TEST_CASE("final distribution mixes generation and copy mass exactly") {
  Vocabulary v = small_vocab({"alpha", "beta", "gamma"});
  PointerGenConfig cfg = tiny_cfg(v.size());
  auto params = init_pointer_gen_params<double>(cfg, 11);
  Document doc;
  doc.id = "d";
  doc.source_tokens = {"alpha", "qq", "beta", "qq", "rr"};
  doc.entities = {Entity{EntityLabel::plaintiff, "alpha"}};
  SeqGenExample ex = textproc::encode_example(doc, v, 10, textproc::TokenMode::word);

  PgSession<double> session(params, cfg, ex);
  auto state = session.init_state();
  std::vector<int> prevs{Vocabulary::kBos, 7, v.size()};  // bos, in-vocab, extended oov
  for (int prev : prevs) {
    auto out = session.step_batch({&state}, {prev})[0];
    CHECK(out.p_gen >= 0.0);
    CHECK(out.p_gen <= 1.0);
    double sum = 0.0;
    for (int w = 0; w < session.width(); ++w) {
      double gen = w < v.size() ? out.gen[w] : 0.0;
      double expect = out.p_gen * gen + (1.0 - out.p_gen) * out.copy_mass[w];
      CHECK(out.dist[w] == doctest::Approx(expect).epsilon(1e-9));
      CHECK(out.dist[w] >= 0.0);
      sum += out.dist[w];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    state = out.state;
  }
}

TEST_CASE("true OOV tokens receive mass iff the copy path is enabled") {
  Vocabulary v = small_vocab({"alpha"});
  Document doc;
  doc.id = "d";
  doc.source_tokens = {"mystery", "alpha"};
  doc.entities = {Entity{EntityLabel::plaintiff, "mystery"}};
  SeqGenExample ex = textproc::encode_example(doc, v, 10, textproc::TokenMode::word);
  REQUIRE(ex.oov_list.size() == 1);
  const int ext_id = v.size();

  PointerGenConfig with_copy = tiny_cfg(v.size(), true);
  auto params = init_pointer_gen_params<double>(with_copy, 13);
  PgSession<double> s1(params, with_copy, ex);
  auto st1 = s1.init_state();
  auto out1 = s1.step_batch({&st1}, {Vocabulary::kBos})[0];
  CHECK(out1.dist.size() == static_cast<size_t>(v.size() + 1));
  CHECK(out1.dist[ext_id] > 0.0);

  PointerGenConfig no_copy = tiny_cfg(v.size(), false);
  auto params2 = init_pointer_gen_params<double>(no_copy, 13);
  PgSession<double> s2(params2, no_copy, ex);
  auto st2 = s2.init_state();
  auto out2 = s2.step_batch({&st2}, {Vocabulary::kBos})[0];
  CHECK(out2.dist.size() == static_cast<size_t>(v.size()));  // no extended entries at all
}

TEST_CASE("char mode disables copying") {
  PointerGenConfig cfg = tiny_cfg(40, true);
  cfg.mode = textproc::TokenMode::ch;
  cfg.normalize();
  CHECK(!cfg.copy_enabled);
}

// The end-to-end checks run on the extended-precision instantiation of the
// same templates: central differences on a ~5k-op graph lose too many double
// bits to resolve near-zero gradient coordinates at eps=1e-5.
TEST_CASE("full pointer-generator nll passes the finite-difference oracle") {
  Vocabulary v = small_vocab({"alpha", "beta", "gamma"});
  PointerGenConfig cfg = tiny_cfg(v.size());
  auto params = init_pointer_gen_params<long double>(cfg, 21);

  Document doc;
  doc.id = "d";
  doc.source_tokens = {"alpha", "qq", "beta", "gamma", "qq"};  // 5 tokens, one OOV
  doc.entities = {Entity{EntityLabel::plaintiff, "alpha qq"}};
  SeqGenExample ex = textproc::encode_example(doc, v, 10, textproc::TokenMode::word);
  REQUIRE(ex.target_ids.size() == 4);  // marker alpha qq <eos>: a 4-step decode

  std::vector<const SeqGenExample*> exs{&ex};
  PgBatch<long double> batch = make_pg_batch<long double>(exs, v.size(), cfg.copy_enabled);

  std::vector<ad::Parameter<long double>*> all;
  for (auto& [name, p] : params.slots()) all.push_back(&p);
  auto report = ad::grad_check<long double>(
      [&](ad::Graph<long double>& g) {
        Ctx<long double> ctx{g, params, true, nullptr};
        return pg_batch_loss(ctx, cfg, batch);
      },
      all, 1e-5L);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("batched loss equals the mean of single-example losses") {
  Vocabulary v = small_vocab({"alpha", "beta", "gamma", "delta"});
  PointerGenConfig cfg = tiny_cfg(v.size());
  auto params = init_pointer_gen_params<double>(cfg, 31);

  std::vector<Document> docs(2);
  docs[0].id = "a";
  docs[0].source_tokens = {"alpha", "beta", "qq"};
  docs[0].entities = {Entity{EntityLabel::plaintiff, "alpha"}};
  docs[1].id = "b";
  docs[1].source_tokens = {"gamma", "delta", "beta", "alpha", "ww", "beta"};
  docs[1].entities = {Entity{EntityLabel::defendant, "beta alpha"},
                      Entity{EntityLabel::plaintiff, "gamma"}};
  std::vector<SeqGenExample> exs;
  for (const auto& d : docs) exs.push_back(textproc::encode_example(d, v, 10, textproc::TokenMode::word));

  auto loss_of = [&](const std::vector<const SeqGenExample*>& batch_exs) {
    PgBatch<double> batch = make_pg_batch<double>(batch_exs, v.size(), cfg.copy_enabled);
    ad::Graph<double> g;
    Ctx<double> ctx{g, params, false, nullptr};
    return pg_batch_loss(ctx, cfg, batch)->value().data[0];
  };
  double joint = loss_of({&exs[0], &exs[1]});
  double solo = 0.5 * (loss_of({&exs[0]}) + loss_of({&exs[1]}));
  CHECK(joint == doctest::Approx(solo).epsilon(1e-9));
}

TEST_CASE("tagger label mapping and distributions") {
  CHECK(kNumTagLabels == 9);
  for (int id = 0; id < kNumTagLabels; ++id) CHECK(tag_to_label_id(label_id_to_tag(id)) == id);
  CHECK(tag_to_label_id(Tag{Chunk::B, EntityLabel::casenumber}) == 0);

  TaggerConfig cfg;
  cfg.embedding_dim = 4;
  cfg.hidden_dim = 5;
  cfg.vocab_size = 11;
  auto params = init_tagger_params<double>(cfg, 3);
  std::vector<int> ids{1, 5, 9, 2, 4};
  auto dist = tagger_forward_dist(params, cfg, ids);
  CHECK(dist.rows == 5);
  CHECK(dist.cols == 9);
  for (int r = 0; r < dist.rows; ++r) {
    double sum = 0;
    for (int c = 0; c < dist.cols; ++c) sum += dist.at(r, c);
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }

  auto tags = tagger_predict(params, cfg, ids);
  CHECK(tags.size() == ids.size());
  CHECK(bilou_is_wellformed(tags));
}

TEST_CASE("tagger repair output is always well-formed") {
  Rng rng(71);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Tag> noisy;
    int n = 1 + rng.below_int(20);
    for (int i = 0; i < n; ++i)
      noisy.push_back(label_id_to_tag(rng.below_int(kNumTagLabels)));
    auto fixed = bilou_repair(noisy);
    CHECK(bilou_is_wellformed(fixed));
    // repair keeps already-valid sequences intact
    CHECK(bilou_repair(fixed) == fixed);
  }
}

TEST_CASE("tagger loss finite-difference check") {
  TaggerConfig cfg;
  cfg.embedding_dim = 3;
  cfg.hidden_dim = 4;
  cfg.vocab_size = 9;
  auto params = init_tagger_params<double>(cfg, 17);

  std::vector<int> ids1{1, 2, 3, 4};
  std::vector<int> labels1{0, 1, 3, 0};  // O B-p L-p O
  std::vector<int> ids2{5, 6};
  std::vector<int> labels2{8, 0};  // U-d O
  std::vector<const std::vector<int>*> id_seqs{&ids1, &ids2};
  std::vector<const std::vector<int>*> label_seqs{&labels1, &labels2};
  TaggerBatch<double> batch = make_tagger_batch<double>(id_seqs, label_seqs);

  std::vector<ad::Parameter<double>*> all;
  for (auto& [name, p] : params.slots()) all.push_back(&p);
  auto report = ad::grad_check<double>(
      [&](ad::Graph<double>& g) {
        Ctx<double> ctx{g, params, true, nullptr};
        return tagger_batch_loss(ctx, cfg, batch);
      },
      all, 1e-5);
  CHECK(report.max_rel_err < 1e-4);
}
