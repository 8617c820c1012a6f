#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "seqner/autodiff.hpp"
#include "seqner/rng.hpp"
#include "seqner/textproc.hpp"
#include "seqner/types.hpp"

namespace seqner::model {

struct PointerGenConfig {
  int embedding_dim = 100;
  int hidden_dim = 512;
  int encoder_layers = 2;
  int decoder_layers = 1;
  int attention_dim = 0;  // 0 -> hidden_dim
  bool copy_enabled = true;
  textproc::TokenMode mode = textproc::TokenMode::word;
  double dropout_prob = 0.0;
  int vocab_size = 0;

  // Character tokens make pointing meaningless; the model reduces to plain
  // attention seq2seq.
  void normalize() {
    if (mode == textproc::TokenMode::ch) copy_enabled = false;
    if (attention_dim <= 0) attention_dim = hidden_dim;
  }

  static PointerGenConfig paper_preset() {
    PointerGenConfig c;
    c.embedding_dim = 100;
    c.hidden_dim = 512;
    c.encoder_layers = 2;
    return c;
  }

  static PointerGenConfig desk_preset() {
    PointerGenConfig c;
    c.embedding_dim = 32;
    c.hidden_dim = 64;
    c.encoder_layers = 1;
    return c;
  }
};

inline constexpr int kNumTagLabels = 9;  // {B,I,L,U} x {plaintiff, defendant} + O

struct TaggerConfig {
  int embedding_dim = 32;
  int hidden_dim = 64;
  int layers = 1;
  double dropout_prob = 0.0;
  int vocab_size = 0;
};

// O=0, then BILU for plaintiff (1..4) and defendant (5..8). Case-number tags
// fold into O; the tagger baseline covers party names.
inline int tag_to_label_id(const Tag& tag) {
  if (tag.chunk == Chunk::O || tag.label == EntityLabel::casenumber) return 0;
  int base = tag.label == EntityLabel::plaintiff ? 1 : 5;
  switch (tag.chunk) {
    case Chunk::B: return base;
    case Chunk::I: return base + 1;
    case Chunk::L: return base + 2;
    case Chunk::U: return base + 3;
    default: return 0;
  }
}

inline Tag label_id_to_tag(int id) {
  if (id <= 0 || id >= kNumTagLabels) return Tag{Chunk::O, EntityLabel::plaintiff};
  EntityLabel label = id <= 4 ? EntityLabel::plaintiff : EntityLabel::defendant;
  switch ((id - 1) % 4) {
    case 0: return Tag{Chunk::B, label};
    case 1: return Tag{Chunk::I, label};
    case 2: return Tag{Chunk::L, label};
    default: return Tag{Chunk::U, label};
  }
}

// ---------------------------------------------------------------------------

template <typename Real>
class ParamStore {
 public:
  ad::Parameter<Real>& create(const std::string& name, int rows, int cols) {
    auto [it, inserted] = slots_.emplace(name, ad::Parameter<Real>(name, ad::Tensor<Real>(rows, cols)));
    if (!inserted) throw ArgumentError("duplicate parameter: " + name);
    return it->second;
  }

  ad::Parameter<Real>& at(const std::string& name) {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw ArgumentError("unknown parameter: " + name);
    return it->second;
  }

  const ad::Parameter<Real>& at(const std::string& name) const {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw ArgumentError("unknown parameter: " + name);
    return it->second;
  }

  std::map<std::string, ad::Parameter<Real>>& slots() { return slots_; }
  const std::map<std::string, ad::Parameter<Real>>& slots() const { return slots_; }

  void zero_grads() {
    for (auto& [name, p] : slots_) p.zero_grad();
  }

  size_t count_values() const {
    size_t n = 0;
    for (const auto& [name, p] : slots_) n += p.value.numel();
    return n;
  }

  // Uniform init over the name-sorted parameter list, so layout is a pure
  // function of the seed.
  void init_uniform(uint64_t seed, double range = 0.08) {
    Rng rng(seed);
    for (auto& [name, p] : slots_)
      for (Real& v : p.value.data) v = static_cast<Real>(rng.uniform(-range, range));
  }

 private:
  std::map<std::string, ad::Parameter<Real>> slots_;
};

namespace detail {

// Gate layout [i|f|g|o]; start the forget gate open.
template <typename Real>
void boost_forget_bias(ad::Parameter<Real>& bias, int hidden) {
  for (int j = 0; j < hidden; ++j) bias.value.at(0, hidden + j) += Real(1);
}

}  // namespace detail

template <typename Real>
ParamStore<Real> init_pointer_gen_params(const PointerGenConfig& cfg, uint64_t seed) {
  if (cfg.vocab_size <= 0) throw ArgumentError("pointer generator needs vocab_size > 0");
  ParamStore<Real> ps;
  const int E = cfg.embedding_dim, H = cfg.hidden_dim, A = cfg.attention_dim ? cfg.attention_dim : H;
  const int V = cfg.vocab_size;
  ps.create("embed", V, E);
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    int in = l == 0 ? E : 2 * H;
    for (const char* dir : {"f", "b"}) {
      std::string p = "enc" + std::to_string(l) + "." + dir;
      ps.create(p + ".wx", in, 4 * H);
      ps.create(p + ".wh", H, 4 * H);
      ps.create(p + ".bias", 1, 4 * H);
    }
  }
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    std::string p = "dec" + std::to_string(l);
    ps.create(p + ".wx", l == 0 ? E : H, 4 * H);
    ps.create(p + ".wh", H, 4 * H);
    ps.create(p + ".bias", 1, 4 * H);
    ps.create("bridge" + std::to_string(l) + ".wh", 2 * H, H);
    ps.create("bridge" + std::to_string(l) + ".bh", 1, H);
    ps.create("bridge" + std::to_string(l) + ".wc", 2 * H, H);
    ps.create("bridge" + std::to_string(l) + ".bc", 1, H);
  }
  ps.create("attn.wh", 2 * H, A);
  ps.create("attn.ws", H, A);
  ps.create("attn.b", 1, A);
  ps.create("attn.v", A, 1);
  ps.create("out.w", 3 * H, V);
  ps.create("out.b", 1, V);
  if (cfg.copy_enabled) {
    ps.create("ptr.w", 3 * H + E, 1);
    ps.create("ptr.b", 1, 1);
  }
  ps.init_uniform(seed);
  for (int l = 0; l < cfg.encoder_layers; ++l)
    for (const char* dir : {"f", "b"})
      detail::boost_forget_bias(ps.at("enc" + std::to_string(l) + "." + dir + ".bias"), H);
  for (int l = 0; l < cfg.decoder_layers; ++l)
    detail::boost_forget_bias(ps.at("dec" + std::to_string(l) + ".bias"), H);
  return ps;
}

template <typename Real>
ParamStore<Real> init_tagger_params(const TaggerConfig& cfg, uint64_t seed) {
  if (cfg.vocab_size <= 0) throw ArgumentError("tagger needs vocab_size > 0");
  ParamStore<Real> ps;
  const int E = cfg.embedding_dim, H = cfg.hidden_dim;
  ps.create("embed", cfg.vocab_size, E);
  for (int l = 0; l < cfg.layers; ++l) {
    int in = l == 0 ? E : 2 * H;
    for (const char* dir : {"f", "b"}) {
      std::string p = "enc" + std::to_string(l) + "." + dir;
      ps.create(p + ".wx", in, 4 * H);
      ps.create(p + ".wh", H, 4 * H);
      ps.create(p + ".bias", 1, 4 * H);
    }
  }
  ps.create("tag.w", 2 * H, kNumTagLabels);
  ps.create("tag.b", 1, kNumTagLabels);
  ps.init_uniform(seed);
  for (int l = 0; l < cfg.layers; ++l)
    for (const char* dir : {"f", "b"})
      detail::boost_forget_bias(ps.at("enc" + std::to_string(l) + "." + dir + ".bias"), H);
  return ps;
}

// ---------------------------------------------------------------------------
// shared forward machinery
// ---------------------------------------------------------------------------

template <typename Real>
struct Ctx {
  ad::Graph<Real>& g;
  ParamStore<Real>& params;
  bool train = false;
  Rng* dropout_rng = nullptr;

  Ctx(ad::Graph<Real>& graph, ParamStore<Real>& store, bool training = false,
      Rng* drop = nullptr)
      : g(graph), params(store), train(training), dropout_rng(drop) {}

  ad::Node<Real>* P(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    ad::Node<Real>* n =
        train ? g.param(params.at(name)) : g.constant_ref(&params.at(name).value);
    cache_.emplace(name, n);
    return n;
  }

 private:
  std::map<std::string, ad::Node<Real>*> cache_;
};

template <typename Real>
struct EncoderOut {
  ad::Node<Real>* hflat = nullptr;    // (T*B) x 2H, row t*B + b
  ad::Node<Real>* h_final = nullptr;  // B x 2H: forward final ‖ backward final
  int T = 0;
  int B = 0;
};

// Stacked bidirectional LSTM over a padded time-major id block. The backward
// direction scans per-example reversed sequences, which keeps pad rows out of
// the real prefix; pad positions are masked downstream by attention/loss.
template <typename Real>
EncoderOut<Real> bilstm_encode(Ctx<Real>& ctx, const std::vector<int>& src_flat,
                               const std::vector<int>& lens, int B, int T, int layers,
                               int hidden, double dropout_prob) {
  if (B < 1 || T < 1 || static_cast<int>(src_flat.size()) != T * B)
    throw ArgumentError("bilstm_encode: bad batch layout");
  ad::Graph<Real>& g = ctx.g;
  const int H = hidden;

  // scan index s of example b reads source position lens[b]-1-s
  std::vector<int> rev_map(static_cast<size_t>(T) * B);
  for (int t = 0; t < T; ++t)
    for (int b = 0; b < B; ++b)
      rev_map[static_cast<size_t>(t) * B + b] =
          t < lens[b] ? (lens[b] - 1 - t) * B + b : t * B + b;
  std::vector<int> final_rows(B);
  for (int b = 0; b < B; ++b) final_rows[b] = (lens[b] - 1) * B + b;

  std::vector<int> bwd_ids(src_flat.size());
  for (size_t i = 0; i < src_flat.size(); ++i) bwd_ids[i] = src_flat[rev_map[i]];

  auto run_direction = [&](ad::Node<Real>* x, const std::string& prefix)
      -> std::pair<ad::Node<Real>*, ad::Node<Real>*> {
    ad::Node<Real>* gx = ad::add(
        g, ad::matmul(g, x, ctx.P(prefix + ".wx")), ad::tile_rows(g, ctx.P(prefix + ".bias"), T * B));
    ad::Node<Real>* h = g.constant(ad::Tensor<Real>(B, H));
    ad::Node<Real>* c = g.constant(ad::Tensor<Real>(B, H));
    ad::Node<Real>* wh = ctx.P(prefix + ".wh");
    std::vector<ad::Node<Real>*> steps;
    steps.reserve(T);
    for (int t = 0; t < T; ++t) {
      ad::Node<Real>* gates =
          ad::add(g, ad::slice_rows(g, gx, t * B, B), ad::matmul(g, h, wh));
      ad::Node<Real>* hc = ad::lstm_cell(g, gates, c);
      h = ad::slice_cols(g, hc, 0, H);
      c = ad::slice_cols(g, hc, H, 2 * H);
      steps.push_back(h);
    }
    ad::Node<Real>* stacked = ad::concat_rows(g, steps);       // (T*B) x H, scan order
    ad::Node<Real>* final_h = ad::gather(g, stacked, final_rows);  // B x H
    return {stacked, final_h};
  };

  ad::Node<Real>* embed = ctx.P("embed");
  ad::Node<Real>* layer_in_fwd = ad::gather(g, embed, src_flat);
  ad::Node<Real>* layer_in_bwd = ad::gather(g, embed, bwd_ids);

  ad::Node<Real>* hflat = nullptr;
  ad::Node<Real>* h_final = nullptr;
  for (int l = 0; l < layers; ++l) {
    if (l > 0) {
      if (ctx.train && dropout_prob > 0 && ctx.dropout_rng)
        hflat = ad::dropout(g, hflat, dropout_prob, *ctx.dropout_rng);
      layer_in_fwd = hflat;
      layer_in_bwd = ad::gather(g, hflat, rev_map);
    }
    std::string base = "enc" + std::to_string(l);
    auto [fwd_stack, fwd_final] = run_direction(layer_in_fwd, base + ".f");
    auto [bwd_stack, bwd_final] = run_direction(layer_in_bwd, base + ".b");
    ad::Node<Real>* bwd_by_pos = ad::gather(g, bwd_stack, rev_map);
    hflat = ad::concat_cols<Real>(g, {fwd_stack, bwd_by_pos});
    h_final = ad::concat_cols<Real>(g, {fwd_final, bwd_final});
  }
  return EncoderOut<Real>{hflat, h_final, T, B};
}

// Additive attention score mask: 0 inside each example, a large negative
// constant on padding.
template <typename Real>
ad::Tensor<Real> attention_mask(const std::vector<int>& lens, int T) {
  ad::Tensor<Real> mask(static_cast<int>(lens.size()), T);
  for (int b = 0; b < mask.rows; ++b)
    for (int t = 0; t < T; ++t)
      if (t >= lens[b]) mask.at(b, t) = Real(-1e30);
  return mask;
}

// ---------------------------------------------------------------------------
// pointer-generator
// ---------------------------------------------------------------------------

template <typename Real>
struct PgBatch {
  int B = 0, T = 0, S = 0;
  std::vector<int> src_flat;      // (T*B), vocab ids
  std::vector<int> src_ext_flat;  // (T*B), extended ids (pad -> pad id)
  std::vector<int> lens;          // B
  std::vector<int> prev_flat;     // (S*B), decoder inputs (<bos> + shifted gold, ext -> unk)
  std::vector<int> gold_flat;     // (S*B), extended target ids
  std::vector<Real> step_weight;  // (S*B): 1/(target_len_b * B) inside, 0 on pad
  std::vector<int> scatter_ids;   // (B*T) row-major per-row extended ids
  int max_oov = 0;
  long long target_tokens = 0;
};

template <typename Real>
PgBatch<Real> make_pg_batch(const std::vector<const textproc::SeqGenExample*>& examples,
                            int vocab_size, bool copy_enabled) {
  PgBatch<Real> batch;
  const int B = static_cast<int>(examples.size());
  if (B == 0) throw ArgumentError("make_pg_batch: empty batch");
  batch.B = B;
  for (const auto* ex : examples) {
    batch.T = std::max(batch.T, static_cast<int>(ex->source_ids.size()));
    batch.S = std::max(batch.S, static_cast<int>(ex->target_ids.size()));
    batch.max_oov = std::max(batch.max_oov, static_cast<int>(ex->oov_list.size()));
  }
  if (!copy_enabled) batch.max_oov = 0;
  const int pad = textproc::Vocabulary::kPad;
  batch.src_flat.assign(static_cast<size_t>(batch.T) * B, pad);
  batch.src_ext_flat.assign(static_cast<size_t>(batch.T) * B, pad);
  batch.prev_flat.assign(static_cast<size_t>(batch.S) * B, pad);
  batch.gold_flat.assign(static_cast<size_t>(batch.S) * B, pad);
  batch.step_weight.assign(static_cast<size_t>(batch.S) * B, Real(0));
  batch.scatter_ids.assign(static_cast<size_t>(B) * batch.T, pad);
  for (int b = 0; b < B; ++b) {
    const auto& ex = *examples[b];
    const int Tb = static_cast<int>(ex.source_ids.size());
    batch.lens.push_back(Tb);
    for (int t = 0; t < Tb; ++t) {
      batch.src_flat[static_cast<size_t>(t) * B + b] = ex.source_ids[t];
      int ext = copy_enabled ? ex.source_ext_ids[t] : ex.source_ids[t];
      batch.src_ext_flat[static_cast<size_t>(t) * B + b] = ext;
      batch.scatter_ids[static_cast<size_t>(b) * batch.T + t] = ext;
    }
    const int Sb = static_cast<int>(ex.target_ids.size());
    batch.target_tokens += Sb;
    for (int s = 0; s < Sb; ++s) {
      int gold = ex.target_ids[s];
      if (!copy_enabled && gold >= vocab_size) gold = textproc::Vocabulary::kUnk;
      batch.gold_flat[static_cast<size_t>(s) * B + b] = gold;
      int prev = s == 0 ? textproc::Vocabulary::kBos : examples[b]->target_ids[s - 1];
      if (prev >= vocab_size) prev = textproc::Vocabulary::kUnk;  // oov fed back as unk
      batch.prev_flat[static_cast<size_t>(s) * B + b] = prev;
      batch.step_weight[static_cast<size_t>(s) * B + b] = Real(1) / (Real(Sb) * Real(B));
    }
  }
  return batch;
}

// One decoder step over the graph; shared by training, stepping and tests.
template <typename Real>
struct PgStepNodes {
  ad::Node<Real>* final_dist = nullptr;  // B x (V + max_oov)
  ad::Node<Real>* attn = nullptr;        // B x T
  ad::Node<Real>* p_gen = nullptr;       // B x 1 (null when copy disabled)
  ad::Node<Real>* gen_dist = nullptr;    // B x V
};

template <typename Real>
struct PgDecoderState {
  std::vector<ad::Node<Real>*> h;  // per layer, B x H
  std::vector<ad::Node<Real>*> c;
};

template <typename Real>
PgStepNodes<Real> pg_decode_step(Ctx<Real>& ctx, const PointerGenConfig& cfg,
                                 PgDecoderState<Real>& state, ad::Node<Real>* x_emb,
                                 ad::Node<Real>* hflat, ad::Node<Real>* preh,
                                 ad::Node<Real>* score_mask, const std::vector<int>& scatter_ids,
                                 int max_oov, int T) {
  ad::Graph<Real>& g = ctx.g;
  const int H = cfg.hidden_dim;
  const int B = x_emb->rows();

  ad::Node<Real>* layer_x = x_emb;
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    std::string p = "dec" + std::to_string(l);
    ad::Node<Real>* gates = ad::add(
        g,
        ad::add(g, ad::matmul(g, layer_x, ctx.P(p + ".wx")), ad::matmul(g, state.h[l], ctx.P(p + ".wh"))),
        ad::tile_rows(g, ctx.P(p + ".bias"), B));
    ad::Node<Real>* hc = ad::lstm_cell(g, gates, state.c[l]);
    state.h[l] = ad::slice_cols(g, hc, 0, H);
    state.c[l] = ad::slice_cols(g, hc, H, 2 * H);
    layer_x = state.h[l];
  }
  ad::Node<Real>* s_top = state.h[cfg.decoder_layers - 1];

  // additive attention
  ad::Node<Real>* q = ad::matmul(g, s_top, ctx.P("attn.ws"));
  ad::Node<Real>* scores = ad::matmul(
      g, ad::tanh_op(g, ad::add(g, preh, ad::tile_rows(g, q, T))), ctx.P("attn.v"));
  ad::Node<Real>* sc = ad::fold_time(g, scores, B);
  if (score_mask) sc = ad::add(g, sc, score_mask);
  ad::Node<Real>* attn = ad::softmax(g, sc, 1);
  ad::Node<Real>* context = ad::attention_context(g, attn, hflat);

  ad::Node<Real>* feat = ad::concat_cols<Real>(g, {s_top, context});
  if (ctx.train && cfg.dropout_prob > 0 && ctx.dropout_rng)
    feat = ad::dropout(g, feat, cfg.dropout_prob, *ctx.dropout_rng);
  ad::Node<Real>* logits =
      ad::add(g, ad::matmul(g, feat, ctx.P("out.w")), ad::tile_rows(g, ctx.P("out.b"), B));
  ad::Node<Real>* gen = ad::softmax(g, logits, 1);

  PgStepNodes<Real> out;
  out.attn = attn;
  out.gen_dist = gen;
  if (!cfg.copy_enabled) {
    out.final_dist = gen;
    return out;
  }

  ad::Node<Real>* gate_in = ad::concat_cols<Real>(g, {context, s_top, x_emb});
  ad::Node<Real>* p_gen = ad::sigmoid(
      g, ad::add(g, ad::matmul(g, gate_in, ctx.P("ptr.w")), ad::tile_rows(g, ctx.P("ptr.b"), B)));
  out.p_gen = p_gen;

  const int V = cfg.vocab_size;
  ad::Node<Real>* gen_scaled = ad::mul(g, gen, ad::repeat_cols(g, p_gen, V));
  ad::Node<Real>* ones = g.constant(ad::Tensor<Real>(B, 1, Real(1)));
  ad::Node<Real>* copy_gate = ad::sub(g, ones, p_gen);
  ad::Node<Real>* copy_w = ad::mul(g, attn, ad::repeat_cols(g, copy_gate, T));
  ad::Node<Real>* copy_dist = ad::scatter_add(g, copy_w, scatter_ids, V + max_oov);
  ad::Node<Real>* gen_padded =
      max_oov == 0 ? gen_scaled
                   : ad::concat_cols<Real>(g, {gen_scaled, g.constant(ad::Tensor<Real>(B, max_oov))});
  out.final_dist = ad::add(g, gen_padded, copy_dist);
  return out;
}

inline constexpr double kProbFloor = 1e-12;

// Teacher-forced mean NLL: per-example token mean, averaged over the batch.
template <typename Real>
ad::Node<Real>* pg_batch_loss(Ctx<Real>& ctx, const PointerGenConfig& cfg,
                              const PgBatch<Real>& batch) {
  ad::Graph<Real>& g = ctx.g;
  EncoderOut<Real> enc = bilstm_encode(ctx, batch.src_flat, batch.lens, batch.B, batch.T,
                                       cfg.encoder_layers, cfg.hidden_dim, cfg.dropout_prob);
  ad::Node<Real>* preh = ad::add(g, ad::matmul(g, enc.hflat, ctx.P("attn.wh")),
                                 ad::tile_rows(g, ctx.P("attn.b"), batch.T * batch.B));
  ad::Node<Real>* mask = g.constant(attention_mask<Real>(batch.lens, batch.T));

  PgDecoderState<Real> state;
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    std::string b = "bridge" + std::to_string(l);
    state.h.push_back(ad::tanh_op(
        g, ad::add(g, ad::matmul(g, enc.h_final, ctx.P(b + ".wh")),
                   ad::tile_rows(g, ctx.P(b + ".bh"), batch.B))));
    state.c.push_back(ad::tanh_op(
        g, ad::add(g, ad::matmul(g, enc.h_final, ctx.P(b + ".wc")),
                   ad::tile_rows(g, ctx.P(b + ".bc"), batch.B))));
  }

  ad::Node<Real>* emb_all = ad::gather(g, ctx.P("embed"), batch.prev_flat);
  ad::Node<Real>* loss = nullptr;
  for (int s = 0; s < batch.S; ++s) {
    ad::Node<Real>* x_emb = ad::slice_rows(g, emb_all, s * batch.B, batch.B);
    PgStepNodes<Real> step = pg_decode_step(ctx, cfg, state, x_emb, enc.hflat, preh, mask,
                                            batch.scatter_ids, batch.max_oov, batch.T);
    std::vector<int> ids(batch.B);
    std::vector<Real> w(batch.B);
    for (int b = 0; b < batch.B; ++b) {
      ids[b] = batch.gold_flat[static_cast<size_t>(s) * batch.B + b];
      w[b] = batch.step_weight[static_cast<size_t>(s) * batch.B + b];
    }
    ad::Node<Real>* step_loss = ad::nll_pick(g, step.final_dist, ids, w, Real(kProbFloor));
    loss = loss ? ad::add(g, loss, step_loss) : step_loss;
  }
  return loss;
}

// ---------------------------------------------------------------------------
// single-document sessions (decode-time)
// ---------------------------------------------------------------------------

template <typename Real>
struct PgEncodedDoc {
  ad::Tensor<Real> hflat;  // T x 2H
  ad::Tensor<Real> preh;   // T x A
  std::vector<ad::Tensor<Real>> h0, c0;  // per decoder layer, 1 x H
  int T = 0;
};

template <typename Real>
PgEncodedDoc<Real> pg_encode_doc(ParamStore<Real>& params, const PointerGenConfig& cfg,
                                 const textproc::SeqGenExample& ex) {
  if (ex.source_ids.empty()) throw ArgumentError("pg_encode_doc: empty source");
  ad::Graph<Real> g;
  Ctx<Real> ctx{g, params, false, nullptr};
  std::vector<int> lens{static_cast<int>(ex.source_ids.size())};
  EncoderOut<Real> enc =
      bilstm_encode(ctx, ex.source_ids, lens, 1, lens[0], cfg.encoder_layers, cfg.hidden_dim, 0.0);
  ad::Node<Real>* preh = ad::add(g, ad::matmul(g, enc.hflat, ctx.P("attn.wh")),
                                 ad::tile_rows(g, ctx.P("attn.b"), lens[0]));
  PgEncodedDoc<Real> out;
  out.T = lens[0];
  out.hflat = enc.hflat->value();
  out.preh = preh->value();
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    std::string b = "bridge" + std::to_string(l);
    out.h0.push_back(ad::tanh_op(g, ad::add(g, ad::matmul(g, enc.h_final, ctx.P(b + ".wh")),
                                            ctx.P(b + ".bh")))
                         ->value());
    out.c0.push_back(ad::tanh_op(g, ad::add(g, ad::matmul(g, enc.h_final, ctx.P(b + ".wc")),
                                            ctx.P(b + ".bc")))
                         ->value());
  }
  return out;
}

// Beam-friendly stepping session: hypotheses form the batch dimension.
template <typename Real>
class PgSession {
 public:
  struct State {
    std::vector<ad::Tensor<Real>> h, c;  // per layer, 1 x H
  };

  struct StepOut {
    std::vector<double> dist;       // width()
    std::vector<double> gen;        // vocab_size
    std::vector<double> copy_mass;  // width(), raw attention mass per token
    std::vector<double> attn;       // T
    double p_gen = 1.0;
    State state;
  };

  PgSession(ParamStore<Real>& params, const PointerGenConfig& cfg,
            const textproc::SeqGenExample& ex)
      : params_(params), cfg_(cfg), enc_(pg_encode_doc(params, cfg, ex)) {
    cfg_.normalize();
    max_oov_ = cfg_.copy_enabled ? static_cast<int>(ex.oov_list.size()) : 0;
    if (cfg_.copy_enabled) scatter_row_ = ex.source_ext_ids;
  }

  int width() const { return cfg_.vocab_size + max_oov_; }
  int source_len() const { return enc_.T; }
  int vocab_size() const { return cfg_.vocab_size; }

  State init_state() const {
    State s;
    s.h = enc_.h0;
    s.c = enc_.c0;
    return s;
  }

  std::vector<StepOut> step_batch(const std::vector<const State*>& states,
                                  const std::vector<int>& prev_ids) {
    const int K = static_cast<int>(states.size());
    if (K == 0 || prev_ids.size() != states.size())
      throw ArgumentError("step_batch: state/id mismatch");
    const int H = cfg_.hidden_dim;
    const int T = enc_.T;

    ad::Graph<Real> g;
    Ctx<Real> ctx{g, params_, false, nullptr};

    std::vector<int> emb_ids(K);
    for (int k = 0; k < K; ++k)
      emb_ids[k] = prev_ids[k] >= cfg_.vocab_size ? textproc::Vocabulary::kUnk : prev_ids[k];
    ad::Node<Real>* x_emb = ad::gather(g, ctx.P("embed"), emb_ids);

    PgDecoderState<Real> st;
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      ad::Tensor<Real> h(K, H), c(K, H);
      for (int k = 0; k < K; ++k) {
        std::copy(states[k]->h[l].data.begin(), states[k]->h[l].data.end(), h.row(k));
        std::copy(states[k]->c[l].data.begin(), states[k]->c[l].data.end(), c.row(k));
      }
      st.h.push_back(g.constant(std::move(h)));
      st.c.push_back(g.constant(std::move(c)));
    }

    // encoder tensors expanded to K rows (time-major: row t*K + k)
    ad::Node<Real>* hflat = g.constant(repeated_for(enc_.hflat, K));
    ad::Node<Real>* preh = g.constant(repeated_for(enc_.preh, K));

    std::vector<int> scatter_ids;
    if (cfg_.copy_enabled) {
      scatter_ids.resize(static_cast<size_t>(K) * T);
      for (int k = 0; k < K; ++k)
        std::copy(scatter_row_.begin(), scatter_row_.end(),
                  scatter_ids.begin() + static_cast<size_t>(k) * T);
    }

    PgStepNodes<Real> step = pg_decode_step(ctx, cfg_, st, x_emb, hflat, preh,
                                            static_cast<ad::Node<Real>*>(nullptr), scatter_ids,
                                            max_oov_, T);

    std::vector<StepOut> outs(K);
    const int W = width();
    for (int k = 0; k < K; ++k) {
      StepOut& o = outs[k];
      o.dist.assign(W, 0.0);
      for (int wj = 0; wj < W; ++wj) o.dist[wj] = static_cast<double>(step.final_dist->value().at(k, wj));
      o.gen.assign(cfg_.vocab_size, 0.0);
      for (int wj = 0; wj < cfg_.vocab_size; ++wj)
        o.gen[wj] = static_cast<double>(step.gen_dist->value().at(k, wj));
      o.attn.assign(T, 0.0);
      for (int t = 0; t < T; ++t) o.attn[t] = static_cast<double>(step.attn->value().at(k, t));
      if (cfg_.copy_enabled) {
        o.p_gen = static_cast<double>(step.p_gen->value().at(k, 0));
        o.copy_mass.assign(W, 0.0);
        for (int t = 0; t < T; ++t) o.copy_mass[scatter_row_[t]] += o.attn[t];
      }
      o.state.h.resize(cfg_.decoder_layers);
      o.state.c.resize(cfg_.decoder_layers);
      for (int l = 0; l < cfg_.decoder_layers; ++l) {
        o.state.h[l] = ad::Tensor<Real>(1, H);
        o.state.c[l] = ad::Tensor<Real>(1, H);
        std::copy(st.h[l]->value().row(k), st.h[l]->value().row(k) + H, o.state.h[l].row(0));
        std::copy(st.c[l]->value().row(k), st.c[l]->value().row(k) + H, o.state.c[l].row(0));
      }
    }
    return outs;
  }

  const PointerGenConfig& config() const { return cfg_; }

 private:
  static ad::Tensor<Real> repeated_for(const ad::Tensor<Real>& x, int k) {
    return ad::repeated_rows(x, k);  // row t -> rows t*k .. t*k+k-1
  }

  ParamStore<Real>& params_;
  PointerGenConfig cfg_;
  PgEncodedDoc<Real> enc_;
  int max_oov_ = 0;
  std::vector<int> scatter_row_;
};

// ---------------------------------------------------------------------------
// BiLSTM softmax tagger baseline
// ---------------------------------------------------------------------------

template <typename Real>
struct TaggerBatch {
  int B = 0, T = 0;
  std::vector<int> src_flat;   // (T*B)
  std::vector<int> lens;
  std::vector<int> gold_flat;  // (T*B), label ids
  std::vector<Real> weight;    // (T*B)
};

template <typename Real>
TaggerBatch<Real> make_tagger_batch(const std::vector<const std::vector<int>*>& id_seqs,
                                    const std::vector<const std::vector<int>*>& label_seqs) {
  TaggerBatch<Real> batch;
  batch.B = static_cast<int>(id_seqs.size());
  if (batch.B == 0) throw ArgumentError("make_tagger_batch: empty batch");
  for (const auto* s : id_seqs) batch.T = std::max(batch.T, static_cast<int>(s->size()));
  batch.src_flat.assign(static_cast<size_t>(batch.T) * batch.B, textproc::Vocabulary::kPad);
  batch.gold_flat.assign(static_cast<size_t>(batch.T) * batch.B, 0);
  batch.weight.assign(static_cast<size_t>(batch.T) * batch.B, Real(0));
  for (int b = 0; b < batch.B; ++b) {
    const auto& ids = *id_seqs[b];
    const auto& labels = *label_seqs[b];
    if (ids.size() != labels.size()) throw ArgumentError("make_tagger_batch: id/label mismatch");
    batch.lens.push_back(static_cast<int>(ids.size()));
    for (size_t t = 0; t < ids.size(); ++t) {
      batch.src_flat[t * batch.B + b] = ids[t];
      batch.gold_flat[t * batch.B + b] = labels[t];
      batch.weight[t * batch.B + b] = Real(1) / (Real(ids.size()) * Real(batch.B));
    }
  }
  return batch;
}

template <typename Real>
ad::Node<Real>* tagger_batch_loss(Ctx<Real>& ctx, const TaggerConfig& cfg,
                                  const TaggerBatch<Real>& batch) {
  ad::Graph<Real>& g = ctx.g;
  EncoderOut<Real> enc = bilstm_encode(ctx, batch.src_flat, batch.lens, batch.B, batch.T,
                                       cfg.layers, cfg.hidden_dim, cfg.dropout_prob);
  ad::Node<Real>* feat = enc.hflat;
  if (ctx.train && cfg.dropout_prob > 0 && ctx.dropout_rng)
    feat = ad::dropout(g, feat, cfg.dropout_prob, *ctx.dropout_rng);
  ad::Node<Real>* logits = ad::add(g, ad::matmul(g, feat, ctx.P("tag.w")),
                                   ad::tile_rows(g, ctx.P("tag.b"), batch.T * batch.B));
  ad::Node<Real>* dist = ad::softmax(g, logits, 1);
  return ad::nll_pick(g, dist, batch.gold_flat, batch.weight, Real(kProbFloor));
}

// Per-token label distributions for one document (rows = positions).
template <typename Real>
ad::Tensor<Real> tagger_forward_dist(ParamStore<Real>& params, const TaggerConfig& cfg,
                                     const std::vector<int>& ids) {
  if (ids.empty()) throw ArgumentError("tagger_forward_dist: empty source");
  ad::Graph<Real> g;
  Ctx<Real> ctx{g, params, false, nullptr};
  std::vector<int> lens{static_cast<int>(ids.size())};
  EncoderOut<Real> enc = bilstm_encode(ctx, ids, lens, 1, lens[0], cfg.layers, cfg.hidden_dim, 0.0);
  ad::Node<Real>* logits = ad::add(g, ad::matmul(g, enc.hflat, ctx.P("tag.w")),
                                   ad::tile_rows(g, ctx.P("tag.b"), lens[0]));
  return ad::softmax(g, logits, 1)->value();
}

// Greedy per-token argmax followed by BILOU repair.
template <typename Real>
std::vector<Tag> tagger_predict(ParamStore<Real>& params, const TaggerConfig& cfg,
                                const std::vector<int>& ids) {
  ad::Tensor<Real> dist = tagger_forward_dist(params, cfg, ids);
  std::vector<Tag> tags;
  tags.reserve(ids.size());
  for (int r = 0; r < dist.rows; ++r) {
    int best = 0;
    Real bv = dist.at(r, 0);
    for (int c = 1; c < dist.cols; ++c)
      if (dist.at(r, c) > bv) {
        bv = dist.at(r, c);
        best = c;
      }
    tags.push_back(label_id_to_tag(best));
  }
  return bilou_repair(tags);
}

}  // namespace seqner::model
