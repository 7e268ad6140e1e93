#include "dycklab/models.hpp"

#include <algorithm>
#include <cmath>

namespace dycklab {

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRnnTanh: return "rnn_tanh";
    case ModelKind::kRnnRelu: return "rnn_relu";
    case ModelKind::kLstm: return "lstm";
    case ModelKind::kTransformer: return "transformer";
  }
  throw ConfigError("unknown model kind");
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "rnn_tanh") return ModelKind::kRnnTanh;
  if (name == "rnn_relu") return ModelKind::kRnnRelu;
  if (name == "lstm") return ModelKind::kLstm;
  if (name == "transformer") return ModelKind::kTransformer;
  throw ConfigError("unknown model kind '" + name + "'");
}

void ModelConfig::validate() const {
  if (hidden < 4 || hidden > 256)
    throw ConfigError("hidden size must lie in [4, 256]");
  if (layers < 1 || layers > 2) throw ConfigError("layers must lie in [1, 2]");
  if (vocab_size < 2) throw ConfigError("vocab size must be >= 2");
  if (kind == ModelKind::kTransformer) {
    if (heads < 1 || heads > 4) throw ConfigError("heads must lie in [1, 4]");
    if (hidden % heads != 0)
      throw ConfigError("hidden must be divisible by heads");
    if (max_positions < 1) throw ConfigError("max_positions must be >= 1");
  }
}

SequenceModel::SequenceModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  const int H = cfg_.hidden, V = cfg_.vocab_size;
  const double k = 1.0 / std::sqrt(static_cast<double>(H));
  auto weight = [&](const std::string& name, int r, int c) {
    params_.emplace_back(name, Tensor::uniform(r, c, -k, k, rng, true));
  };
  auto zeros = [&](const std::string& name, int r, int c, double fill = 0.0) {
    Tensor t = Tensor::zeros(r, c, true);
    if (fill != 0.0)
      std::fill(t.data().begin(), t.data().end(), fill);
    params_.emplace_back(name, t);
  };
  switch (cfg_.kind) {
    case ModelKind::kRnnTanh:
    case ModelKind::kRnnRelu:
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string pre = "l" + std::to_string(l) + ".";
        weight(pre + "Wx", l == 0 ? V : H, H);
        weight(pre + "Wh", H, H);
        zeros(pre + "b", 1, H);
      }
      break;
    case ModelKind::kLstm:
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string pre = "l" + std::to_string(l) + ".";
        weight(pre + "Wx", l == 0 ? V : H, 4 * H);
        weight(pre + "Wh", H, 4 * H);
        zeros(pre + "b", 1, 4 * H);
      }
      break;
    case ModelKind::kTransformer:
      weight("tok", V, H);
      weight("pos", cfg_.max_positions, H);
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string pre = "l" + std::to_string(l) + ".";
        weight(pre + "attn.Wqkv", H, 3 * H);
        zeros(pre + "attn.bqkv", 1, 3 * H);
        weight(pre + "attn.Wo", H, H);
        zeros(pre + "attn.bo", 1, H);
        zeros(pre + "ln1.g", 1, H, 1.0);
        zeros(pre + "ln1.b", 1, H);
        weight(pre + "ffn.W1", H, 4 * H);
        zeros(pre + "ffn.b1", 1, 4 * H);
        weight(pre + "ffn.W2", 4 * H, H);
        zeros(pre + "ffn.b2", 1, H);
        zeros(pre + "ln2.g", 1, H, 1.0);
        zeros(pre + "ln2.b", 1, H);
      }
      break;
  }
  weight("out.W", H, V);
  zeros("out.b", 1, V);
}

Tensor& SequenceModel::param(const std::string& name) {
  for (auto& [n, t] : params_)
    if (n == name) return t;
  throw InputError("no parameter named '" + name + "'");
}

const Tensor& SequenceModel::p(const std::string& name) const {
  for (const auto& [n, t] : params_)
    if (n == name) return t;
  throw InputError("no parameter named '" + name + "'");
}

namespace {

void check_batch(const std::vector<const TokenSeq*>& batch, int vocab) {
  if (batch.empty()) throw InputError("forward: empty batch");
  for (const TokenSeq* w : batch) {
    if (!w || w->empty()) throw InputError("forward: empty token sequence");
    for (int t : *w)
      if (t < 0 || t >= vocab)
        throw InputError("forward: token out of vocabulary range");
  }
}

}  // namespace

SequenceModel::TrainForward SequenceModel::run_recurrent(
    const std::vector<const TokenSeq*>& batch, bool want_states) const {
  check_batch(batch, cfg_.vocab_size);
  const int B = static_cast<int>(batch.size());
  const int H = cfg_.hidden;
  size_t t_max = 0;
  for (const TokenSeq* w : batch) t_max = std::max(t_max, w->size());
  const bool is_lstm = cfg_.kind == ModelKind::kLstm;

  std::vector<Tensor> h(cfg_.layers), c(cfg_.layers);
  for (int l = 0; l < cfg_.layers; ++l) {
    h[l] = Tensor::zeros(B, H);
    if (is_lstm) c[l] = Tensor::zeros(B, H);
  }

  TrainForward out;
  out.step_grid = true;
  out.preds.reserve(t_max);
  for (size_t t = 0; t < t_max; ++t) {
    std::vector<int> ids(B, 0);
    for (int b = 0; b < B; ++b)
      if (t < batch[b]->size()) ids[b] = (*batch[b])[t];
    for (int l = 0; l < cfg_.layers; ++l) {
      std::string pre = "l" + std::to_string(l) + ".";
      Tensor zx = l == 0 ? embedding(p(pre + "Wx"), ids)
                         : matmul(h[l - 1], p(pre + "Wx"));
      Tensor z = add(add(zx, matmul(h[l], p(pre + "Wh"))), p(pre + "b"));
      if (is_lstm) {
        Tensor gi = logistic(slice_cols(z, 0, H));
        Tensor gf = logistic(slice_cols(z, H, 2 * H));
        Tensor gg = tanh_op(slice_cols(z, 2 * H, 3 * H));
        Tensor go = logistic(slice_cols(z, 3 * H, 4 * H));
        c[l] = add(mul(gf, c[l]), mul(gi, gg));
        h[l] = mul(go, tanh_op(c[l]));
      } else if (cfg_.kind == ModelKind::kRnnTanh) {
        h[l] = tanh_op(z);
      } else {
        h[l] = relu(z);
      }
    }
    out.preds.push_back(logistic(add(matmul(h.back(), p("out.W")), p("out.b"))));
    if (want_states) {
      out.hidden.push_back(h.back());
      if (is_lstm) out.cell.push_back(c.back());
    }
  }
  return out;
}

Tensor SequenceModel::transformer_one(const TokenSeq& seq) const {
  const int T = static_cast<int>(seq.size());
  const int H = cfg_.hidden, dh = H / cfg_.heads;
  if (cfg_.use_positional && T > cfg_.max_positions)
    throw LengthError("sequence length " + std::to_string(T) +
                      " exceeds the positional table of " +
                      std::to_string(cfg_.max_positions));
  Tensor x = embedding(p("tok"), seq);
  if (cfg_.use_positional) {
    std::vector<int> pos_ids(T);
    for (int t = 0; t < T; ++t) pos_ids[t] = t;
    x = add(x, embedding(p("pos"), pos_ids));
  }
  // Additive causal mask: position i may attend to j <= i.
  Tensor mask = Tensor::zeros(T, T);
  for (int i = 0; i < T; ++i)
    for (int j = i + 1; j < T; ++j)
      mask.data()[static_cast<size_t>(i) * T + j] = -1e9;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = 0; l < cfg_.layers; ++l) {
    std::string pre = "l" + std::to_string(l) + ".";
    Tensor qkv =
        add(matmul(x, p(pre + "attn.Wqkv")), p(pre + "attn.bqkv"));
    Tensor ctx;
    for (int hd = 0; hd < cfg_.heads; ++hd) {
      Tensor q = slice_cols(qkv, hd * dh, (hd + 1) * dh);
      Tensor k = slice_cols(qkv, H + hd * dh, H + (hd + 1) * dh);
      Tensor v = slice_cols(qkv, 2 * H + hd * dh, 2 * H + (hd + 1) * dh);
      Tensor att = softmax_rows(
          add(scale(matmul(q, k, false, true), inv_sqrt_dh), mask));
      Tensor head = matmul(att, v);
      ctx = ctx.defined() ? concat_cols(ctx, head) : head;
    }
    Tensor attn_out = add(matmul(ctx, p(pre + "attn.Wo")), p(pre + "attn.bo"));
    x = layer_norm(add(x, attn_out), p(pre + "ln1.g"), p(pre + "ln1.b"));
    Tensor ffn = add(
        matmul(relu(add(matmul(x, p(pre + "ffn.W1")), p(pre + "ffn.b1"))),
               p(pre + "ffn.W2")),
        p(pre + "ffn.b2"));
    x = layer_norm(add(x, ffn), p(pre + "ln2.g"), p(pre + "ln2.b"));
  }
  return logistic(add(matmul(x, p("out.W")), p("out.b")));
}

SequenceModel::TrainForward SequenceModel::forward_train(
    const std::vector<const TokenSeq*>& batch) const {
  if (cfg_.kind != ModelKind::kTransformer)
    return run_recurrent(batch, true);
  check_batch(batch, cfg_.vocab_size);
  TrainForward out;
  out.step_grid = false;
  out.preds.reserve(batch.size());
  for (const TokenSeq* w : batch) out.preds.push_back(transformer_one(*w));
  return out;
}

std::vector<Tensor> SequenceModel::score_sequences(
    const std::vector<TokenSeq>& words) const {
  std::vector<Tensor> result(words.size());
  if (cfg_.kind == ModelKind::kTransformer) {
    for (size_t i = 0; i < words.size(); ++i) {
      if (words[i].empty()) throw InputError("forward: empty token sequence");
      result[i] = transformer_one(words[i]);
    }
    return result;
  }
  const int V = cfg_.vocab_size;
  constexpr size_t kChunk = 64;
  for (size_t base = 0; base < words.size(); base += kChunk) {
    size_t hi = std::min(words.size(), base + kChunk);
    std::vector<const TokenSeq*> chunk;
    chunk.reserve(hi - base);
    for (size_t i = base; i < hi; ++i) chunk.push_back(&words[i]);
    TrainForward fwd = run_recurrent(chunk, false);
    for (size_t i = base; i < hi; ++i) {
      const int T = static_cast<int>(words[i].size());
      std::vector<double> rows(static_cast<size_t>(T) * V);
      for (int t = 0; t < T; ++t) {
        const auto& grid = fwd.preds[t].data();
        std::copy_n(grid.begin() + (i - base) * V, V,
                    rows.begin() + static_cast<size_t>(t) * V);
      }
      result[i] = Tensor::from_data(T, V, std::move(rows));
    }
  }
  return result;
}

SequenceModel::StateTrace SequenceModel::trace_states(
    const std::vector<TokenSeq>& words) const {
  if (cfg_.kind == ModelKind::kTransformer)
    throw ConfigError("state traces are defined for recurrent models only");
  StateTrace trace;
  trace.hidden.resize(words.size());
  const bool is_lstm = cfg_.kind == ModelKind::kLstm;
  if (is_lstm) trace.cell.resize(words.size());
  const int H = cfg_.hidden;
  constexpr size_t kChunk = 64;
  for (size_t base = 0; base < words.size(); base += kChunk) {
    size_t hi = std::min(words.size(), base + kChunk);
    std::vector<const TokenSeq*> chunk;
    for (size_t i = base; i < hi; ++i) chunk.push_back(&words[i]);
    TrainForward fwd = run_recurrent(chunk, true);
    for (size_t i = base; i < hi; ++i) {
      const int T = static_cast<int>(words[i].size());
      std::vector<double> hrows(static_cast<size_t>(T) * H);
      std::vector<double> crows(is_lstm ? static_cast<size_t>(T) * H : 0);
      for (int t = 0; t < T; ++t) {
        std::copy_n(fwd.hidden[t].data().begin() + (i - base) * H, H,
                    hrows.begin() + static_cast<size_t>(t) * H);
        if (is_lstm)
          std::copy_n(fwd.cell[t].data().begin() + (i - base) * H, H,
                      crows.begin() + static_cast<size_t>(t) * H);
      }
      trace.hidden[i] = Tensor::from_data(T, H, std::move(hrows));
      if (is_lstm) trace.cell[i] = Tensor::from_data(T, H, std::move(crows));
    }
  }
  return trace;
}

std::vector<Tensor> ModelScorer::score(const std::vector<TokenSeq>& words) {
  return model_->score_sequences(words);
}

std::vector<Tensor> OracleScorer::score(const std::vector<TokenSeq>& words) {
  std::vector<Tensor> out;
  out.reserve(words.size());
  const int V = vocab_.size();
  for (const auto& w : words) {
    if (w.empty()) throw InputError("oracle scorer: empty token sequence");
    std::vector<double> rows(w.size() * static_cast<size_t>(V));
    TokenSeq prefix;
    prefix.reserve(w.size());
    for (size_t t = 0; t < w.size(); ++t) {
      prefix.push_back(w[t]);
      auto bits = next_valid_set(prefix, vocab_);
      for (int v = 0; v < V; ++v)
        rows[t * static_cast<size_t>(V) + v] = bits[v] ? 1.0 : 0.0;
    }
    out.push_back(Tensor::from_data(static_cast<int>(w.size()), V,
                                    std::move(rows)));
  }
  return out;
}

std::vector<TokenSeq> generate_all(SequenceScorer& scorer, const Vocab& vocab,
                                   int max_len, double threshold,
                                   size_t frontier_cap) {
  if (max_len < 0) throw InputError("generate_all: negative max_len");
  std::vector<TokenSeq> emitted;
  emitted.push_back({});  // the empty word is balanced by definition
  if (max_len == 0) return emitted;
  // Every nonempty balanced word starts with an opening bracket; the model
  // cannot be queried on the empty prefix, so the first layer of the search
  // is the opening symbols themselves.
  std::vector<TokenSeq> frontier;
  for (int t = 0; t < vocab.n; ++t) frontier.push_back({vocab.open_index(t)});
  auto balanced = [&](const TokenSeq& w) { return is_valid(w, vocab); };
  for (int len = 1; len <= max_len && !frontier.empty(); ++len) {
    for (const auto& w : frontier)
      if (balanced(w)) emitted.push_back(w);
    if (len == max_len) break;
    std::vector<Tensor> scores = scorer.score(frontier);
    std::vector<TokenSeq> next;
    for (size_t i = 0; i < frontier.size(); ++i) {
      const Tensor& s = scores[i];
      const int T = s.rows();
      for (int v = 0; v < vocab.size(); ++v) {
        if (s.at(T - 1, v) > threshold) {
          TokenSeq w = frontier[i];
          w.push_back(v);
          next.push_back(std::move(w));
          if (next.size() > frontier_cap)
            throw ResourceError(
                "generate_all: frontier exceeds the cap of " +
                std::to_string(frontier_cap) + " prefixes");
        }
      }
    }
    frontier = std::move(next);
  }
  return emitted;
}

}  // namespace dycklab
