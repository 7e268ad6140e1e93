#include "dycklab/probing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <numeric>
#include <sstream>

#include "dycklab/optim.hpp"

namespace dycklab {

void ProbeConfig::validate() const {
  if (num_classes < 2) throw ConfigError("probe needs at least 2 classes");
  if (epochs < 1) throw ConfigError("probe epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("probe batch_size must be >= 1");
  if (lr <= 0) throw ConfigError("probe learning rate must be positive");
}

namespace {

constexpr size_t kTraceChunk = 64;

std::vector<int> word_depths(const TokenSeq& word, const Vocab& vocab) {
  return prefix_depths(word, vocab);
}

}  // namespace

std::vector<ProbeSequence> probe_features(const SequenceModel& model,
                                          const std::vector<TokenSeq>& words,
                                          const Vocab& vocab, bool use_cell) {
  if (use_cell && model.config().kind != ModelKind::kLstm)
    throw ConfigError("cell-state features are only defined for LSTM models");
  std::vector<ProbeSequence> out;
  out.reserve(words.size());
  for (size_t base = 0; base < words.size(); base += kTraceChunk) {
    size_t hi = std::min(words.size(), base + kTraceChunk);
    std::vector<TokenSeq> chunk(words.begin() + base, words.begin() + hi);
    auto trace = model.trace_states(chunk);
    const auto& states = use_cell ? trace.cell : trace.hidden;
    for (size_t i = 0; i < chunk.size(); ++i) {
      ProbeSequence seq;
      seq.features = states[i].detach();
      seq.depths = word_depths(chunk[i], vocab);
      out.push_back(std::move(seq));
    }
  }
  return out;
}

std::vector<ProbeSequence> oracle_features(const std::vector<TokenSeq>& words,
                                           const Vocab& vocab,
                                           int num_classes) {
  std::vector<ProbeSequence> out;
  out.reserve(words.size());
  for (const auto& w : words) {
    ProbeSequence seq;
    seq.depths = word_depths(w, vocab);
    const int T = static_cast<int>(seq.depths.size());
    std::vector<double> v(static_cast<size_t>(T) * num_classes, 0.0);
    for (int t = 0; t < T; ++t) {
      if (seq.depths[t] >= num_classes)
        throw LabelError("depth " + std::to_string(seq.depths[t]) +
                         " does not fit in " + std::to_string(num_classes) +
                         " classes");
      v[static_cast<size_t>(t) * num_classes + seq.depths[t]] = 1.0;
    }
    seq.features = Tensor::from_data(T, num_classes, std::move(v));
    out.push_back(std::move(seq));
  }
  return out;
}

DepthProbe::DepthProbe(int input_dim, int num_classes, uint64_t seed)
    : input_dim_(input_dim), num_classes_(num_classes) {
  if (input_dim < 1) throw ConfigError("probe input dimension must be >= 1");
  if (num_classes < 2) throw ConfigError("probe needs at least 2 classes");
  std::mt19937_64 rng(seed);
  double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  double s2 = 1.0 / std::sqrt(static_cast<double>(kProbeHidden));
  params_.emplace_back(
      "w1", Tensor::uniform(input_dim, kProbeHidden, -s1, s1, rng));
  params_.emplace_back("b1", Tensor::zeros(1, kProbeHidden, true));
  params_.emplace_back(
      "w2", Tensor::uniform(kProbeHidden, num_classes, -s2, s2, rng));
  params_.emplace_back("b2", Tensor::zeros(1, num_classes, true));
}

Tensor DepthProbe::logits(const Tensor& features) const {
  if (features.cols() != input_dim_)
    throw InputError("probe features have width " +
                     std::to_string(features.cols()) + ", expected " +
                     std::to_string(input_dim_));
  const Tensor& w1 = params_[0].second;
  const Tensor& b1 = params_[1].second;
  const Tensor& w2 = params_[2].second;
  const Tensor& b2 = params_[3].second;
  Tensor h = relu(add(matmul(features, w1), b1));
  return add(matmul(h, w2), b2);
}

std::vector<int> DepthProbe::predict(const Tensor& features) const {
  Tensor lg = logits(features);
  std::vector<int> out(lg.rows());
  for (int r = 0; r < lg.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < lg.cols(); ++c)
      if (lg.at(r, c) > lg.at(r, best)) best = c;
    out[r] = best;
  }
  return out;
}

double probe_sequence_accuracy(const DepthProbe& probe,
                               const std::vector<ProbeSequence>& data) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const auto& seq : data) {
    std::vector<int> pred = probe.predict(seq.features);
    if (std::equal(pred.begin(), pred.end(), seq.depths.begin(),
                   seq.depths.end()))
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

// All step rows of a probe dataset stacked into one matrix plus labels.
struct FlatRows {
  std::vector<double> x;
  std::vector<int> y;
  int dim = 0;
  int count = 0;
};

FlatRows flatten(const std::vector<ProbeSequence>& data, int num_classes) {
  FlatRows f;
  if (data.empty()) throw InputError("probe dataset is empty");
  f.dim = data[0].features.cols();
  for (const auto& seq : data) {
    const auto& v = seq.features.data();
    if (seq.features.cols() != f.dim)
      throw InputError("probe feature widths disagree across sequences");
    if (static_cast<size_t>(seq.features.rows()) != seq.depths.size())
      throw InputError("feature rows and depth labels disagree in length");
    f.x.insert(f.x.end(), v.begin(), v.end());
    for (int d : seq.depths) {
      if (d >= num_classes)
        throw LabelError("depth label " + std::to_string(d) +
                         " exceeds the probe's " +
                         std::to_string(num_classes) + " classes");
      f.y.push_back(d);
    }
    f.count += seq.features.rows();
  }
  return f;
}

}  // namespace

ProbeOutcome train_depth_probe(const std::vector<ProbeSequence>& train_data,
                               const std::vector<ProbeSequence>& eval_data,
                               const ProbeConfig& cfg) {
  cfg.validate();
  FlatRows flat = flatten(train_data, cfg.num_classes);
  ProbeOutcome out{DepthProbe(flat.dim, cfg.num_classes, cfg.seed), {}, {}, 0};
  Adam opt(cfg.lr);

  std::vector<size_t> order(flat.count);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    int batches = 0;
    for (size_t base = 0; base < order.size();
         base += static_cast<size_t>(cfg.batch_size)) {
      size_t hi =
          std::min(order.size(), base + static_cast<size_t>(cfg.batch_size));
      const int B = static_cast<int>(hi - base);
      std::vector<double> xb(static_cast<size_t>(B) * flat.dim);
      std::vector<int> yb(B);
      for (int r = 0; r < B; ++r) {
        size_t src = order[base + r];
        std::copy_n(flat.x.begin() + src * flat.dim, flat.dim,
                    xb.begin() + static_cast<size_t>(r) * flat.dim);
        yb[r] = flat.y[src];
      }
      double batch_loss;
      {
        GradientTape tape;
        Tensor logits =
            out.probe.logits(Tensor::from_data(B, flat.dim, std::move(xb)));
        Tensor loss = cross_entropy(logits, yb);
        batch_loss = loss.scalar_value();
        if (!std::isfinite(batch_loss))
          throw TrainingError("non-finite probe loss at epoch " +
                              std::to_string(epoch));
        tape.backward(loss);
      }
      opt.step(out.probe.params());
      for (auto& [name, p] : out.probe.params()) p.zero_grad();
      loss_sum += batch_loss;
      ++batches;
    }
    out.epoch_loss.push_back(batches ? loss_sum / batches : 0.0);
    double acc = probe_sequence_accuracy(out.probe, eval_data);
    out.epoch_accuracy.push_back(acc);
    out.accuracy = acc;
    if (cfg.verbose)
      std::cerr << "probe epoch " << epoch << " loss " << out.epoch_loss.back()
                << " acc " << acc << "\n";
    if (acc >= cfg.early_stop) break;
  }
  return out;
}

// --- stack content extraction -------------------------------------------------

std::vector<std::vector<uint8_t>> stack_position_labels(const TokenSeq& word,
                                                        const Vocab& vocab) {
  if (vocab.n != 2)
    throw ConfigError("stack extraction heads are defined for Dyck-2");
  std::vector<std::vector<uint8_t>> labels;
  labels.reserve(word.size());
  std::vector<int> stack;  // open bracket types, bottom first
  for (int sym : word) {
    vocab.check_token(sym);
    if (vocab.is_opening(sym)) {
      stack.push_back(vocab.type_of(sym));
    } else {
      if (stack.empty() || stack.back() != vocab.type_of(sym))
        throw InputError("stack labels need a valid prefix: '" +
                         format_word(vocab, word) + "'");
      stack.pop_back();
    }
    std::vector<uint8_t> row(kStackHeads, 2);  // 2 = absent
    for (int i = 0; i < kStackHeads; ++i)
      if (static_cast<size_t>(i) < stack.size())
        row[i] = static_cast<uint8_t>(stack[stack.size() - 1 - i]);
    labels.push_back(std::move(row));
  }
  return labels;
}

NamedParams make_stack_heads(int hidden, uint64_t seed) {
  if (hidden < 1) throw ConfigError("head input dimension must be >= 1");
  std::mt19937_64 rng(seed);
  double s = 1.0 / std::sqrt(static_cast<double>(hidden));
  NamedParams heads;
  for (int i = 1; i <= kStackHeads; ++i) {
    heads.emplace_back("aux" + std::to_string(i) + ".W",
                       Tensor::uniform(hidden, kStackClasses, -s, s, rng));
    heads.emplace_back("aux" + std::to_string(i) + ".b",
                       Tensor::zeros(1, kStackClasses, true));
  }
  return heads;
}

ExtraLoss make_stack_aux_loss(const NamedParams& heads, const Vocab& vocab,
                              double lambda) {
  if (lambda <= 0) throw ConfigError("aux loss weight lambda must be > 0");
  if (vocab.n != 2)
    throw ConfigError("stack extraction heads are defined for Dyck-2");
  if (heads.size() != 2 * kStackHeads)
    throw ConfigError("expected " + std::to_string(kStackHeads) +
                      " stack heads");
  return [heads, vocab, lambda](
             const SequenceModel::TrainForward& fwd,
             const std::vector<const NcpSample*>& batch) -> Tensor {
    if (!fwd.step_grid || fwd.hidden.empty())
      throw ConfigError("stack auxiliary heads require a recurrent model");
    const int B = static_cast<int>(batch.size());
    std::vector<std::vector<std::vector<uint8_t>>> labels(B);
    double alive_total = 0;
    for (int b = 0; b < B; ++b) {
      labels[b] = stack_position_labels(batch[b]->tokens, vocab);
      alive_total += static_cast<double>(labels[b].size());
    }
    if (alive_total == 0) throw InputError("aux loss over an empty batch");
    Tensor total;
    for (size_t t = 0; t < fwd.hidden.size(); ++t) {
      std::vector<int> y(B, 0);
      std::vector<double> w(B, 0.0);
      bool any_alive = false;
      for (int b = 0; b < B; ++b)
        if (t < labels[b].size()) {
          any_alive = true;
          w[b] = 1.0;
        }
      if (!any_alive) continue;
      for (int i = 0; i < kStackHeads; ++i) {
        for (int b = 0; b < B; ++b)
          y[b] = t < labels[b].size() ? labels[b][t][i] : 0;
        Tensor logits = add(matmul(fwd.hidden[t], heads[2 * i].second),
                            heads[2 * i + 1].second);
        Tensor term = cross_entropy_sum(logits, y, w);
        total = total.defined() ? add(total, term) : term;
      }
    }
    return scale(total, lambda / (kStackHeads * alive_total));
  };
}

StackAuxModel train_with_stack_aux(const ModelConfig& mcfg,
                                   const std::vector<NcpSample>& train_set,
                                   const NamedBins& bins,
                                   const TrainConfig& tcfg, double lambda) {
  if (mcfg.kind == ModelKind::kTransformer)
    throw ConfigError("stack auxiliary heads require a recurrent model");
  StackAuxModel out{SequenceModel(mcfg),
                    make_stack_heads(mcfg.hidden, derive_seed(mcfg.seed, 77)),
                    {}};
  Vocab vocab = Vocab::dyck(mcfg.vocab_size / 2);
  ExtraLoss aux = make_stack_aux_loss(out.heads, vocab, lambda);
  out.history = train(out.model, train_set, bins, tcfg, aux, &out.heads);
  return out;
}

StackEvalReport eval_stack_heads(const std::vector<Tensor>& features,
                                 const NamedParams& heads,
                                 const std::vector<TokenSeq>& words,
                                 const Vocab& vocab) {
  if (features.size() != words.size())
    throw InputError("feature list and word list lengths disagree");
  if (heads.size() != 2 * kStackHeads)
    throw ConfigError("expected " + std::to_string(kStackHeads) +
                      " stack heads");
  StackEvalReport report;
  report.accuracy.assign(kStackHeads, 0.0);
  report.recall.assign(kStackHeads, 0.0);
  report.recall_support.assign(kStackHeads, 0);
  if (words.empty()) return report;
  std::vector<int> acc_hits(kStackHeads, 0), rec_hits(kStackHeads, 0);
  for (size_t wi = 0; wi < words.size(); ++wi) {
    auto labels = stack_position_labels(words[wi], vocab);
    int word_max_depth = max_depth(words[wi], vocab);
    const Tensor& feats = features[wi];
    if (feats.rows() != static_cast<int>(labels.size()))
      throw InputError("feature rows disagree with word length");
    for (int i = 0; i < kStackHeads; ++i) {
      Tensor logits =
          add(matmul(feats, heads[2 * i].second), heads[2 * i + 1].second);
      bool all_ok = true;
      for (int t = 0; t < logits.rows() && all_ok; ++t) {
        int best = 0;
        for (int c = 1; c < kStackClasses; ++c)
          if (logits.at(t, c) > logits.at(t, best)) best = c;
        all_ok = best == labels[t][i];
      }
      if (all_ok) ++acc_hits[i];
      if (word_max_depth >= i + 1) {
        ++report.recall_support[i];
        if (all_ok) ++rec_hits[i];
      }
    }
  }
  for (int i = 0; i < kStackHeads; ++i) {
    report.accuracy[i] =
        static_cast<double>(acc_hits[i]) / static_cast<double>(words.size());
    report.recall[i] = report.recall_support[i]
                           ? static_cast<double>(rec_hits[i]) /
                                 report.recall_support[i]
                           : 0.0;
  }
  return report;
}

StackEvalReport eval_stack_extraction(const SequenceModel& model,
                                      const NamedParams& heads,
                                      const std::vector<TokenSeq>& words,
                                      const Vocab& vocab) {
  std::vector<Tensor> features;
  features.reserve(words.size());
  for (size_t base = 0; base < words.size(); base += kTraceChunk) {
    size_t hi = std::min(words.size(), base + kTraceChunk);
    std::vector<TokenSeq> chunk(words.begin() + base, words.begin() + hi);
    auto trace = model.trace_states(chunk);
    for (auto& h : trace.hidden) features.push_back(h.detach());
  }
  return eval_stack_heads(features, heads, words, vocab);
}

// --- state dumps --------------------------------------------------------------

namespace {

std::string g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void dump_states(const SequenceModel& model, const std::vector<TokenSeq>& words,
                 const Vocab& vocab, bool use_cell, std::ostream& out) {
  if (use_cell && model.config().kind != ModelKind::kLstm)
    throw ConfigError("cell-state dumps are only defined for LSTM models");
  const int H = model.config().hidden;
  out << "word,step,prefix_len,depth";
  for (int d = 0; d < H; ++d) out << ",s" << d;
  out << "\n";
  for (size_t base = 0; base < words.size(); base += kTraceChunk) {
    size_t hi = std::min(words.size(), base + kTraceChunk);
    std::vector<TokenSeq> chunk(words.begin() + base, words.begin() + hi);
    auto trace = model.trace_states(chunk);
    const auto& states = use_cell ? trace.cell : trace.hidden;
    for (size_t i = 0; i < chunk.size(); ++i) {
      std::vector<int> depths = prefix_depths(chunk[i], vocab);
      std::string word = format_word(vocab, chunk[i], /*spaces=*/false);
      const Tensor& s = states[i];
      for (int t = 0; t < s.rows(); ++t) {
        out << word << ',' << t << ',' << t + 1 << ',' << depths[t];
        for (int d = 0; d < s.cols(); ++d) out << ',' << g17(s.at(t, d));
        out << "\n";
      }
    }
  }
}

std::vector<StateDumpRow> load_state_dump(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("state dump is empty");
  size_t dims = 0;
  {
    std::stringstream hs(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(hs, col, ',')) cols.push_back(col);
    if (cols.size() < 4 || cols[0] != "word" || cols[3] != "depth")
      throw IoError("unrecognized state dump header: '" + line + "'");
    dims = cols.size() - 4;
  }
  std::vector<StateDumpRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    StateDumpRow row;
    std::string field;
    auto next = [&](const char* what) {
      if (!std::getline(ls, field, ','))
        throw IoError(std::string("state dump row is missing ") + what);
      return field;
    };
    row.word = next("word");
    row.step = std::stoi(next("step"));
    row.prefix_len = std::stoi(next("prefix_len"));
    row.depth = std::stoi(next("depth"));
    row.state.reserve(dims);
    for (size_t d = 0; d < dims; ++d) {
      const std::string& tok = next("state value");
      char* end = nullptr;
      double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str()) throw IoError("bad state value '" + tok + "'");
      row.state.push_back(x);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dycklab
