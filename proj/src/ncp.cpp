#include "dycklab/ncp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

namespace dycklab {

std::vector<NcpSample> make_dataset(const std::vector<TokenSeq>& words,
                                    const Vocab& vocab) {
  std::vector<NcpSample> out;
  out.reserve(words.size());
  for (const auto& w : words) {
    if (w.empty())
      throw InputError("make_dataset: the empty word has no prediction steps");
    if (!is_valid(w, vocab))
      throw InputError("make_dataset: word is not a valid Dyck word: '" +
                       format_word(vocab, w) + "'");
    NcpSample s;
    s.tokens = w;
    s.targets.reserve(w.size());
    TokenSeq prefix;
    prefix.reserve(w.size());
    for (int sym : w) {
      prefix.push_back(sym);
      s.targets.push_back(next_valid_set(prefix, vocab));
    }
    out.push_back(std::move(s));
  }
  return out;
}

Tensor mse_loss_batch(const std::vector<Tensor>& preds,
                      const std::vector<Tensor>& targets,
                      const std::vector<Tensor>& masks) {
  if (preds.size() != targets.size() || preds.size() != masks.size())
    throw InputError("mse_loss_batch: list lengths disagree");
  if (preds.empty()) throw InputError("mse_loss_batch: empty batch");
  double cells = 0;
  for (const auto& m : masks)
    for (double x : m.data()) cells += x;
  if (cells == 0) throw InputError("mse_loss_batch: every cell is masked out");
  Tensor total;
  for (size_t i = 0; i < preds.size(); ++i) {
    Tensor d = mul(sub(preds[i], targets[i]), masks[i]);
    Tensor sq = sum_all(mul(d, d));
    total = total.defined() ? add(total, sq) : sq;
  }
  return scale(total, 1.0 / cells);
}

EvalReport evaluate(SequenceScorer& scorer, const std::vector<NcpSample>& bin,
                    double threshold) {
  EvalReport report;
  report.total = static_cast<int>(bin.size());
  if (bin.empty()) return report;
  std::vector<TokenSeq> words;
  words.reserve(bin.size());
  for (const auto& s : bin) words.push_back(s.tokens);
  std::vector<Tensor> scores = scorer.score(words);
  for (size_t i = 0; i < bin.size(); ++i) {
    const NcpSample& s = bin[i];
    const Tensor& sc = scores[i];
    const int V = sc.cols();
    bool ok = sc.rows() == static_cast<int>(s.targets.size());
    for (size_t t = 0; ok && t < s.targets.size(); ++t)
      for (int v = 0; v < V; ++v) {
        bool predicted = sc.at(static_cast<int>(t), v) > threshold;
        if (predicted != static_cast<bool>(s.targets[t][v])) {
          ok = false;
          break;
        }
      }
    if (ok) ++report.correct;
  }
  report.accuracy =
      report.total ? static_cast<double>(report.correct) / report.total : 0.0;
  return report;
}

EvalReport evaluate(const SequenceModel& model,
                    const std::vector<NcpSample>& bin, double threshold) {
  ModelScorer scorer(model);
  return evaluate(scorer, bin, threshold);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (lr < 1e-3 - 1e-12 || lr > 1e-2 + 1e-12)
    throw ConfigError("learning rate must lie in [1e-3, 1e-2]");
  if (threshold <= 0 || threshold >= 1)
    throw ConfigError("threshold must lie in (0, 1)");
}

namespace {

// Targets and 0/1 masks shaped to match a forward pass.
struct LossInputs {
  std::vector<Tensor> targets, masks;
};

LossInputs build_loss_inputs(const SequenceModel::TrainForward& fwd,
                             const std::vector<const NcpSample*>& batch,
                             int vocab) {
  LossInputs li;
  if (fwd.step_grid) {
    const int B = static_cast<int>(batch.size());
    const size_t t_max = fwd.preds.size();
    li.targets.reserve(t_max);
    li.masks.reserve(t_max);
    for (size_t t = 0; t < t_max; ++t) {
      std::vector<double> tv(static_cast<size_t>(B) * vocab, 0.0);
      std::vector<double> mv(static_cast<size_t>(B) * vocab, 0.0);
      for (int b = 0; b < B; ++b) {
        if (t >= batch[b]->targets.size()) continue;
        const auto& bits = batch[b]->targets[t];
        for (int v = 0; v < vocab; ++v) {
          tv[static_cast<size_t>(b) * vocab + v] = bits[v];
          mv[static_cast<size_t>(b) * vocab + v] = 1.0;
        }
      }
      li.targets.push_back(Tensor::from_data(B, vocab, std::move(tv)));
      li.masks.push_back(Tensor::from_data(B, vocab, std::move(mv)));
    }
  } else {
    for (const NcpSample* s : batch) {
      const int T = static_cast<int>(s->targets.size());
      std::vector<double> tv(static_cast<size_t>(T) * vocab);
      for (int t = 0; t < T; ++t)
        for (int v = 0; v < vocab; ++v)
          tv[static_cast<size_t>(t) * vocab + v] = s->targets[t][v];
      li.targets.push_back(Tensor::from_data(T, vocab, std::move(tv)));
      li.masks.push_back(Tensor::constant(T, vocab, 1.0));
    }
  }
  return li;
}

}  // namespace

TrainResult train(SequenceModel& model,
                  const std::vector<NcpSample>& train_set,
                  const NamedBins& bins, const TrainConfig& cfg,
                  const ExtraLoss& extra_loss, NamedParams* extra_params) {
  cfg.validate();
  if (train_set.empty()) throw InputError("train: empty training set");
  const int vocab = model.config().vocab_size;
  RmsProp opt(cfg.lr, cfg.alpha);
  NamedParams all_params = model.params();
  if (extra_params)
    all_params.insert(all_params.end(), extra_params->begin(),
                      extra_params->end());

  TrainResult result;
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    int batches = 0;
    for (size_t base = 0; base < order.size();
         base += static_cast<size_t>(cfg.batch_size)) {
      size_t hi = std::min(order.size(),
                           base + static_cast<size_t>(cfg.batch_size));
      std::vector<const NcpSample*> batch;
      batch.reserve(hi - base);
      for (size_t i = base; i < hi; ++i) batch.push_back(&train_set[order[i]]);
      double batch_loss;
      {
        GradientTape tape;
        auto fwd = model.forward_train([&] {
          std::vector<const TokenSeq*> toks;
          toks.reserve(batch.size());
          for (const NcpSample* s : batch) toks.push_back(&s->tokens);
          return toks;
        }());
        LossInputs li = build_loss_inputs(fwd, batch, vocab);
        Tensor loss = mse_loss_batch(fwd.preds, li.targets, li.masks);
        if (extra_loss) {
          Tensor extra = extra_loss(fwd, batch);
          if (extra.defined()) loss = add(loss, extra);
        }
        batch_loss = loss.scalar_value();
        if (!std::isfinite(batch_loss))
          throw TrainingError("non-finite loss at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(batches + 1));
        tape.backward(loss);
      }
      opt.step(all_params);
      for (auto& [name, p] : all_params) p.zero_grad();
      loss_sum += batch_loss;
      ++batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = batches ? loss_sum / batches : 0.0;
    bool all_clear = !bins.empty();
    for (const auto& [name, bin] : bins) {
      double acc = evaluate(model, bin, cfg.threshold).accuracy;
      stats.bin_accuracy.push_back(acc);
      all_clear = all_clear && acc >= cfg.early_stop;
    }
    if (cfg.verbose) {
      std::cerr << "epoch " << epoch << " loss " << stats.loss;
      for (size_t i = 0; i < stats.bin_accuracy.size(); ++i)
        std::cerr << " " << bins[i].first << "=" << stats.bin_accuracy[i];
      std::cerr << "\n";
    }
    result.history.push_back(std::move(stats));
    if (all_clear) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

Experiment build_experiment(const std::string& name, int n, uint64_t seed,
                            int train_size, int bin_size) {
  if (n < 2 || n > 4)
    throw ConfigError("experiments are defined for n in {2, 3, 4}");
  Experiment exp;
  exp.name = name;
  exp.vocab = Vocab::dyck(n);
  SamplerParams params;  // p = 0.5, q = 0.25
  auto sample = [&](BinSpec spec, uint64_t stream) {
    params.seed = derive_seed(seed, stream);
    return sample_bin(spec, params, exp.vocab);
  };
  if (name == "unbounded") {
    exp.train_words = sample({train_size, 2, 50, std::nullopt}, 0);
    exp.bins.emplace_back("Bin-1A", sample({bin_size, 2, 50, std::nullopt}, 1));
    exp.bins.emplace_back("Bin-2A",
                          sample({bin_size, 52, 100, std::nullopt}, 2));
  } else if (name == "bounded_depth") {
    std::pair<int, int> depth{1, 10};
    exp.train_words = sample({train_size, 2, 50, depth}, 0);
    exp.bins.emplace_back("Bin-1B", sample({bin_size, 2, 50, depth}, 1));
    exp.bins.emplace_back("Bin-2B", sample({bin_size, 52, 100, depth}, 2));
    exp.bins.emplace_back("Bin-3B", sample({bin_size, 102, 150, depth}, 3));
  } else if (name == "bounded_length") {
    exp.train_words = sample({train_size, 2, 100, std::pair{1, 15}}, 0);
    for (int d = 16; d <= 21; ++d)
      exp.bins.emplace_back(
          "depth-" + std::to_string(d),
          sample({bin_size, 2, 100, std::pair{d, d}}, d - 14));
  } else {
    throw ConfigError("unknown experiment '" + name +
                      "' (expected unbounded, bounded_depth, bounded_length)");
  }
  return exp;
}

SweepResult sweep(const Experiment& exp,
                  const std::vector<std::pair<ModelConfig, double>>& grid,
                  const TrainConfig& base) {
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  SweepResult result;
  for (const auto& [name, words] : exp.bins) result.bin_names.push_back(name);
  std::vector<NcpSample> train_set = make_dataset(exp.train_words, exp.vocab);
  NamedBins bins;
  for (const auto& [name, words] : exp.bins)
    bins.emplace_back(name, make_dataset(words, exp.vocab));

  for (const auto& [mcfg, lr] : grid) {
    TrainConfig cfg = base;
    cfg.lr = lr;
    SweepRun run;
    run.config = mcfg;
    run.lr = lr;
    auto t0 = std::chrono::steady_clock::now();
    try {
      SequenceModel model(mcfg);
      TrainResult tr = train(model, train_set, bins, cfg);
      run.epochs_run = static_cast<int>(tr.history.size());
      if (!tr.history.empty()) run.bin_accuracy = tr.history.back().bin_accuracy;
    } catch (const Error& e) {
      if (base.verbose) std::cerr << "sweep run failed: " << e.what() << "\n";
      continue;  // failed runs drop out of the leaderboard
    }
    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.runs.push_back(std::move(run));
  }
  std::stable_sort(result.runs.begin(), result.runs.end(),
                   [](const SweepRun& a, const SweepRun& b) {
                     double aa = a.bin_accuracy.empty() ? 0 : a.bin_accuracy[0];
                     double bb = b.bin_accuracy.empty() ? 0 : b.bin_accuracy[0];
                     return aa > bb;
                   });
  size_t top = std::min<size_t>(5, result.runs.size());
  result.under_five = result.runs.size() < 5;
  if (result.under_five)
    std::cerr << "sweep: only " << result.runs.size()
              << " runs completed; top-5 mean uses what is available\n";
  result.top5_mean.assign(result.bin_names.size(), 0.0);
  if (top > 0) {
    for (size_t r = 0; r < top; ++r)
      for (size_t b = 0; b < result.top5_mean.size(); ++b)
        result.top5_mean[b] += result.runs[r].bin_accuracy.empty()
                                   ? 0.0
                                   : result.runs[r].bin_accuracy[b];
    for (auto& x : result.top5_mean) x /= static_cast<double>(top);
  }
  return result;
}

std::vector<std::pair<ModelConfig, double>> default_grid(ModelKind kind,
                                                         int vocab_size,
                                                         uint64_t seed) {
  std::vector<std::pair<ModelConfig, double>> grid;
  const std::vector<double> lrs{1e-2, 1e-3};
  if (kind == ModelKind::kTransformer) {
    for (int hidden : {16, 32, 64})
      for (int layers : {1, 2})
        for (int heads : {1, 2})
          for (double lr : lrs) {
            ModelConfig cfg;
            cfg.kind = kind;
            cfg.hidden = hidden;
            cfg.layers = layers;
            cfg.heads = heads;
            cfg.vocab_size = vocab_size;
            cfg.seed = seed;
            grid.emplace_back(cfg, lr);
          }
    return grid;
  }
  for (int hidden : {4, 8, 16, 32, 64, 128, 256})
    for (int layers : {1, 2})
      for (double lr : lrs) {
        ModelConfig cfg;
        cfg.kind = kind;
        cfg.hidden = hidden;
        cfg.layers = layers;
        cfg.vocab_size = vocab_size;
        cfg.seed = seed;
        grid.emplace_back(cfg, lr);
      }
  return grid;
}

std::vector<std::pair<std::string, double>> robustness_eval(
    const SequenceModel& model, int n, uint64_t seed, int bin_size,
    const std::vector<std::pair<double, double>>& distributions) {
  Vocab vocab = Vocab::dyck(n);
  std::vector<std::pair<std::string, double>> out;
  for (size_t i = 0; i < distributions.size(); ++i) {
    auto [p, q] = distributions[i];
    SamplerParams params;
    params.p = p;
    params.q = q;
    params.seed = derive_seed(seed, 100 + i);
    auto words = sample_bin({bin_size, 2, 50, std::nullopt}, params, vocab);
    auto bin = make_dataset(words, vocab);
    std::string name =
        "p=" + std::to_string(p).substr(0, 4) + ",q=" +
        std::to_string(q).substr(0, 4);
    out.emplace_back(name, evaluate(model, bin).accuracy);
  }
  return out;
}

}  // namespace dycklab
