#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dycklab/dyck.hpp"
#include "dycklab/models.hpp"

namespace dycklab {

// One training/evaluation item: a valid word plus its per-step k-hot target
// rows, row t = legal continuations of the prefix of length t+1.
struct NcpSample {
  TokenSeq tokens;
  std::vector<std::vector<uint8_t>> targets;
};

std::vector<NcpSample> make_dataset(const std::vector<TokenSeq>& words,
                                    const Vocab& vocab);

// Mean of squared differences over unmasked cells, pooled across the whole
// list; preds/targets/masks are parallel, masks hold 0/1.
Tensor mse_loss_batch(const std::vector<Tensor>& preds,
                      const std::vector<Tensor>& targets,
                      const std::vector<Tensor>& masks);

struct EvalReport {
  int correct = 0;
  int total = 0;
  double accuracy = 0.0;  // all-steps-correct sequences / total
};

EvalReport evaluate(SequenceScorer& scorer, const std::vector<NcpSample>& bin,
                    double threshold = 0.5);
EvalReport evaluate(const SequenceModel& model,
                    const std::vector<NcpSample>& bin,
                    double threshold = 0.5);

struct TrainConfig {
  int batch_size = 32;
  int epochs = 100;
  double lr = 1e-3;
  double alpha = 0.99;           // RMSProp smoothing
  double early_stop = 0.99;      // stop once every bin reaches this
  double threshold = 0.5;        // prediction threshold for the metric
  uint64_t seed = 0;
  bool verbose = false;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  std::vector<double> bin_accuracy;
};

struct TrainResult {
  std::vector<EpochStats> history;
  bool early_stopped = false;
};

using NamedBins = std::vector<std::pair<std::string, std::vector<NcpSample>>>;

// Optional extra loss term added to the NCP MSE (used by auxiliary-head
// co-training); receives the live forward pass and the batch samples.
using ExtraLoss = std::function<Tensor(const SequenceModel::TrainForward&,
                                       const std::vector<const NcpSample*>&)>;

// RMSProp training with shuffled seeded minibatches; evaluates every bin
// after each epoch and stops early when all bins clear cfg.early_stop.
// extra_params, when given, are optimized alongside the model's own.
TrainResult train(SequenceModel& model, const std::vector<NcpSample>& train_set,
                  const NamedBins& bins, const TrainConfig& cfg,
                  const ExtraLoss& extra_loss = nullptr,
                  NamedParams* extra_params = nullptr);

struct Experiment {
  std::string name;
  Vocab vocab;
  std::vector<TokenSeq> train_words;
  std::vector<std::pair<std::string, std::vector<TokenSeq>>> bins;
};

// Presets: "unbounded" (train len [2,50], bins 1A/2A), "bounded_depth"
// (depth [1,10], bins 1B/2B/3B up to length 150), "bounded_length"
// (train len [2,100] depth [1,15], six single-depth bins 16..21).
Experiment build_experiment(const std::string& name, int n, uint64_t seed,
                            int train_size = 10'000, int bin_size = 1'000);

struct SweepRun {
  ModelConfig config;
  double lr = 0.0;
  std::vector<double> bin_accuracy;  // final epoch, per bin
  int epochs_run = 0;
  double wall_seconds = 0.0;
};

struct SweepResult {
  std::vector<std::string> bin_names;
  std::vector<SweepRun> runs;          // sorted by first-bin accuracy, desc
  std::vector<double> top5_mean;       // per bin, over the top-5 runs
  bool under_five = false;             // fewer than 5 runs completed
};

SweepResult sweep(const Experiment& exp,
                  const std::vector<std::pair<ModelConfig, double>>& grid,
                  const TrainConfig& base);

// The stock hyperparameter grid for a model family (hidden x layers x lr).
std::vector<std::pair<ModelConfig, double>> default_grid(ModelKind kind,
                                                         int vocab_size,
                                                         uint64_t seed);

// Accuracy on fresh unrestricted-depth bins (len [2,50]) sampled from each
// (p, q) pair.
std::vector<std::pair<std::string, double>> robustness_eval(
    const SequenceModel& model, int n, uint64_t seed, int bin_size = 1'000,
    const std::vector<std::pair<double, double>>& distributions = {
        {0.5, 0.25}, {0.4, 0.35}, {0.6, 0.15}});

}  // namespace dycklab
