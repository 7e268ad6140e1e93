#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dycklab/models.hpp"
#include "dycklab/ncp.hpp"

namespace dycklab {

inline constexpr int kProbeHidden = 32;  // fixed probe capacity
inline constexpr int kStackHeads = 10;   // stack positions read, 1 = top
inline constexpr int kStackClasses = 3;  // round-open, square-open, absent

struct ProbeConfig {
  int num_classes = 11;  // depth classes 0..10
  int epochs = 30;
  int batch_size = 200;
  double lr = 1e-3;  // Adam
  double early_stop = 1.0;
  uint64_t seed = 0;
  bool verbose = false;

  void validate() const;
};

// Per-step feature rows paired with per-step depth labels for one word.
struct ProbeSequence {
  Tensor features;          // [T x input_dim], detached
  std::vector<int> depths;  // length T
};

// Features read off a frozen model's per-step states (cell or hidden).
std::vector<ProbeSequence> probe_features(const SequenceModel& model,
                                          const std::vector<TokenSeq>& words,
                                          const Vocab& vocab, bool use_cell);

// One-hot depth rows as stand-in features: a separability sanity check that
// must reach accuracy 1.0 independent of any trained model.
std::vector<ProbeSequence> oracle_features(const std::vector<TokenSeq>& words,
                                           const Vocab& vocab,
                                           int num_classes);

// Single-hidden-layer feedforward depth classifier over state rows.
class DepthProbe {
 public:
  DepthProbe(int input_dim, int num_classes, uint64_t seed);

  NamedParams& params() { return params_; }
  const NamedParams& params() const { return params_; }
  int input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }

  Tensor logits(const Tensor& features) const;       // [N x in] -> [N x classes]
  std::vector<int> predict(const Tensor& features) const;  // row argmax

 private:
  int input_dim_;
  int num_classes_;
  NamedParams params_;  // w1 [in x 32], b1, w2 [32 x classes], b2
};

// Fraction of sequences whose depth is predicted correctly at every step.
double probe_sequence_accuracy(const DepthProbe& probe,
                               const std::vector<ProbeSequence>& data);

struct ProbeOutcome {
  DepthProbe probe;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;  // sequence-level on eval_data
  double accuracy = 0.0;               // final/best epoch value
};

// Adam + softmax cross-entropy over the flattened step rows; evaluation is
// sequence-level (all steps correct).  Throws LabelError when a depth label
// reaches num_classes.
ProbeOutcome train_depth_probe(const std::vector<ProbeSequence>& train_data,
                               const std::vector<ProbeSequence>& eval_data,
                               const ProbeConfig& cfg);

// --- stack content extraction (Dyck-2) ---------------------------------------

// Class of stack position i (1 = top) after each prefix of a Dyck-2 word:
// 0 = round-open, 1 = square-open, 2 = absent.  Shape [T][kStackHeads].
std::vector<std::vector<uint8_t>> stack_position_labels(const TokenSeq& word,
                                                        const Vocab& vocab);

// Ten parallel affine heads over the model's output state: aux{i}.W [H x 3]
// and aux{i}.b, i in 1..kStackHeads.
NamedParams make_stack_heads(int hidden, uint64_t seed);

// Extra loss for joint training: lambda * mean over heads and alive steps of
// the per-step cross-entropy.  lambda <= 0 is a configuration error.
ExtraLoss make_stack_aux_loss(const NamedParams& heads, const Vocab& vocab,
                              double lambda);

struct StackAuxModel {
  SequenceModel model;
  NamedParams heads;
  TrainResult history;
};

// Joint NCP + auxiliary-head training (default lambda 1/20).
StackAuxModel train_with_stack_aux(const ModelConfig& mcfg,
                                   const std::vector<NcpSample>& train_set,
                                   const NamedBins& bins,
                                   const TrainConfig& tcfg,
                                   double lambda = 1.0 / 20.0);

struct StackEvalReport {
  // Per position i (index i-1): fraction of sequences predicted correctly at
  // every step; recall restricts the population to sequences that reach
  // depth >= i at least once.
  std::vector<double> accuracy;
  std::vector<double> recall;
  std::vector<int> recall_support;
};

// Heads applied to externally supplied per-step features, one [T x D] tensor
// per word (lets tests drive the heads with oracle features).
StackEvalReport eval_stack_heads(const std::vector<Tensor>& features,
                                 const NamedParams& heads,
                                 const std::vector<TokenSeq>& words,
                                 const Vocab& vocab);

StackEvalReport eval_stack_extraction(const SequenceModel& model,
                                      const NamedParams& heads,
                                      const std::vector<TokenSeq>& words,
                                      const Vocab& vocab);

// --- state dumps --------------------------------------------------------------

// CSV with header word,step,prefix_len,depth,s0..; one row per (word, step).
// Depth labels are recomputed from the raw word, never cached.  Doubles are
// printed with enough digits to round-trip bit-identically.
void dump_states(const SequenceModel& model, const std::vector<TokenSeq>& words,
                 const Vocab& vocab, bool use_cell, std::ostream& out);

struct StateDumpRow {
  std::string word;
  int step = 0;        // 0-based
  int prefix_len = 0;  // step + 1
  int depth = 0;
  std::vector<double> state;
};

std::vector<StateDumpRow> load_state_dump(std::istream& in);

}  // namespace dycklab
