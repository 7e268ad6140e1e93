#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dycklab/dyck.hpp"
#include "dycklab/optim.hpp"
#include "dycklab/tensor.hpp"

namespace dycklab {

enum class ModelKind { kRnnTanh, kRnnRelu, kLstm, kTransformer };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::kLstm;
  int hidden = 32;
  int layers = 1;
  int heads = 1;               // transformer only
  bool use_positional = true;  // transformer only
  int vocab_size = 4;
  uint64_t seed = 0;
  int max_positions = 512;  // transformer positional table size

  void validate() const;
};

// A trainable sequence scorer: tokens in, per-step logistic scores over the
// vocabulary out.  Recurrent kinds run batched over a padded step grid;
// the transformer runs per sequence with causal masking.
class SequenceModel {
 public:
  explicit SequenceModel(const ModelConfig& cfg);
  SequenceModel(SequenceModel&&) = default;
  SequenceModel& operator=(SequenceModel&&) = default;
  SequenceModel(const SequenceModel&) = delete;
  SequenceModel& operator=(const SequenceModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  NamedParams& params() { return params_; }
  const NamedParams& params() const { return params_; }
  Tensor& param(const std::string& name);

  // Probabilities per sequence, shape [T x vocab]; no gradients recorded
  // (call outside any GradientTape).
  std::vector<Tensor> score_sequences(const std::vector<TokenSeq>& words) const;

  struct TrainForward {
    bool step_grid = false;
    // step_grid: preds[t] is [B x vocab] for step t (rows past a sequence's
    // end are garbage and must be masked).  Otherwise preds[i] is the
    // [T_i x vocab] matrix for batch element i.
    std::vector<Tensor> preds;
    std::vector<Tensor> hidden;  // step grid of top-layer h_t (recurrent kinds)
    std::vector<Tensor> cell;    // step grid of top-layer c_t (LSTM)
  };
  TrainForward forward_train(const std::vector<const TokenSeq*>& batch) const;

  // Top-layer per-step states for probing, one [T x hidden] pair per word.
  struct StateTrace {
    std::vector<Tensor> hidden;
    std::vector<Tensor> cell;  // empty unless LSTM
  };
  StateTrace trace_states(const std::vector<TokenSeq>& words) const;

 private:
  struct Ctx;
  TrainForward run_recurrent(const std::vector<const TokenSeq*>& batch,
                             bool want_states) const;
  Tensor transformer_one(const TokenSeq& seq) const;
  const Tensor& p(const std::string& name) const;

  ModelConfig cfg_;
  NamedParams params_;
};

// --- generation --------------------------------------------------------------

// Anything that can assign per-step scores to prefixes; the model adapter
// batches internally, the oracle answers from the grammar.
struct SequenceScorer {
  virtual ~SequenceScorer() = default;
  // One [T x vocab] score matrix per word; rows follow prefixes 1..T.
  virtual std::vector<Tensor> score(const std::vector<TokenSeq>& words) = 0;
};

class ModelScorer : public SequenceScorer {
 public:
  explicit ModelScorer(const SequenceModel& model) : model_(&model) {}
  std::vector<Tensor> score(const std::vector<TokenSeq>& words) override;

 private:
  const SequenceModel* model_;
};

class OracleScorer : public SequenceScorer {
 public:
  explicit OracleScorer(const Vocab& vocab) : vocab_(vocab) {}
  std::vector<Tensor> score(const std::vector<TokenSeq>& words) override;

 private:
  Vocab vocab_;
};

// Breadth-first expansion over all symbols scored above the threshold,
// starting from the opening brackets (the empty word is always emitted);
// prefixes are emitted whenever they are balanced.  Words come back in
// length-then-lexicographic order.
std::vector<TokenSeq> generate_all(SequenceScorer& scorer, const Vocab& vocab,
                                   int max_len, double threshold = 0.5,
                                   size_t frontier_cap = 2'000'000);

}  // namespace dycklab
