#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "dycklab/probing.hpp"

using namespace dycklab;

namespace {

ModelConfig small_lstm(int hidden = 8, uint64_t seed = 3) {
  ModelConfig cfg;
  cfg.kind = ModelKind::kLstm;
  cfg.hidden = hidden;
  cfg.vocab_size = 4;
  cfg.seed = seed;
  return cfg;
}

// Valid words covering every depth class up to max_depth.
std::vector<TokenSeq> depth_cover(const Vocab& v, int max_depth) {
  std::vector<TokenSeq> words;
  for (int d = 1; d <= max_depth; ++d) {
    TokenSeq w;
    for (int i = 0; i < d; ++i) w.push_back(v.open_index(i % v.n));
    for (int i = d - 1; i >= 0; --i) w.push_back(v.close_index(i % v.n));
    words.push_back(w);
  }
  return words;
}

}  // namespace

TEST_CASE("stack position labels track the open brackets") {
  Vocab v = Vocab::dyck(2);
  auto rows = stack_position_labels(parse_word(v, "(["), v);
  REQUIRE(rows.size() == 2);
  // After "(": the top is a round bracket, everything deeper absent.
  CHECK(rows[0][0] == 0);
  for (int i = 1; i < kStackHeads; ++i) CHECK(rows[0][i] == 2);
  // After "([": square on top, round below it.
  CHECK(rows[1][0] == 1);
  CHECK(rows[1][1] == 0);
  for (int i = 2; i < kStackHeads; ++i) CHECK(rows[1][i] == 2);

  auto deep = stack_position_labels(parse_word(v, "([(["), v);
  CHECK(deep[3][0] == 1);
  CHECK(deep[3][1] == 0);
  CHECK(deep[3][2] == 1);
  CHECK(deep[3][3] == 0);

  // Closing pops: after "([]" the square is gone again.
  auto popped = stack_position_labels(parse_word(v, "([]"), v);
  CHECK(popped[2][0] == 0);
  CHECK(popped[2][1] == 2);

  CHECK_THROWS_AS(stack_position_labels(parse_word(v, ")"), v), InputError);
  CHECK_THROWS_AS(stack_position_labels({}, Vocab::dyck(3)), ConfigError);
}

TEST_CASE("oracle features are one-hot depths") {
  Vocab v = Vocab::dyck(2);
  auto feats = oracle_features({parse_word(v, "(())")}, v, 11);
  REQUIRE(feats.size() == 1);
  CHECK(feats[0].features.rows() == 4);
  CHECK(feats[0].features.cols() == 11);
  CHECK(feats[0].depths == std::vector<int>{1, 2, 1, 0});
  CHECK(feats[0].features.at(0, 1) == 1.0);
  CHECK(feats[0].features.at(1, 2) == 1.0);
  CHECK(feats[0].features.at(3, 0) == 1.0);
  CHECK(feats[0].features.at(0, 0) == 0.0);
  CHECK_FALSE(feats[0].features.requires_grad());

  // Depth 3 does not fit three classes.
  CHECK_THROWS_AS(oracle_features({parse_word(v, "((()))")}, v, 3), LabelError);
}

TEST_CASE("probe features come from the frozen model states") {
  Vocab v = Vocab::dyck(2);
  SequenceModel model(small_lstm());
  std::vector<TokenSeq> words{parse_word(v, "([])"), parse_word(v, "()")};
  auto hidden_feats = probe_features(model, words, v, false);
  auto cell_feats = probe_features(model, words, v, true);
  REQUIRE(hidden_feats.size() == 2);
  CHECK(hidden_feats[0].features.rows() == 4);
  CHECK(hidden_feats[0].features.cols() == 8);
  CHECK(hidden_feats[0].depths == std::vector<int>{1, 2, 1, 0});
  CHECK_FALSE(hidden_feats[0].features.requires_grad());
  // Cell and hidden states are different signals.
  CHECK(cell_feats[0].features.data() != hidden_feats[0].features.data());

  // Traces must match the model's own reported states.
  auto tr = model.trace_states({words[0]});
  CHECK(hidden_feats[0].features.data() == tr.hidden[0].data());
  CHECK(cell_feats[0].features.data() == tr.cell[0].data());

  SequenceModel rnn([] {
    ModelConfig cfg;
    cfg.kind = ModelKind::kRnnTanh;
    cfg.hidden = 8;
    cfg.vocab_size = 4;
    return cfg;
  }());
  CHECK_NOTHROW(probe_features(rnn, words, v, false));
  CHECK_THROWS_AS(probe_features(rnn, words, v, true), ConfigError);
}

TEST_CASE("probe config validation") {
  ProbeConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  ProbeConfig bad = cfg;
  bad.num_classes = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("depth probe shapes and prediction") {
  DepthProbe probe(11, 5, 0);
  CHECK(probe.input_dim() == 11);
  CHECK(probe.num_classes() == 5);
  REQUIRE(probe.params().size() == 4);
  CHECK(probe.params()[0].second.rows() == 11);
  CHECK(probe.params()[0].second.cols() == kProbeHidden);
  CHECK(probe.params()[2].second.cols() == 5);
  Tensor x = Tensor::constant(3, 11, 0.1);
  CHECK(probe.logits(x).rows() == 3);
  CHECK(probe.logits(x).cols() == 5);
  CHECK(probe.predict(x).size() == 3);
  CHECK_THROWS_AS(probe.logits(Tensor::constant(1, 4, 0.0)), InputError);
}

TEST_CASE("depth probe masters oracle features") {
  Vocab v = Vocab::dyck(2);
  auto words = depth_cover(v, 10);
  // A few non-nested shapes so the data is not purely triangular.
  words.push_back(parse_word(v, "()[]()"));
  words.push_back(parse_word(v, "(()[])[]"));
  auto data = oracle_features(words, v, 11);
  ProbeConfig cfg;
  cfg.num_classes = 11;
  cfg.epochs = 200;
  cfg.batch_size = 64;
  cfg.lr = 1e-2;
  cfg.seed = 5;
  ProbeOutcome out = train_depth_probe(data, data, cfg);
  CHECK(out.accuracy == 1.0);
  CHECK(out.epoch_loss.size() == out.epoch_accuracy.size());
  CHECK(!out.epoch_loss.empty());
  // Early stop at a perfect score.
  CHECK(out.epoch_loss.size() <= 200);
  CHECK(probe_sequence_accuracy(out.probe, data) == 1.0);
}

TEST_CASE("depth probe rejects labels beyond its classes") {
  Vocab v = Vocab::dyck(2);
  auto data = oracle_features(depth_cover(v, 4), v, 11);
  ProbeConfig cfg;
  cfg.num_classes = 3;  // depths reach 4
  CHECK_THROWS_AS(train_depth_probe(data, data, cfg), LabelError);
}

TEST_CASE("stack heads layout") {
  NamedParams heads = make_stack_heads(16, 9);
  REQUIRE(heads.size() == 2 * kStackHeads);
  CHECK(heads[0].first == "aux1.W");
  CHECK(heads[1].first == "aux1.b");
  CHECK(heads[18].first == "aux10.W");
  CHECK(heads[0].second.rows() == 16);
  CHECK(heads[0].second.cols() == kStackClasses);
  CHECK(heads[1].second.rows() == 1);
  for (auto& [name, t] : heads) CHECK(t.requires_grad());
}

TEST_CASE("auxiliary stack loss guards its inputs") {
  Vocab v = Vocab::dyck(2);
  NamedParams heads = make_stack_heads(8, 0);
  CHECK_THROWS_AS(make_stack_aux_loss(heads, v, 0.0), ConfigError);
  CHECK_THROWS_AS(make_stack_aux_loss(heads, v, -0.5), ConfigError);
  CHECK_THROWS_AS(make_stack_aux_loss(heads, Vocab::dyck(3), 0.05),
                  ConfigError);
  NamedParams trimmed(heads.begin(), heads.begin() + 4);
  CHECK_THROWS_AS(make_stack_aux_loss(trimmed, v, 0.05), ConfigError);
}

TEST_CASE("auxiliary stack loss scales linearly in lambda") {
  Vocab v = Vocab::dyck(2);
  ModelConfig mcfg = small_lstm();
  SequenceModel model(mcfg);
  NamedParams heads = make_stack_heads(8, 1);
  auto data = make_dataset({parse_word(v, "([])"), parse_word(v, "()")}, v);
  std::vector<const NcpSample*> batch{&data[0], &data[1]};
  auto fwd = model.forward_train({&data[0].tokens, &data[1].tokens});

  ExtraLoss a = make_stack_aux_loss(heads, v, 0.05);
  ExtraLoss b = make_stack_aux_loss(heads, v, 0.10);
  double la = a(fwd, batch).scalar_value();
  double lb = b(fwd, batch).scalar_value();
  CHECK(la > 0.0);
  CHECK(lb == doctest::Approx(2 * la).epsilon(1e-9));
}

TEST_CASE("joint training with auxiliary heads") {
  Vocab v = Vocab::dyck(2);
  auto words = enumerate_words(v, 6);
  words.erase(words.begin());
  auto data = make_dataset(words, v);
  ModelConfig mcfg = small_lstm(8, 2);
  TrainConfig tcfg;
  tcfg.epochs = 2;
  tcfg.batch_size = 16;
  tcfg.lr = 1e-2;
  StackAuxModel out = train_with_stack_aux(mcfg, data, {{"bin", data}}, tcfg);
  CHECK(out.heads.size() == 2 * kStackHeads);
  CHECK(out.history.history.size() == 2);
  // The heads moved: training reached them through the extra loss.
  NamedParams fresh = make_stack_heads(8, derive_seed(mcfg.seed, 77));
  bool moved = false;
  for (size_t i = 0; i < fresh.size() && !moved; ++i)
    moved = fresh[i].second.data() != out.heads[i].second.data();
  CHECK(moved);

  StackEvalReport rep = eval_stack_extraction(out.model, out.heads, words, v);
  REQUIRE(rep.accuracy.size() == kStackHeads);
  REQUIRE(rep.recall.size() == kStackHeads);
  REQUIRE(rep.recall_support.size() == kStackHeads);
  // Depth 3 is the deepest in this word set.
  CHECK(rep.recall_support[2] > 0);
  CHECK(rep.recall_support[3] == 0);
  CHECK(rep.recall[3] == 0.0);

  ModelConfig bad = mcfg;
  bad.kind = ModelKind::kTransformer;
  CHECK_THROWS_AS(train_with_stack_aux(bad, data, {}, tcfg), ConfigError);
}

TEST_CASE("hand-built heads read a transparent encoding perfectly") {
  // Features: 30 columns, position i holding a 3-wide one-hot of its class.
  // Heads that copy those columns classify every position exactly.
  Vocab v = Vocab::dyck(2);
  std::vector<TokenSeq> words{parse_word(v, "([])"), parse_word(v, "(()[])"),
                              parse_word(v, "[]")};
  NamedParams heads;
  for (int i = 0; i < kStackHeads; ++i) {
    Tensor w = Tensor::zeros(kStackHeads * kStackClasses, kStackClasses);
    for (int c = 0; c < kStackClasses; ++c)
      w.data()[(i * kStackClasses + c) * kStackClasses + c] = 1.0;
    heads.emplace_back("aux" + std::to_string(i + 1) + ".W", w);
    heads.emplace_back("aux" + std::to_string(i + 1) + ".b",
                       Tensor::zeros(1, kStackClasses));
  }
  std::vector<Tensor> features;
  for (const auto& w : words) {
    auto labels = stack_position_labels(w, v);
    Tensor f = Tensor::zeros(static_cast<int>(w.size()),
                             kStackHeads * kStackClasses);
    for (size_t t = 0; t < labels.size(); ++t)
      for (int i = 0; i < kStackHeads; ++i)
        f.data()[t * kStackHeads * kStackClasses + i * kStackClasses +
                 labels[t][i]] = 1.0;
    features.push_back(f);
  }
  StackEvalReport rep = eval_stack_heads(features, heads, words, v);
  for (int i = 0; i < kStackHeads; ++i) {
    CHECK(rep.accuracy[i] == 1.0);
    if (rep.recall_support[i] > 0) CHECK(rep.recall[i] == 1.0);
  }
  // Position 1 is populated by every word here; position 2 by two of them.
  CHECK(rep.recall_support[0] == 3);
  CHECK(rep.recall_support[1] == 2);
}

TEST_CASE("state dumps round-trip bit-identically") {
  Vocab v = Vocab::dyck(2);
  SequenceModel model(small_lstm(8, 11));
  std::vector<TokenSeq> words{parse_word(v, "([])"), parse_word(v, "()[]")};
  std::ostringstream out;
  dump_states(model, words, v, false, out);
  std::string text = out.str();
  CHECK(text.rfind("word,step,prefix_len,depth,s0", 0) == 0);

  std::istringstream in(text);
  auto rows = load_state_dump(in);
  REQUIRE(rows.size() == 8);  // 4 + 4 steps
  CHECK(rows[0].word == "([])");
  CHECK(rows[0].step == 0);
  CHECK(rows[0].prefix_len == 1);
  CHECK(rows[3].depth == 0);
  CHECK(rows[4].word == "()[]");

  auto tr = model.trace_states(words);
  for (int t = 0; t < 4; ++t) {
    const auto& expect = tr.hidden[0].data();
    for (int c = 0; c < 8; ++c) {
      // Bitwise equality: the CSV must not lose any precision.
      CHECK(rows[t].state[c] == expect[t * 8 + c]);
    }
  }
  // Depths always recomputed from the word text.
  auto depths = prefix_depths(words[0], v);
  for (int t = 0; t < 4; ++t) CHECK(rows[t].depth == depths[t]);

  // Cell dumps need an LSTM.
  SequenceModel rnn([] {
    ModelConfig cfg;
    cfg.kind = ModelKind::kRnnRelu;
    cfg.hidden = 8;
    cfg.vocab_size = 4;
    return cfg;
  }());
  std::ostringstream sink;
  CHECK_THROWS_AS(dump_states(rnn, words, v, true, sink), ConfigError);

  std::istringstream junk("definitely,not,a,dump\n1,2,3\n");
  CHECK_THROWS_AS(load_state_dump(junk), IoError);
}
