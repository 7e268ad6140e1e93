// dycklab: command-line front end for the Dyck-language experiment suite.
//
// Exit codes: 0 success, 1 domain failure (structured JSON on stderr),
// 2 usage error.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dycklab/dyck.hpp"
#include "dycklab/io.hpp"
#include "dycklab/models.hpp"
#include "dycklab/ncp.hpp"
#include "dycklab/pda.hpp"
#include "dycklab/probing.hpp"
#include "dycklab/rnn_construction.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dycklab;

namespace {

int g_exit = 0;  // set to 1 by subcommands that complete but report failure

fs::path out_root() {
  const char* env = std::getenv("DYCKLAB_OUT");
  return env && *env ? fs::path(env) : fs::path(".");
}

// In CI mode (DYCKLAB_CI set) every stochastic subcommand must pin its seed.
void require_seed_in_ci(const CLI::App* sub) {
  if (std::getenv("DYCKLAB_CI") && sub->count("--seed") == 0)
    throw CLI::RequiredError(sub->get_name() + " --seed (CI mode)");
}

void emit_manifest(const fs::path& dir, json m) {
  m["output_dir"] = dir.string();
  fs::create_directories(dir);
  write_text_file((dir / "manifest.json").string(), m.dump(2) + "\n");
}

std::string normalize_name(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

int parse_dyck_name(const std::string& s) {
  // accepts "dyck2", "dyck-2", "2"
  std::string t = s;
  if (t.rfind("dyck", 0) == 0) t = t.substr(4);
  if (!t.empty() && t[0] == '-') t = t.substr(1);
  try {
    return std::stoi(t);
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse language name '" + s + "'");
  }
}

std::pair<int, int> parse_bits_range(const std::string& s) {
  try {
    auto pos = s.find("..");
    if (pos == std::string::npos) {
      int b = std::stoi(s);
      return {b, b};
    }
    int lo = std::stoi(s.substr(0, pos));
    int hi = std::stoi(s.substr(pos + 2));
    if (hi < lo) throw ConfigError("empty bits range '" + s + "'");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse bits range '" + s +
                      "' (expected e.g. 2..64)");
  }
}

json sampler_json(const SamplerParams& sp) {
  return json{{"p", sp.p}, {"q", sp.q}, {"seed", sp.seed}};
}

json model_json(const ModelConfig& cfg) {
  return json::parse(model_config_json(cfg));
}

Activation parse_activation(const std::string& s) {
  if (s == "satsigma") return Activation::kSatSigma;
  if (s == "relupairs") return Activation::kReluPairs;
  throw ConfigError("unknown activation '" + s +
                    "' (expected satsigma or relupairs)");
}

ConstructedRnn load_or_compile(const std::string& weights_path, int dyck_n,
                               const std::string& activation) {
  if (!weights_path.empty()) {
    std::ifstream in(weights_path);
    if (!in) throw IoError("cannot open '" + weights_path + "'");
    return read_rnn(in);
  }
  if (dyck_n < 1)
    throw ConfigError("need either --weights or --dyck to obtain a network");
  return compile(build_dyck_dpda(dyck_n), parse_activation(activation));
}

// Fully nested word of the requested depth with random bracket types.
TokenSeq nested_word(const Vocab& vocab, std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, vocab.n - 1);
  std::vector<int> types(depth);
  TokenSeq w;
  w.reserve(2 * static_cast<size_t>(depth));
  for (int i = 0; i < depth; ++i) {
    types[i] = pick(rng);
    w.push_back(vocab.open_index(types[i]));
  }
  for (int i = depth - 1; i >= 0; --i) w.push_back(vocab.close_index(types[i]));
  return w;
}

// Exact-depth word: a nested core padded with shallow random material.
TokenSeq deep_word(const Vocab& vocab, std::mt19937_64& rng, int depth,
                   int len_hi) {
  SamplerParams sp;
  TokenSeq w = nested_word(vocab, rng, depth);
  for (int attempts = 0; attempts < 20; ++attempts) {
    if (static_cast<int>(w.size()) + 2 > len_hi) break;
    TokenSeq extra = sample_word(sp, vocab, rng);
    if (extra.empty()) continue;
    if (static_cast<int>(w.size() + extra.size()) > len_hi) continue;
    if (max_depth(extra, vocab) > depth) continue;
    w.insert(w.end(), extra.begin(), extra.end());
  }
  return w;
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  return file;
}

// ---------------------------------------------------------------- gen ------

struct GenOpts {
  int n = 2;
  std::string preset;
  double p = 0.5, q = 0.25;
  uint64_t seed = 0;
  int train_size = 10'000, bin_size = 1'000;
  int size = 0, len_lo = 2, len_hi = 50, depth_lo = 0, depth_hi = 0;
  std::string out_dir;
};

void run_gen(const GenOpts& o) {
  fs::path dir = o.out_dir.empty() ? out_root() / "gen" : fs::path(o.out_dir);
  fs::create_directories(dir);
  json m{{"command", "gen"}, {"n", o.n},
         {"sampler", sampler_json({o.p, o.q, o.seed})}};
  auto write_bin = [&](const std::string& name,
                       const std::vector<TokenSeq>& words) {
    DatasetFile ds{o.n, o.p, o.q, o.seed, words};
    write_dataset((dir / (name + ".txt")).string(), ds);
    std::cout << name << ": " << words.size() << " words -> "
              << (dir / (name + ".txt")).string() << "\n";
  };
  if (!o.preset.empty()) {
    Experiment exp = build_experiment(normalize_name(o.preset), o.n, o.seed,
                                      o.train_size, o.bin_size);
    m["experiment"] = exp.name;
    m["train_size"] = o.train_size;
    m["bin_size"] = o.bin_size;
    write_bin("train", exp.train_words);
    for (const auto& [name, words] : exp.bins) write_bin(name, words);
  } else {
    if (o.size <= 0)
      throw ConfigError("custom gen needs --size (or use --preset)");
    BinSpec spec{o.size, o.len_lo, o.len_hi, std::nullopt};
    if (o.depth_lo > 0 || o.depth_hi > 0)
      spec.depth = std::pair{o.depth_lo, o.depth_hi};
    SamplerParams sp{o.p, o.q, o.seed};
    m["bin"] = json{{"size", o.size},
                    {"len", {o.len_lo, o.len_hi}},
                    {"depth", spec.depth ? json{spec.depth->first,
                                                spec.depth->second}
                                         : json(nullptr)}};
    write_bin("data", sample_bin(spec, sp, Vocab::dyck(o.n)));
  }
  emit_manifest(dir, m);
}

// ---------------------------------------------------------- enumerate ------

struct EnumOpts {
  int n = 2;
  int max_len = 0;
  std::string out;
  bool quiet = false;
};

void run_enumerate(const EnumOpts& o) {
  Vocab vocab = Vocab::dyck(o.n);
  auto words = enumerate_words(vocab, o.max_len);
  if (!o.quiet) {
    std::ofstream file;
    std::ostream& out = open_or_stdout(o.out, file);
    for (const auto& w : words) out << format_word(vocab, w) << "\n";
  }
  std::cout << "total " << words.size() << "\n";
}

// -------------------------------------------------------- compile-dpda -----

struct CompileOpts {
  int dyck_n = 0;
  std::string dpda_file;
  std::string activation = "satsigma";
  std::string out;
};

void run_compile(const CompileOpts& o) {
  Dpda dpda;
  if (!o.dpda_file.empty()) {
    dpda = parse_dpda(read_text_file(o.dpda_file));
  } else if (o.dyck_n >= 1) {
    dpda = build_dyck_dpda(o.dyck_n);
  } else {
    throw ConfigError("need --dyck <n> or --dpda-file <path>");
  }
  ConstructedRnn rnn = compile(dpda, parse_activation(o.activation));
  std::ofstream out(o.out);
  if (!out) throw IoError("cannot open '" + o.out + "' for writing");
  write_rnn(rnn, out);
  std::cout << json{{"states", rnn.nq},
                    {"inputs", rnn.ns},
                    {"stack_symbols", rnn.ng},
                    {"hidden_dim", rnn.hidden_dim()},
                    {"layers", 5},
                    {"out", o.out}}
                   .dump()
            << "\n";
}

// -------------------------------------------------------------- verify -----

struct VerifyOpts {
  std::string weights;
  int dyck_n = 0;
  std::string against;
  int trials = 10'000;
  int exhaustive_len = 10;
  int max_len = 200;
  int max_depth = 40;
  uint64_t seed = 0;
  std::string activation = "satsigma";
};

struct TraceCheck {
  bool ok = true;
  int step = -1;
  std::string detail;
};

TraceCheck compare_traces(const Dpda& oracle, const PdaRun& pr,
                          const ConstructedRnn& rnn, const RnnRun& rr) {
  TraceCheck c;
  if (pr.trace.size() != rr.trace.size()) {
    c.ok = false;
    c.detail = "trace length mismatch";
    return c;
  }
  for (size_t t = 0; t < pr.trace.size(); ++t) {
    const PdaConfig& cfg = pr.trace[t];
    int rstate = rnn_state(rnn, rr.trace[t]);
    if (rnn.dpda.states[rstate] != oracle.states[cfg.state]) {
      c.ok = false;
      c.step = static_cast<int>(t);
      c.detail = "state " + rnn.dpda.states[rstate] + " vs " +
                 oracle.states[cfg.state];
      return c;
    }
    std::vector<int> rstack = rnn_stack(rnn, rr.trace[t]);
    bool same = rstack.size() == cfg.stack.size();
    for (size_t i = 0; same && i < rstack.size(); ++i)
      same = rnn.dpda.stack_symbols[rstack[i]] ==
             oracle.stack_symbols[cfg.stack[i]];
    if (!same) {
      c.ok = false;
      c.step = static_cast<int>(t);
      c.detail = "stack contents differ";
      return c;
    }
  }
  return c;
}

void run_verify(const VerifyOpts& o) {
  int n = parse_dyck_name(o.against);
  Vocab vocab = Vocab::dyck(n);
  Dpda oracle = build_dyck_dpda(n);
  ConstructedRnn rnn = load_or_compile(o.weights, o.dyck_n ? o.dyck_n : n,
                                       o.activation);
  if (rnn.ns != vocab.size())
    throw ConfigError("network reads " + std::to_string(rnn.ns) +
                      " symbols but " + o.against + " has " +
                      std::to_string(vocab.size()));

  long checked = 0, mismatches = 0;
  json first_bad = json::array();
  auto check_word = [&](const TokenSeq& w) {
    PdaRun pr = run(oracle, w);
    RnnRun rr = rnn_run(rnn, w);
    ++checked;
    TraceCheck c = compare_traces(oracle, pr, rnn, rr);
    if (pr.accepted != rr.accepted || !c.ok) {
      ++mismatches;
      if (first_bad.size() < 5)
        first_bad.push_back(json{{"word", format_word(vocab, w)},
                                 {"oracle_accepts", pr.accepted},
                                 {"network_accepts", rr.accepted},
                                 {"trace_step", c.step},
                                 {"detail", c.detail}});
    }
  };

  auto exhaustive = enumerate_words(vocab, o.exhaustive_len);
  for (const auto& w : exhaustive) check_word(w);
  size_t n_exhaustive = exhaustive.size();
  exhaustive.clear();

  SamplerParams sp;
  sp.seed = derive_seed(o.seed, 1);
  BinSpec spec{o.trials, 2, o.max_len, std::pair{1, o.max_depth}};
  auto positives = sample_bin(spec, sp, vocab);
  for (const auto& w : positives) check_word(w);
  long n_neg = 0;
  for (size_t i = 0; i < positives.size(); ++i) {
    check_word(corrupt_word(positives[i], vocab, derive_seed(o.seed, 1000 + i)));
    ++n_neg;
  }

  json report{{"against", "dyck" + std::to_string(n)},
              {"exhaustive_len", o.exhaustive_len},
              {"exhaustive", n_exhaustive},
              {"positives", positives.size()},
              {"negatives", n_neg},
              {"checked", checked},
              {"mismatches", mismatches},
              {"agreement",
               checked ? 1.0 - static_cast<double>(mismatches) / checked : 0.0},
              {"first_mismatches", first_bad}};
  std::cout << report.dump(2) << "\n";
  if (mismatches) g_exit = 1;
}

// ------------------------------------------------------ precision-sweep ----

struct SweepBitsOpts {
  std::string weights;
  int dyck_n = 0;
  std::string bits = "2..32";
  int per_depth = 10;
  int depth_max = 12;
  int len_hi = 120;
  uint64_t seed = 0;
  std::string out;
  std::string activation = "satsigma";
};

void run_precision_sweep(const SweepBitsOpts& o) {
  ConstructedRnn rnn = load_or_compile(o.weights, o.dyck_n, o.activation);
  int n = rnn.ns / 2;
  Vocab vocab = Vocab::dyck(n);
  Dpda oracle = build_dyck_dpda(n);
  auto [bits_lo, bits_hi] = parse_bits_range(o.bits);

  std::mt19937_64 rng(o.seed);
  std::vector<std::vector<TokenSeq>> by_depth(o.depth_max + 1);
  for (int d = 1; d <= o.depth_max; ++d)
    for (int i = 0; i < o.per_depth; ++i)
      by_depth[d].push_back(deep_word(vocab, rng, d, o.len_hi));

  std::ofstream file;
  std::ostream& out = open_or_stdout(o.out, file);
  out << "bits,depth,height,total,agree,rate\n";
  for (int b = bits_lo; b <= bits_hi; ++b) {
    for (int d = 1; d <= o.depth_max; ++d) {
      int agree = 0;
      for (const auto& w : by_depth[d]) {
        FixedRun fr = rnn_run_fixed(rnn, w, b);
        bool exact_accepts = run(oracle, w).accepted;
        if (!fr.first_divergence && fr.accepted == exact_accepts) ++agree;
      }
      int total = static_cast<int>(by_depth[d].size());
      out << b << ',' << d << ',' << d + 1 << ',' << total << ',' << agree
          << ',' << (total ? static_cast<double>(agree) / total : 0.0) << "\n";
    }
  }
}

// --------------------------------------------------------------- train -----

struct TrainOpts {
  std::string experiment = "bounded_depth";
  int n = 2;
  std::string model = "lstm";
  int hidden = 32, layers = 1, heads = 1;
  bool no_positional = false;
  double lr = 1e-3;
  int epochs = 100, batch = 32;
  double early_stop = 0.99;
  uint64_t seed = 0;
  int train_size = 10'000, bin_size = 1'000;
  std::string out_dir;
  bool verbose = false;
};

ModelConfig model_config_from(const TrainOpts& o) {
  ModelConfig cfg;
  cfg.kind = parse_model_kind(o.model);
  cfg.hidden = o.hidden;
  cfg.layers = o.layers;
  cfg.heads = o.heads;
  cfg.use_positional = !o.no_positional;
  cfg.vocab_size = 2 * o.n;
  cfg.seed = o.seed;
  return cfg;
}

void write_history_csv(const fs::path& path, const NamedBins& bins,
                       const TrainResult& result) {
  std::ofstream out(path);
  out << "epoch,loss";
  for (const auto& [name, _] : bins) out << ',' << name;
  out << "\n";
  for (const auto& e : result.history) {
    out << e.epoch << ',' << e.loss;
    for (double a : e.bin_accuracy) out << ',' << a;
    out << "\n";
  }
}

void run_train(const TrainOpts& o) {
  auto t0 = std::chrono::steady_clock::now();
  Experiment exp = build_experiment(normalize_name(o.experiment), o.n, o.seed,
                                    o.train_size, o.bin_size);
  auto train_set = make_dataset(exp.train_words, exp.vocab);
  NamedBins bins;
  for (const auto& [name, words] : exp.bins)
    bins.emplace_back(name, make_dataset(words, exp.vocab));

  ModelConfig mcfg = model_config_from(o);
  TrainConfig tcfg;
  tcfg.batch_size = o.batch;
  tcfg.epochs = o.epochs;
  tcfg.lr = o.lr;
  tcfg.early_stop = o.early_stop;
  tcfg.seed = o.seed;
  tcfg.verbose = o.verbose;

  SequenceModel model(mcfg);
  TrainResult result = train(model, train_set, bins, tcfg);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  fs::path dir =
      o.out_dir.empty() ? out_root() / "train" : fs::path(o.out_dir);
  fs::create_directories(dir);
  save_checkpoint((dir / "checkpoint.bin").string(), model);
  write_history_csv(dir / "history.csv", bins, result);
  emit_manifest(dir, json{{"command", "train"},
                          {"experiment", exp.name},
                          {"n", o.n},
                          {"model", model_json(mcfg)},
                          {"sampler", sampler_json({0.5, 0.25, o.seed})},
                          {"train_size", o.train_size},
                          {"bin_size", o.bin_size},
                          {"lr", o.lr},
                          {"epochs", o.epochs},
                          {"batch", o.batch},
                          {"seed", o.seed}});

  json bins_json;
  const auto& last = result.history.back();
  for (size_t i = 0; i < bins.size(); ++i)
    bins_json[bins[i].first] = last.bin_accuracy[i];
  std::cout << json{{"bins", bins_json},
                    {"final_loss", last.loss},
                    {"epochs_run", result.history.size()},
                    {"early_stopped", result.early_stopped},
                    {"wall_seconds", wall},
                    {"checkpoint", (dir / "checkpoint.bin").string()}}
                   .dump(2)
            << "\n";
}

// ---------------------------------------------------------------- eval -----

struct EvalOpts {
  std::string checkpoint;
  std::string experiment = "bounded_depth";
  int n = 2;
  uint64_t seed = 0;
  int bin_size = 1'000;
  double threshold = 0.5;
};

void run_eval(const EvalOpts& o) {
  SequenceModel model = load_checkpoint(o.checkpoint);
  Experiment exp = build_experiment(normalize_name(o.experiment), o.n, o.seed,
                                    /*train_size=*/1, o.bin_size);
  json bins_json;
  for (const auto& [name, words] : exp.bins) {
    auto bin = make_dataset(words, exp.vocab);
    bins_json[name] = evaluate(model, bin, o.threshold).accuracy;
  }
  std::cout << json{{"experiment", exp.name}, {"bins", bins_json}}.dump(2)
            << "\n";
}

// --------------------------------------------------------------- sweep -----

struct SweepOpts {
  std::string experiment = "bounded_depth";
  int n = 2;
  std::string model = "lstm";
  uint64_t seed = 0;
  int epochs = 15, batch = 32;
  int train_size = 2'000, bin_size = 300;
  std::string out_dir;
  bool verbose = false;
};

void run_sweep(const SweepOpts& o) {
  Experiment exp = build_experiment(normalize_name(o.experiment), o.n, o.seed,
                                    o.train_size, o.bin_size);
  auto grid = default_grid(parse_model_kind(o.model), 2 * o.n, o.seed);
  TrainConfig base;
  base.epochs = o.epochs;
  base.batch_size = o.batch;
  base.seed = o.seed;
  base.verbose = o.verbose;
  SweepResult res = sweep(exp, grid, base);

  fs::path dir =
      o.out_dir.empty() ? out_root() / "sweep" : fs::path(o.out_dir);
  fs::create_directories(dir);

  // Long-format CSV, one row per (run, bin), sorted by run_id.
  struct Row {
    std::string run_id;
    const SweepRun* run;
  };
  std::vector<Row> rows;
  for (size_t i = 0; i < res.runs.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "run-%03zu", i);
    rows.push_back({id, &res.runs[i]});
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.run_id < b.run_id; });
  std::ofstream csv(dir / "results.csv");
  csv << "run_id, model, hidden, layers, lr, bin, accuracy, epochs, "
         "wall_time\n";
  for (const auto& row : rows)
    for (size_t b = 0; b < res.bin_names.size(); ++b)
      csv << row.run_id << ", " << model_kind_name(row.run->config.kind)
          << ", " << row.run->config.hidden << ", " << row.run->config.layers
          << ", " << row.run->lr << ", " << res.bin_names[b] << ", "
          << (b < row.run->bin_accuracy.size() ? row.run->bin_accuracy[b]
                                               : 0.0)
          << ", " << row.run->epochs_run << ", " << row.run->wall_seconds
          << "\n";
  csv.close();

  json leaderboard{{"bin_names", res.bin_names},
                   {"top5_mean", res.top5_mean},
                   {"under_five", res.under_five},
                   {"runs", json::array()}};
  for (const auto& row : rows)
    leaderboard["runs"].push_back(json{{"run_id", row.run_id},
                                       {"model", model_json(row.run->config)},
                                       {"lr", row.run->lr},
                                       {"bin_accuracy", row.run->bin_accuracy},
                                       {"epochs", row.run->epochs_run},
                                       {"wall_seconds",
                                        row.run->wall_seconds}});
  write_text_file((dir / "leaderboard.json").string(),
                  leaderboard.dump(2) + "\n");
  emit_manifest(dir, json{{"command", "sweep"},
                          {"experiment", exp.name},
                          {"n", o.n},
                          {"model_family", o.model},
                          {"grid_size", grid.size()},
                          {"epochs", o.epochs},
                          {"train_size", o.train_size},
                          {"bin_size", o.bin_size},
                          {"seed", o.seed}});
  std::cout << "wrote " << (dir / "results.csv").string() << " ("
            << res.runs.size() << " runs)\n";
}

// ---------------------------------------------------------- robustness -----

struct RobustOpts {
  std::string checkpoint;
  int n = 2;
  uint64_t seed = 0;
  int bin_size = 1'000;
};

void run_robustness(const RobustOpts& o) {
  SequenceModel model = load_checkpoint(o.checkpoint);
  auto rows = robustness_eval(model, o.n, o.seed, o.bin_size);
  double lo = 1.0, hi = 0.0;
  json dist;
  for (const auto& [name, acc] : rows) {
    dist[name] = acc;
    lo = std::min(lo, acc);
    hi = std::max(hi, acc);
  }
  std::cout << json{{"distributions", dist}, {"spread", hi - lo}}.dump(2)
            << "\n";
}

// --------------------------------------------------------- probe-depth -----

struct ProbeDepthOpts {
  std::string checkpoint;
  bool oracle = false;
  int n = 2;
  int classes = 11;
  int epochs = 30, batch = 200;
  double lr = 1e-3;
  uint64_t seed = 0;
  int train_size = 2'000, eval_size = 500;
  int len_lo = 2, len_hi = 50, depth_lo = 1, depth_hi = 10;
  std::string which = "cell";
  bool verbose = false;
};

void run_probe_depth(const ProbeDepthOpts& o) {
  Vocab vocab = Vocab::dyck(o.n);
  SamplerParams sp;
  BinSpec train_spec{o.train_size, o.len_lo, o.len_hi,
                     std::pair{o.depth_lo, o.depth_hi}};
  BinSpec eval_spec = train_spec;
  eval_spec.size = o.eval_size;
  sp.seed = derive_seed(o.seed, 0);
  auto train_words = sample_bin(train_spec, sp, vocab);
  sp.seed = derive_seed(o.seed, 1);
  auto eval_words = sample_bin(eval_spec, sp, vocab);

  std::vector<ProbeSequence> train_feats, eval_feats;
  if (o.oracle) {
    train_feats = oracle_features(train_words, vocab, o.classes);
    eval_feats = oracle_features(eval_words, vocab, o.classes);
  } else {
    if (o.checkpoint.empty())
      throw ConfigError("need --checkpoint (or --oracle for the sanity run)");
    SequenceModel model = load_checkpoint(o.checkpoint);
    bool use_cell = o.which == "cell";
    if (!use_cell && o.which != "hidden")
      throw ConfigError("--which must be cell or hidden");
    train_feats = probe_features(model, train_words, vocab, use_cell);
    eval_feats = probe_features(model, eval_words, vocab, use_cell);
  }

  ProbeConfig cfg;
  cfg.num_classes = o.classes;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.lr = o.lr;
  cfg.seed = o.seed;
  cfg.verbose = o.verbose;
  ProbeOutcome out = train_depth_probe(train_feats, eval_feats, cfg);
  std::cout << json{{"features", o.oracle ? "oracle" : o.which},
                    {"accuracy", out.accuracy},
                    {"epochs_run", out.epoch_loss.size()},
                    {"epoch_accuracy", out.epoch_accuracy},
                    {"final_loss",
                     out.epoch_loss.empty() ? 0.0 : out.epoch_loss.back()}}
                   .dump(2)
            << "\n";
}

// --------------------------------------------------------- probe-stack -----

struct ProbeStackOpts {
  int n = 2;
  std::string model = "lstm";
  int hidden = 32, layers = 1;
  double lr = 1e-3;
  int epochs = 30, batch = 32;
  double lambda = 1.0 / 20.0;
  uint64_t seed = 0;
  int train_size = 2'000, bin_size = 500;
  std::string out_dir;
  bool verbose = false;
};

void run_probe_stack(const ProbeStackOpts& o) {
  Vocab vocab = Vocab::dyck(o.n);
  SamplerParams sp;
  sp.seed = derive_seed(o.seed, 0);
  auto train_words =
      sample_bin({o.train_size, 2, 50, std::pair{1, 10}}, sp, vocab);
  sp.seed = derive_seed(o.seed, 1);
  auto seen_words = sample_bin({o.bin_size, 2, 50, std::pair{1, 10}}, sp, vocab);
  sp.seed = derive_seed(o.seed, 2);
  auto long_words =
      sample_bin({o.bin_size, 52, 150, std::pair{1, 10}}, sp, vocab);

  auto train_set = make_dataset(train_words, vocab);
  NamedBins bins;
  bins.emplace_back("Bin-1B", make_dataset(seen_words, vocab));
  bins.emplace_back("Bin-long", make_dataset(long_words, vocab));

  ModelConfig mcfg;
  mcfg.kind = parse_model_kind(o.model);
  mcfg.hidden = o.hidden;
  mcfg.layers = o.layers;
  mcfg.vocab_size = 2 * o.n;
  mcfg.seed = o.seed;
  TrainConfig tcfg;
  tcfg.epochs = o.epochs;
  tcfg.batch_size = o.batch;
  tcfg.lr = o.lr;
  tcfg.seed = o.seed;
  tcfg.verbose = o.verbose;

  StackAuxModel out =
      train_with_stack_aux(mcfg, train_set, bins, tcfg, o.lambda);

  json report{{"command", "probe-stack"}, {"lambda", o.lambda}};
  json per_bin;
  std::vector<std::pair<std::string, const std::vector<TokenSeq>*>> eval_sets{
      {"Bin-1B", &seen_words}, {"Bin-long", &long_words}};
  for (const auto& [name, words] : eval_sets) {
    StackEvalReport r =
        eval_stack_extraction(out.model, out.heads, *words, vocab);
    per_bin[name] = json{{"accuracy", r.accuracy},
                         {"recall", r.recall},
                         {"recall_support", r.recall_support}};
  }
  report["positions"] = per_bin;
  if (!out.history.history.empty()) {
    json bins_json;
    const auto& last = out.history.history.back();
    for (size_t i = 0; i < bins.size(); ++i)
      bins_json[bins[i].first] = last.bin_accuracy[i];
    report["ncp_bins"] = bins_json;
    report["epochs_run"] = out.history.history.size();
  }

  fs::path dir =
      o.out_dir.empty() ? out_root() / "probe-stack" : fs::path(o.out_dir);
  fs::create_directories(dir);
  save_checkpoint((dir / "checkpoint.bin").string(), out.model);
  {
    std::ofstream hf(dir / "heads.bin", std::ios::binary);
    write_named_tensors(hf, out.heads);
  }
  write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
  emit_manifest(dir, json{{"command", "probe-stack"},
                          {"n", o.n},
                          {"model", model_json(mcfg)},
                          {"lambda", o.lambda},
                          {"epochs", o.epochs},
                          {"train_size", o.train_size},
                          {"bin_size", o.bin_size},
                          {"seed", o.seed}});
  std::cout << report.dump(2) << "\n";
}

// --------------------------------------------------------- dump-states -----

struct DumpOpts {
  std::string checkpoint;
  std::string which = "cell";
  std::string words_file;
  int n = 2;
  int size = 200, len_lo = 2, len_hi = 50, depth_lo = 1, depth_hi = 10;
  uint64_t seed = 0;
  std::string out;
};

void run_dump_states(const DumpOpts& o) {
  SequenceModel model = load_checkpoint(o.checkpoint);
  int n = o.n;
  std::vector<TokenSeq> words;
  if (!o.words_file.empty()) {
    DatasetFile ds = read_dataset(o.words_file);
    n = ds.n;
    words = std::move(ds.words);
  } else {
    SamplerParams sp;
    sp.seed = o.seed;
    words = sample_bin({o.size, o.len_lo, o.len_hi,
                        std::pair{o.depth_lo, o.depth_hi}},
                       sp, Vocab::dyck(n));
  }
  if (o.which != "cell" && o.which != "hidden")
    throw ConfigError("--which must be cell or hidden");
  std::ofstream file;
  std::ostream& out = open_or_stdout(o.out, file);
  dump_states(model, words, Vocab::dyck(n), o.which == "cell", out);
}

// -------------------------------------------------------- generate-all -----

struct GenerateAllOpts {
  int n = 2;
  int max_len = 0;
  std::string checkpoint;
  bool oracle = false;
  double threshold = 0.5;
  std::string out;
  bool quiet = false;
};

void run_generate_all(const GenerateAllOpts& o) {
  Vocab vocab = Vocab::dyck(o.n);
  std::vector<TokenSeq> words;
  if (o.oracle) {
    OracleScorer scorer(vocab);
    words = generate_all(scorer, vocab, o.max_len, o.threshold);
  } else {
    if (o.checkpoint.empty())
      throw ConfigError("need --checkpoint (or --oracle)");
    SequenceModel model = load_checkpoint(o.checkpoint);
    ModelScorer scorer(model);
    words = generate_all(scorer, vocab, o.max_len, o.threshold);
  }
  if (!o.quiet) {
    std::ofstream file;
    std::ostream& out = open_or_stdout(o.out, file);
    for (const auto& w : words) out << format_word(vocab, w) << "\n";
  }
  std::cout << "total " << words.size() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dyck-language learning lab: exact PDA-to-RNN compilation and "
               "sequence-model experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file");

  GenOpts gen;
  auto* sc_gen = app.add_subcommand("gen", "Sample dataset files");
  sc_gen->add_option("--n", gen.n, "Bracket pair count");
  sc_gen->add_option("--preset", gen.preset,
                     "unbounded | bounded-depth | bounded-length");
  sc_gen->add_option("--p", gen.p, "Grammar branch probability");
  sc_gen->add_option("--q", gen.q, "Concatenation probability");
  sc_gen->add_option("--seed", gen.seed, "Base RNG seed");
  sc_gen->add_option("--train-size", gen.train_size, "Preset training words");
  sc_gen->add_option("--bin-size", gen.bin_size, "Preset bin words");
  sc_gen->add_option("--size", gen.size, "Custom bin word count");
  sc_gen->add_option("--len-lo", gen.len_lo, "Custom min length");
  sc_gen->add_option("--len-hi", gen.len_hi, "Custom max length");
  sc_gen->add_option("--depth-lo", gen.depth_lo, "Custom min depth");
  sc_gen->add_option("--depth-hi", gen.depth_hi, "Custom max depth");
  sc_gen->add_option("--out-dir", gen.out_dir, "Output directory");
  sc_gen->callback([&] {
    require_seed_in_ci(sc_gen);
    run_gen(gen);
  });

  EnumOpts enu;
  auto* sc_enum = app.add_subcommand("enumerate", "List all words up to a length");
  sc_enum->add_option("--n", enu.n, "Bracket pair count");
  sc_enum->add_option("--max-len", enu.max_len, "Maximum word length")
      ->required();
  sc_enum->add_option("--out", enu.out, "Write the word list here");
  sc_enum->add_flag("--quiet", enu.quiet, "Print only the count");
  sc_enum->callback([&] { run_enumerate(enu); });

  CompileOpts comp;
  auto* sc_comp = app.add_subcommand(
      "compile-dpda", "Compile a DPDA into an exact-weight network");
  sc_comp->add_option("--dyck", comp.dyck_n, "Compile the Dyck-n recognizer");
  sc_comp->add_option("--dpda-file", comp.dpda_file,
                      "Compile a DPDA from a spec file");
  sc_comp->add_option("--activation", comp.activation,
                      "satsigma | relupairs");
  sc_comp->add_option("--out", comp.out, "Weight file path")->required();
  sc_comp->callback([&] { run_compile(comp); });

  VerifyOpts ver;
  auto* sc_ver = app.add_subcommand(
      "verify", "Check a compiled network against the automaton oracle");
  sc_ver->add_option("--weights", ver.weights, "Weight file (.rnn)");
  sc_ver->add_option("--dyck", ver.dyck_n, "Compile this Dyck-n fresh");
  sc_ver->add_option("--against", ver.against, "Oracle language, e.g. dyck2")
      ->required();
  sc_ver->add_option("--trials", ver.trials, "Random positives (and negatives)");
  sc_ver->add_option("--exhaustive-len", ver.exhaustive_len,
                     "Exhaustive check up to this length");
  sc_ver->add_option("--max-len", ver.max_len, "Sampled word max length");
  sc_ver->add_option("--max-depth", ver.max_depth, "Sampled word max depth");
  sc_ver->add_option("--seed", ver.seed, "RNG seed");
  sc_ver->add_option("--activation", ver.activation, "satsigma | relupairs");
  sc_ver->callback([&] {
    require_seed_in_ci(sc_ver);
    run_verify(ver);
  });

  SweepBitsOpts psw;
  auto* sc_psw = app.add_subcommand(
      "precision-sweep", "Fixed-point agreement rate vs bits vs depth");
  sc_psw->add_option("--weights", psw.weights, "Weight file (.rnn)");
  sc_psw->add_option("--dyck", psw.dyck_n, "Compile this Dyck-n fresh");
  sc_psw->add_option("--bits", psw.bits, "Bit range, e.g. 2..64");
  sc_psw->add_option("--per-depth", psw.per_depth, "Words per depth bucket");
  sc_psw->add_option("--depth-max", psw.depth_max, "Deepest bucket");
  sc_psw->add_option("--len-hi", psw.len_hi, "Max word length");
  sc_psw->add_option("--seed", psw.seed, "RNG seed");
  sc_psw->add_option("--out", psw.out, "CSV path (default stdout)");
  sc_psw->add_option("--activation", psw.activation, "satsigma | relupairs");
  sc_psw->callback([&] {
    require_seed_in_ci(sc_psw);
    run_precision_sweep(psw);
  });

  TrainOpts tr;
  auto* sc_tr = app.add_subcommand("train", "Train a sequence model");
  sc_tr->add_option("--experiment", tr.experiment,
                    "unbounded | bounded_depth | bounded_length");
  sc_tr->add_option("--n", tr.n, "Bracket pair count");
  sc_tr->add_option("--model", tr.model,
                    "rnn_tanh | rnn_relu | lstm | transformer");
  sc_tr->add_option("--hidden", tr.hidden, "Hidden width");
  sc_tr->add_option("--layers", tr.layers, "Stacked layers");
  sc_tr->add_option("--heads", tr.heads, "Attention heads");
  sc_tr->add_flag("--no-positional", tr.no_positional,
                  "Drop learned positional embeddings");
  sc_tr->add_option("--lr", tr.lr, "Learning rate");
  sc_tr->add_option("--epochs", tr.epochs, "Max epochs");
  sc_tr->add_option("--batch", tr.batch, "Batch size");
  sc_tr->add_option("--early-stop", tr.early_stop,
                    "Stop when every bin reaches this accuracy");
  sc_tr->add_option("--seed", tr.seed, "RNG seed");
  sc_tr->add_option("--train-size", tr.train_size, "Training words");
  sc_tr->add_option("--bin-size", tr.bin_size, "Evaluation words per bin");
  sc_tr->add_option("--out-dir", tr.out_dir, "Run directory");
  sc_tr->add_flag("--verbose", tr.verbose, "Per-epoch logging");
  sc_tr->callback([&] {
    require_seed_in_ci(sc_tr);
    run_train(tr);
  });

  EvalOpts ev;
  auto* sc_ev = app.add_subcommand("eval", "Evaluate a checkpoint on fresh bins");
  sc_ev->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")
      ->required();
  sc_ev->add_option("--experiment", ev.experiment, "Bin preset");
  sc_ev->add_option("--n", ev.n, "Bracket pair count");
  sc_ev->add_option("--seed", ev.seed, "RNG seed");
  sc_ev->add_option("--bin-size", ev.bin_size, "Words per bin");
  sc_ev->add_option("--threshold", ev.threshold, "Prediction threshold");
  sc_ev->callback([&] {
    require_seed_in_ci(sc_ev);
    run_eval(ev);
  });

  SweepOpts sw;
  auto* sc_sw = app.add_subcommand("sweep", "Hyperparameter grid sweep");
  sc_sw->add_option("--experiment", sw.experiment, "Experiment preset");
  sc_sw->add_option("--n", sw.n, "Bracket pair count");
  sc_sw->add_option("--model", sw.model, "Model family");
  sc_sw->add_option("--seed", sw.seed, "RNG seed");
  sc_sw->add_option("--epochs", sw.epochs, "Epochs per run");
  sc_sw->add_option("--batch", sw.batch, "Batch size");
  sc_sw->add_option("--train-size", sw.train_size, "Training words");
  sc_sw->add_option("--bin-size", sw.bin_size, "Evaluation words per bin");
  sc_sw->add_option("--out-dir", sw.out_dir, "Run directory");
  sc_sw->add_flag("--verbose", sw.verbose, "Per-epoch logging");
  sc_sw->callback([&] {
    require_seed_in_ci(sc_sw);
    run_sweep(sw);
  });

  RobustOpts rob;
  auto* sc_rob = app.add_subcommand(
      "robustness", "Accuracy across held-out sampling distributions");
  sc_rob->add_option("--checkpoint", rob.checkpoint, "Checkpoint path")
      ->required();
  sc_rob->add_option("--n", rob.n, "Bracket pair count");
  sc_rob->add_option("--seed", rob.seed, "RNG seed");
  sc_rob->add_option("--bin-size", rob.bin_size, "Words per distribution");
  sc_rob->callback([&] {
    require_seed_in_ci(sc_rob);
    run_robustness(rob);
  });

  ProbeDepthOpts pd;
  auto* sc_pd = app.add_subcommand("probe-depth",
                                   "Train a depth probe on frozen states");
  sc_pd->add_option("--checkpoint", pd.checkpoint, "Checkpoint path");
  sc_pd->add_flag("--oracle", pd.oracle, "One-hot depth features (sanity)");
  sc_pd->add_option("--n", pd.n, "Bracket pair count");
  sc_pd->add_option("--classes", pd.classes, "Depth classes (0..k-1)");
  sc_pd->add_option("--epochs", pd.epochs, "Probe epochs");
  sc_pd->add_option("--batch", pd.batch, "Probe batch size");
  sc_pd->add_option("--lr", pd.lr, "Probe learning rate");
  sc_pd->add_option("--seed", pd.seed, "RNG seed");
  sc_pd->add_option("--train-size", pd.train_size, "Probe training words");
  sc_pd->add_option("--eval-size", pd.eval_size, "Probe evaluation words");
  sc_pd->add_option("--len-lo", pd.len_lo, "Min word length");
  sc_pd->add_option("--len-hi", pd.len_hi, "Max word length");
  sc_pd->add_option("--depth-lo", pd.depth_lo, "Min word depth");
  sc_pd->add_option("--depth-hi", pd.depth_hi, "Max word depth");
  sc_pd->add_option("--which", pd.which, "cell | hidden");
  sc_pd->add_flag("--verbose", pd.verbose, "Per-epoch logging");
  sc_pd->callback([&] {
    require_seed_in_ci(sc_pd);
    run_probe_depth(pd);
  });

  ProbeStackOpts ps;
  auto* sc_ps = app.add_subcommand(
      "probe-stack", "Joint training with stack-content auxiliary heads");
  sc_ps->add_option("--n", ps.n, "Bracket pair count (must be 2)");
  sc_ps->add_option("--model", ps.model, "Recurrent model kind");
  sc_ps->add_option("--hidden", ps.hidden, "Hidden width");
  sc_ps->add_option("--layers", ps.layers, "Stacked layers");
  sc_ps->add_option("--lr", ps.lr, "Learning rate");
  sc_ps->add_option("--epochs", ps.epochs, "Max epochs");
  sc_ps->add_option("--batch", ps.batch, "Batch size");
  sc_ps->add_option("--lambda", ps.lambda, "Auxiliary loss weight");
  sc_ps->add_option("--seed", ps.seed, "RNG seed");
  sc_ps->add_option("--train-size", ps.train_size, "Training words");
  sc_ps->add_option("--bin-size", ps.bin_size, "Evaluation words per bin");
  sc_ps->add_option("--out-dir", ps.out_dir, "Run directory");
  sc_ps->add_flag("--verbose", ps.verbose, "Per-epoch logging");
  sc_ps->callback([&] {
    require_seed_in_ci(sc_ps);
    run_probe_stack(ps);
  });

  DumpOpts dmp;
  auto* sc_dmp = app.add_subcommand("dump-states",
                                    "Export per-step states as labeled CSV");
  sc_dmp->add_option("--checkpoint", dmp.checkpoint, "Checkpoint path")
      ->required();
  sc_dmp->add_option("--which", dmp.which, "cell | hidden")->required();
  sc_dmp->add_option("--words", dmp.words_file, "Dataset file to trace");
  sc_dmp->add_option("--n", dmp.n, "Bracket pair count (when sampling)");
  sc_dmp->add_option("--size", dmp.size, "Sampled word count");
  sc_dmp->add_option("--len-lo", dmp.len_lo, "Min word length");
  sc_dmp->add_option("--len-hi", dmp.len_hi, "Max word length");
  sc_dmp->add_option("--depth-lo", dmp.depth_lo, "Min word depth");
  sc_dmp->add_option("--depth-hi", dmp.depth_hi, "Max word depth");
  sc_dmp->add_option("--seed", dmp.seed, "RNG seed");
  sc_dmp->add_option("--out", dmp.out, "CSV path (default stdout)");
  sc_dmp->callback([&] {
    require_seed_in_ci(sc_dmp);
    run_dump_states(dmp);
  });

  GenerateAllOpts ga;
  auto* sc_ga = app.add_subcommand(
      "generate-all", "Expand every word a scorer accepts up to a length");
  sc_ga->add_option("--n", ga.n, "Bracket pair count");
  sc_ga->add_option("--max-len", ga.max_len, "Maximum word length")
      ->required();
  sc_ga->add_option("--checkpoint", ga.checkpoint, "Score with this model");
  sc_ga->add_flag("--oracle", ga.oracle, "Score with the grammar oracle");
  sc_ga->add_option("--threshold", ga.threshold, "Expansion threshold");
  sc_ga->add_option("--out", ga.out, "Write the word list here");
  sc_ga->add_flag("--quiet", ga.quiet, "Print only the count");
  sc_ga->callback([&] { run_generate_all(ga); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return g_exit;
}
