#include "dycklab/dyck.hpp"

#include <algorithm>
#include <sstream>

namespace dycklab {

Vocab Vocab::dyck(int n) {
  if (n < 1) throw ConfigError("vocab: n must be >= 1");
  static const char* kOpen = "([{<";
  static const char* kClose = ")]}>";
  Vocab v;
  v.n = n;
  v.symbols.resize(2 * n);
  for (int t = 0; t < n; ++t) {
    if (t < 4) {
      v.symbols[t] = std::string(1, kOpen[t]);
      v.symbols[n + t] = std::string(1, kClose[t]);
    } else {
      v.symbols[t] = "(" + std::to_string(t + 1);
      v.symbols[n + t] = ")" + std::to_string(t + 1);
    }
  }
  return v;
}

const std::string& Vocab::name(int sym) const {
  check_token(sym);
  return symbols[sym];
}

int Vocab::index_of(const std::string& symbol) const {
  for (int i = 0; i < size(); ++i)
    if (symbols[i] == symbol) return i;
  throw InputError("unknown symbol '" + symbol + "'");
}

void Vocab::check_token(int sym) const {
  if (sym < 0 || sym >= size())
    throw InputError("symbol index " + std::to_string(sym) +
                     " out of range for " + std::to_string(size()) +
                     "-symbol vocabulary");
}

bool is_valid(const TokenSeq& seq, const Vocab& vocab) {
  std::vector<int> stack;
  for (int sym : seq) {
    vocab.check_token(sym);
    if (vocab.is_opening(sym)) {
      stack.push_back(vocab.type_of(sym));
    } else {
      if (stack.empty() || stack.back() != vocab.type_of(sym)) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

std::vector<int> prefix_depths(const TokenSeq& seq, const Vocab& vocab) {
  std::vector<int> depths;
  depths.reserve(seq.size());
  int d = 0;
  for (int sym : seq) {
    vocab.check_token(sym);
    d += vocab.is_opening(sym) ? 1 : -1;
    if (d < 0)
      throw InputError("more closing than opening brackets in a prefix");
    depths.push_back(d);
  }
  return depths;
}

int max_depth(const TokenSeq& seq, const Vocab& vocab) {
  auto depths = prefix_depths(seq, vocab);
  return depths.empty() ? 0 : *std::max_element(depths.begin(), depths.end());
}

static void check_sampler(const SamplerParams& params) {
  if (params.p < 0 || params.q < 0 || params.p + params.q > 1.0)
    throw ConfigError("sampler needs p >= 0, q >= 0, p + q <= 1");
  if (params.max_expansion < 1)
    throw ConfigError("sampler needs max_expansion >= 1");
}

namespace {
// One stochastic leftmost derivation; nullopt if the expansion cap was hit.
std::optional<TokenSeq> derive_once(const SamplerParams& params,
                                    const Vocab& vocab,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pick_type(0, vocab.n - 1);
  constexpr int kNonterminal = -1;
  std::vector<int> work{kNonterminal};
  TokenSeq out;
  int expansions = 0;
  while (!work.empty()) {
    int item = work.back();
    work.pop_back();
    if (item != kNonterminal) {
      out.push_back(item);
      continue;
    }
    if (++expansions > params.max_expansion) return std::nullopt;
    double u = unif(rng);
    if (u < params.p) {
      int t = pick_type(rng);
      work.push_back(vocab.close_index(t));
      work.push_back(kNonterminal);
      work.push_back(vocab.open_index(t));
    } else if (u < params.p + params.q) {
      work.push_back(kNonterminal);
      work.push_back(kNonterminal);
    }  // else S -> epsilon: emit nothing
  }
  return out;
}
}  // namespace

TokenSeq sample_word(const SamplerParams& params, const Vocab& vocab,
                     std::mt19937_64& rng) {
  check_sampler(params);
  while (true) {
    if (auto w = derive_once(params, vocab, rng)) return *w;
  }
}

TokenSeq sample_word(const SamplerParams& params, const Vocab& vocab) {
  std::mt19937_64 rng(params.seed);
  return sample_word(params, vocab, rng);
}

static void check_bin(const BinSpec& spec) {
  if (spec.size < 0) throw ConfigError("bin size must be >= 0");
  if (spec.len_lo < 2 || spec.len_lo > spec.len_hi)
    throw ConfigError("bin length range needs 2 <= lo <= hi");
  if (spec.depth &&
      (spec.depth->first < 1 || spec.depth->first > spec.depth->second))
    throw ConfigError("bin depth range needs 1 <= lo <= hi");
}

std::vector<TokenSeq> sample_bin(const BinSpec& spec,
                                 const SamplerParams& params,
                                 const Vocab& vocab,
                                 uint64_t attempt_budget) {
  check_bin(spec);
  check_sampler(params);
  std::mt19937_64 rng(params.seed);
  std::vector<TokenSeq> out;
  out.reserve(spec.size);
  uint64_t attempts = 0, len_misses = 0, depth_misses = 0;
  while (static_cast<int>(out.size()) < spec.size) {
    if (attempts++ >= attempt_budget) {
      std::ostringstream msg;
      msg << "rejection budget of " << attempt_budget << " exhausted with "
          << out.size() << "/" << spec.size << " words; misses: length "
          << len_misses << ", depth " << depth_misses;
      throw SamplingError(msg.str());
    }
    TokenSeq w = sample_word(params, vocab, rng);
    int len = static_cast<int>(w.size());
    if (len < spec.len_lo || len > spec.len_hi) {
      ++len_misses;
      continue;
    }
    if (spec.depth) {
      int d = max_depth(w, vocab);
      if (d < spec.depth->first || d > spec.depth->second) {
        ++depth_misses;
        continue;
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<TokenSeq> enumerate_words(const Vocab& vocab, int max_len,
                                      uint64_t output_cap) {
  if (max_len < 0) throw InputError("enumerate_words: negative max_len");
  std::vector<TokenSeq> out;
  if (output_cap == 0)
    throw ResourceError("enumeration exceeds the output cap of 0 words");
  out.push_back({});  // epsilon
  TokenSeq cur;
  std::vector<int> open_types;
  // Depth-first in symbol-index order; openings (indices < n) always precede
  // the one legal closing (index n + top), so each length block comes out in
  // lexicographic order.
  auto emit = [&](auto&& self, int remaining) -> void {
    if (remaining == 0) {
      if (open_types.empty()) {
        if (out.size() >= output_cap)
          throw ResourceError("enumeration exceeds the output cap of " +
                              std::to_string(output_cap) + " words");
        out.push_back(cur);
      }
      return;
    }
    int depth = static_cast<int>(open_types.size());
    if (depth > remaining) return;  // cannot close everything in time
    if (depth + 1 <= remaining - 1) {
      for (int t = 0; t < vocab.n; ++t) {
        cur.push_back(vocab.open_index(t));
        open_types.push_back(t);
        self(self, remaining - 1);
        open_types.pop_back();
        cur.pop_back();
      }
    }
    if (depth >= 1) {
      int t = open_types.back();
      cur.push_back(vocab.close_index(t));
      open_types.pop_back();
      self(self, remaining - 1);
      open_types.push_back(t);
      cur.pop_back();
    }
  };
  for (int len = 2; len <= max_len; len += 2) emit(emit, len);
  return out;
}

std::vector<uint8_t> next_valid_set(const TokenSeq& prefix,
                                    const Vocab& vocab) {
  std::vector<int> stack;
  for (int sym : prefix) {
    vocab.check_token(sym);
    if (vocab.is_opening(sym)) {
      stack.push_back(vocab.type_of(sym));
    } else {
      if (stack.empty() || stack.back() != vocab.type_of(sym))
        throw InputError("prefix is not extendable to a valid word");
      stack.pop_back();
    }
  }
  std::vector<uint8_t> bits(vocab.size(), 0);
  for (int t = 0; t < vocab.n; ++t) bits[vocab.open_index(t)] = 1;
  if (!stack.empty()) bits[vocab.close_index(stack.back())] = 1;
  return bits;
}

TokenSeq corrupt_word(const TokenSeq& word, const Vocab& vocab,
                      uint64_t seed) {
  if (word.empty() || !is_valid(word, vocab))
    throw InputError("corrupt_word needs a valid nonempty word");
  std::mt19937_64 rng(seed);
  const int len = static_cast<int>(word.size());

  // Positions of adjacent differing tokens (always nonempty for valid words).
  std::vector<int> swappable;
  for (int i = 0; i + 1 < len; ++i)
    if (word[i] != word[i + 1]) swappable.push_back(i);
  std::vector<int> closers;
  for (int i = 0; i < len; ++i)
    if (vocab.is_closing(word[i])) closers.push_back(i);
  // Matched (open, close) index pairs.
  std::vector<std::pair<int, int>> pairs;
  {
    std::vector<int> stack;
    for (int i = 0; i < len; ++i) {
      if (vocab.is_opening(word[i]))
        stack.push_back(i);
      else {
        pairs.emplace_back(stack.back(), i);
        stack.pop_back();
      }
    }
  }

  std::uniform_int_distribution<int> pick_kind(0, 2);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    TokenSeq w = word;
    switch (pick_kind(rng)) {
      case 0: {
        int i = swappable[std::uniform_int_distribution<int>(
            0, static_cast<int>(swappable.size()) - 1)(rng)];
        std::swap(w[i], w[i + 1]);
        break;
      }
      case 1: {
        if (vocab.n < 2) continue;  // no second closing type to retype to
        int i = closers[std::uniform_int_distribution<int>(
            0, static_cast<int>(closers.size()) - 1)(rng)];
        int t = vocab.type_of(w[i]);
        int shift = std::uniform_int_distribution<int>(1, vocab.n - 1)(rng);
        w[i] = vocab.close_index((t + shift) % vocab.n);
        break;
      }
      default: {
        auto [a, b] = pairs[std::uniform_int_distribution<int>(
            0, static_cast<int>(pairs.size()) - 1)(rng)];
        std::swap(w[a], w[b]);
        break;
      }
    }
    if (!is_valid(w, vocab)) return w;
  }
  // Random mutations can keep missing on long single-type words, where only
  // a top-level pair swap invalidates.  The first token opens such a pair,
  // and turning it into a close always breaks the very first prefix.
  TokenSeq w = word;
  for (const auto& [a, b] : pairs)
    if (a == 0) {
      std::swap(w[a], w[b]);
      break;
    }
  return w;
}

uint64_t derive_seed(uint64_t base, uint64_t idx) {
  return base + 0x9E3779B97F4A7C15ull * (idx + 1);
}

TokenSeq parse_word(const Vocab& vocab, const std::string& text) {
  TokenSeq seq;
  if (text.find(' ') != std::string::npos) {
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) seq.push_back(vocab.index_of(tok));
    return seq;
  }
  bool single = std::all_of(vocab.symbols.begin(), vocab.symbols.end(),
                            [](const std::string& s) { return s.size() == 1; });
  if (!single)
    throw InputError("character-wise parse needs single-character symbols");
  for (char c : text) seq.push_back(vocab.index_of(std::string(1, c)));
  return seq;
}

std::string format_word(const Vocab& vocab, const TokenSeq& seq, bool spaces) {
  std::string out;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (spaces && i) out += ' ';
    out += vocab.name(seq[i]);
  }
  return out;
}

}  // namespace dycklab
