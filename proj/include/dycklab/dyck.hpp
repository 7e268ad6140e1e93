#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dycklab/errors.hpp"

namespace dycklab {

using TokenSeq = std::vector<int>;

// Bracket vocabulary for Dyck-n: opening type t at index t, its closing
// partner at index n + t.
struct Vocab {
  int n = 0;
  std::vector<std::string> symbols;

  static Vocab dyck(int n);

  int size() const { return 2 * n; }
  bool is_opening(int sym) const { return sym >= 0 && sym < n; }
  bool is_closing(int sym) const { return sym >= n && sym < 2 * n; }
  int type_of(int sym) const { return sym < n ? sym : sym - n; }
  int open_index(int type) const { return type; }
  int close_index(int type) const { return n + type; }
  int matching_close(int open_sym) const { return open_sym + n; }
  const std::string& name(int sym) const;
  int index_of(const std::string& symbol) const;
  void check_token(int sym) const;
};

struct SamplerParams {
  double p = 0.5;
  double q = 0.25;
  uint64_t seed = 0;
  int max_expansion = 10'000;
};

struct BinSpec {
  int size = 0;
  int len_lo = 2, len_hi = 50;
  // Unset means depth-unrestricted.
  std::optional<std::pair<int, int>> depth;
};

bool is_valid(const TokenSeq& seq, const Vocab& vocab);

// Max over prefixes of (opens - closes); throws if any prefix dips negative.
int max_depth(const TokenSeq& seq, const Vocab& vocab);

// Depth after each consumed token: depths[t] for prefix of length t+1.
std::vector<int> prefix_depths(const TokenSeq& seq, const Vocab& vocab);

TokenSeq sample_word(const SamplerParams& params, const Vocab& vocab);
TokenSeq sample_word(const SamplerParams& params, const Vocab& vocab,
                     std::mt19937_64& rng);

std::vector<TokenSeq> sample_bin(const BinSpec& spec,
                                 const SamplerParams& params,
                                 const Vocab& vocab,
                                 uint64_t attempt_budget = 10'000'000);

// All valid words of length <= max_len, shortest first, lexicographic by
// symbol index within a length; includes the empty word.
std::vector<TokenSeq> enumerate_words(const Vocab& vocab, int max_len,
                                      uint64_t output_cap = 5'000'000);

// k-hot over the vocabulary: which symbols may legally follow the prefix.
std::vector<uint8_t> next_valid_set(const TokenSeq& prefix,
                                    const Vocab& vocab);

// Same-length invalid mutation of a valid word; deterministic per seed.
TokenSeq corrupt_word(const TokenSeq& word, const Vocab& vocab, uint64_t seed);

// Seed for the idx-th derived stream of a base seed (splitmix-style stride).
uint64_t derive_seed(uint64_t base, uint64_t idx);

// Text helpers. parse_word accepts space-separated symbol names, or one
// symbol per character when every symbol is a single character.
TokenSeq parse_word(const Vocab& vocab, const std::string& text);
std::string format_word(const Vocab& vocab, const TokenSeq& seq,
                        bool spaces = true);

}  // namespace dycklab
