#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dycklab/dyck.hpp"
#include "dycklab/errors.hpp"

namespace dycklab {

struct StackOp {
  enum Kind { kPush, kPop, kNoOp };
  Kind kind = kNoOp;
  int symbol = -1;  // stack symbol for kPush, ignored otherwise

  static StackOp push(int symbol) { return {kPush, symbol}; }
  static StackOp pop() { return {kPop, -1}; }
  static StackOp noop() { return {kNoOp, -1}; }
  bool operator==(const StackOp& o) const = default;
};

// Deterministic pushdown automaton over index-coded symbol sets.  delta maps
// (input, state, stack top) to (next state, stack op) and may be partial.
struct Dpda {
  std::vector<std::string> alphabet;
  std::vector<std::string> states;
  std::vector<std::string> stack_symbols;
  int initial_state = 0;
  int initial_stack_symbol = 0;
  std::optional<int> epsilon_symbol;  // designated silent-input symbol, if any
  std::map<std::tuple<int, int, int>, std::pair<int, StackOp>> delta;
  std::vector<int> finals;

  int num_inputs() const { return static_cast<int>(alphabet.size()); }
  int num_states() const { return static_cast<int>(states.size()); }
  int num_stack_symbols() const {
    return static_cast<int>(stack_symbols.size());
  }
  bool is_final(int state) const;
  bool is_total() const;
  void validate() const;
};

struct PdaConfig {
  int state = 0;
  std::vector<int> stack;  // bottom first; stack[0] == Z0 at the start
  bool operator==(const PdaConfig& o) const = default;
};

// The canonical Dyck-n recognizer: states {live, dead}, stack {Z0, A_1..A_n},
// alphabet in Vocab::dyck(n) order; accepts exactly the valid words.
Dpda build_dyck_dpda(int n);

PdaConfig initial_config(const Dpda& dpda);

PdaConfig step(const Dpda& dpda, const PdaConfig& cfg, int input);

struct PdaRun {
  bool accepted = false;
  std::vector<PdaConfig> trace;  // |seq| + 1 configurations
};

// Accepts iff the final state is in F and the stack is exactly [Z0].
PdaRun run(const Dpda& dpda, const TokenSeq& seq);

int max_stack_height(const PdaRun& r);

// DPDA spec-file serialization (sections [alphabet] [states] [stack]
// [transitions] [finals]; one transition per line: `x q top -> q' op(arg)`).
Dpda parse_dpda(const std::string& text);
std::string format_dpda(const Dpda& dpda);

}  // namespace dycklab
