#pragma once

#include <optional>
#include <vector>

#include "dycklab/rational.hpp"

namespace dycklab {

// A pushdown stack folded into one rational per stack symbol.  Component i
// holds a base-4 fraction whose digits (most recent level first) are 3 where
// symbol i sits at that level and 1 elsewhere.  The empty stack is the zero
// vector; pushing symbol t maps component i to w_i/4 + 1/4 (+ 1/2 iff i == t).
struct StackVec {
  std::vector<Rational> w;

  static StackVec empty(int gamma_size);
  int gamma_size() const { return static_cast<int>(w.size()); }
  bool operator==(const StackVec& o) const = default;
};

// Saturated linear sigmoid: clamp to [0, 1], identity in between.
Rational sat_sigma(const Rational& x);
double sat_sigma(double x);

bool is_one_hot(const std::vector<Rational>& v);

StackVec push(const StackVec& w, const std::vector<Rational>& tau);
StackVec push(const StackVec& w, int symbol);

// tau_top must be the current top one-hot; popping the empty stack throws.
StackVec pop(const StackVec& w, const std::vector<Rational>& tau_top);
StackVec pop(const StackVec& w, int symbol);

// One-hot of the top symbol; the zero vector for the empty stack.
std::vector<Rational> top(const StackVec& w);
std::optional<int> top_index(const StackVec& w);

bool is_empty(const StackVec& w);

// Read the whole stack back out, bottom first.
std::vector<int> decode_stack(StackVec w);

// Number of levels currently encoded (stack height).
int stack_height(StackVec w);

std::vector<FixedPoint> quantize(const StackVec& w, int bits);

// Minimum fixed-point width that represents every stack of height <= h
// exactly: two bits per level.
int required_bits(int height);

}  // namespace dycklab
