#include "dycklab/stack_encoding.hpp"

#include <algorithm>

namespace dycklab {

StackVec StackVec::empty(int gamma_size) {
  if (gamma_size <= 0)
    throw InputError("stack encoding needs at least one stack symbol");
  StackVec s;
  s.w.assign(gamma_size, Rational(0));
  return s;
}

Rational sat_sigma(const Rational& x) {
  if (x < 0) return Rational(0);
  if (x > 1) return Rational(1);
  return x;
}

double sat_sigma(double x) { return std::clamp(x, 0.0, 1.0); }

bool is_one_hot(const std::vector<Rational>& v) {
  int ones = 0;
  for (const auto& x : v) {
    if (x == 1)
      ++ones;
    else if (x != 0)
      return false;
  }
  return ones == 1;
}

static void check_tau(const StackVec& w, const std::vector<Rational>& tau) {
  if (static_cast<int>(tau.size()) != w.gamma_size())
    throw InputError("stack/one-hot size mismatch");
  if (!is_one_hot(tau)) throw InputError("tau is not a one-hot vector");
}

StackVec push(const StackVec& w, const std::vector<Rational>& tau) {
  check_tau(w, tau);
  StackVec out = w;
  for (int i = 0; i < w.gamma_size(); ++i)
    out.w[i] = w.w[i] / 4 + tau[i] / 2 + Rational(1, 4);
  return out;
}

StackVec push(const StackVec& w, int symbol) {
  std::vector<Rational> tau(w.gamma_size(), Rational(0));
  if (symbol < 0 || symbol >= w.gamma_size())
    throw InputError("push: stack symbol out of range");
  tau[symbol] = 1;
  return push(w, tau);
}

std::vector<Rational> top(const StackVec& w) {
  std::vector<Rational> t(w.gamma_size());
  for (int i = 0; i < w.gamma_size(); ++i) t[i] = sat_sigma(4 * w.w[i] - 2);
  return t;
}

std::optional<int> top_index(const StackVec& w) {
  auto t = top(w);
  for (int i = 0; i < static_cast<int>(t.size()); ++i)
    if (t[i] == 1) return i;
  return std::nullopt;
}

bool is_empty(const StackVec& w) {
  return std::all_of(w.w.begin(), w.w.end(),
                     [](const Rational& x) { return x == 0; });
}

StackVec pop(const StackVec& w, const std::vector<Rational>& tau_top) {
  if (is_empty(w)) throw StackUnderflowError("pop on the empty stack");
  check_tau(w, tau_top);
  if (tau_top != top(w))
    throw InputError("pop: tau does not match the stack top");
  StackVec out = w;
  for (int i = 0; i < w.gamma_size(); ++i)
    out.w[i] = 4 * w.w[i] - 2 * tau_top[i] - 1;
  return out;
}

StackVec pop(const StackVec& w, int symbol) {
  std::vector<Rational> tau(w.gamma_size(), Rational(0));
  if (symbol < 0 || symbol >= w.gamma_size())
    throw InputError("pop: stack symbol out of range");
  tau[symbol] = 1;
  return pop(w, tau);
}

std::vector<int> decode_stack(StackVec w) {
  std::vector<int> out;
  while (!is_empty(w)) {
    auto t = top_index(w);
    if (!t) throw InputError("decode_stack: vector is not a stack encoding");
    out.push_back(*t);
    w = pop(w, *t);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

int stack_height(StackVec w) {
  int h = 0;
  while (!is_empty(w)) {
    auto t = top_index(w);
    if (!t) throw InputError("stack_height: vector is not a stack encoding");
    w = pop(w, *t);
    ++h;
  }
  return h;
}

std::vector<FixedPoint> quantize(const StackVec& w, int bits) {
  check_fixed_bits(bits);
  std::vector<FixedPoint> out;
  out.reserve(w.w.size());
  for (const auto& x : w.w) out.push_back(fixed_from_rational(x, bits));
  return out;
}

int required_bits(int depth) {
  if (depth < 0) throw InputError("required_bits: negative depth");
  return 2 * depth;
}

}  // namespace dycklab
