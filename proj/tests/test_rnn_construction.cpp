#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <vector>

#include "dycklab/dyck.hpp"
#include "dycklab/pda.hpp"
#include "dycklab/rnn_construction.hpp"

using namespace dycklab;

namespace {

Rational r(long n, long d = 1) { return Rational(n, d); }

// Fully nested word of the given depth, cycling bracket types.
TokenSeq nested(const Vocab& v, int depth) {
  TokenSeq w;
  for (int i = 0; i < depth; ++i) w.push_back(v.open_index(i % v.n));
  for (int i = depth - 1; i >= 0; --i) w.push_back(v.close_index(i % v.n));
  return w;
}

}  // namespace

TEST_CASE("compiled dimensions and initial state") {
  ConstructedRnn rnn = compile(build_dyck_dpda(2));
  CHECK(rnn.nq == 2);
  CHECK(rnn.ns == 4);
  CHECK(rnn.ng == 3);
  CHECK(rnn.hidden_dim() == 5);
  REQUIRE(rnn.layers.size() == 5);
  // h0 = [live one-hot | encoding of the stack [Z0]].
  REQUIRE(rnn.h0.size() == 5);
  CHECK(rnn.h0[0] == r(1));
  CHECK(rnn.h0[1] == r(0));
  CHECK(rnn.h0[2] == r(3, 4));
  CHECK(rnn.h0[3] == r(1, 4));
  CHECK(rnn.h0[4] == r(1, 4));
  CHECK(rnn_state(rnn, rnn.h0) == 0);
  CHECK(rnn_stack(rnn, rnn.h0) == std::vector<int>{0});
}

TEST_CASE("pair map marries two one-hots") {
  AffineLayer l = pair_map(3, 2);
  CHECK(l.in_dim() == 5);
  CHECK(l.out_dim() == 6);
  std::vector<Rational> x{r(0), r(0), r(1), r(0), r(1)};  // phi = 2, psi = 1
  std::vector<Rational> z = l.affine(x);
  for (auto& c : z) c = sat_sigma(c);
  CHECK(z == std::vector<Rational>{r(0), r(0), r(0), r(0), r(0), r(1)});
  CHECK_THROWS_AS(pair_map(0, 2), ConfigError);
  CHECK_THROWS_AS(l.affine({r(1)}), InputError);
}

TEST_CASE("step-by-step agreement with the automaton") {
  Vocab v = Vocab::dyck(2);
  Dpda d = build_dyck_dpda(2);
  ConstructedRnn rnn = compile(d);
  TokenSeq w = parse_word(v, "([])");
  PdaRun pr = run(d, w);
  RnnRun rr = rnn_run(rnn, w);
  REQUIRE(rr.trace.size() == pr.trace.size());
  for (size_t i = 0; i < rr.trace.size(); ++i) {
    CHECK(rnn_state(rnn, rr.trace[i]) == pr.trace[i].state);
    CHECK(rnn_stack(rnn, rr.trace[i]) == pr.trace[i].stack);
  }
  CHECK(rr.accepted == pr.accepted);
}

TEST_CASE("acceptance parity with the validity oracle") {
  for (int n : {1, 2}) {
    Vocab v = Vocab::dyck(n);
    ConstructedRnn rnn = compile(build_dyck_dpda(n));
    int max_len = n == 1 ? 8 : 6;
    for (const auto& w : enumerate_words(v, max_len))
      CHECK(rnn_run(rnn, w).accepted == is_valid(w, v));
    std::mt19937_64 rng(11);
    SamplerParams params{0.5, 0.25, 0, 10'000};
    for (int i = 0; i < 40; ++i) {
      TokenSeq w = sample_word(params, v, rng);
      if (w.empty()) continue;
      TokenSeq bad = corrupt_word(w, v, derive_seed(11, i));
      CHECK_FALSE(rnn_run(rnn, bad).accepted);
    }
  }
}

TEST_CASE("relu-pairs expansion computes the same function") {
  Vocab v = Vocab::dyck(2);
  ConstructedRnn sig = compile(build_dyck_dpda(2), Activation::kSatSigma);
  ConstructedRnn rel = compile(build_dyck_dpda(2), Activation::kReluPairs);
  CHECK(rel.activation == Activation::kReluPairs);
  for (const auto& w : enumerate_words(v, 6)) {
    RnnRun a = rnn_run(sig, w);
    RnnRun b = rnn_run(rel, w);
    CHECK(a.accepted == b.accepted);
    REQUIRE(a.trace.size() == b.trace.size());
    CHECK(a.trace.back() == b.trace.back());
  }
  TokenSeq deep = nested(v, 7);
  CHECK(rnn_run(sig, deep).trace.back() == rnn_run(rel, deep).trace.back());
}

TEST_CASE("fixed-point runs are exact when the budget covers the depth") {
  Vocab v = Vocab::dyck(2);
  ConstructedRnn rnn = compile(build_dyck_dpda(2));
  for (int depth = 1; depth <= 10; ++depth) {
    TokenSeq w = nested(v, depth);
    // Height includes the bottom marker, so depth d needs 2 (d + 1) bits.
    FixedRun fr = rnn_run_fixed(rnn, w, 2 * (depth + 1));
    CHECK(fr.accepted);
    CHECK_FALSE(fr.first_divergence.has_value());
  }
}

TEST_CASE("fixed-point runs diverge below the required precision") {
  Vocab v = Vocab::dyck(2);
  ConstructedRnn rnn = compile(build_dyck_dpda(2));
  TokenSeq w = parse_word(v, "(())");
  // Depth 2 means height 3, which needs 6 bits; 4 is not enough.  The
  // second push is the first operation whose encoding cannot be stored.
  FixedRun fr = rnn_run_fixed(rnn, w, 4);
  CHECK_FALSE(fr.accepted);
  REQUIRE(fr.first_divergence.has_value());
  CHECK(*fr.first_divergence == 2);
  CHECK(rnn_run_fixed(rnn, w, 6).accepted);

  TokenSeq deep = nested(v, 10);
  FixedRun shallow = rnn_run_fixed(rnn, deep, 20);
  CHECK_FALSE(shallow.accepted);
  CHECK(shallow.first_divergence.has_value());
}

TEST_CASE("fixed-point evaluation requires the saturating activation") {
  ConstructedRnn rel = compile(build_dyck_dpda(1), Activation::kReluPairs);
  CHECK_THROWS_AS(rnn_run_fixed(rel, {}, 8), ConfigError);
}

TEST_CASE("partial automata are totalized with a fresh dead state") {
  // a^k b^k built by hand, with delta(b, s, Z) left undefined.
  Dpda d;
  d.alphabet = {"a", "b"};
  d.states = {"s"};
  d.stack_symbols = {"Z", "A"};
  d.delta[{0, 0, 0}] = {0, StackOp::push(1)};
  d.delta[{0, 0, 1}] = {0, StackOp::push(1)};
  d.delta[{1, 0, 1}] = {0, StackOp::pop()};
  d.finals = {0};
  ConstructedRnn rnn = compile(d);
  CHECK(rnn.nq == 2);
  CHECK(rnn.dpda.states == std::vector<std::string>{"s", "_dead"});
  CHECK(rnn.dpda.is_total());
  CHECK(rnn_run(rnn, {0, 1}).accepted);          // ab
  CHECK(rnn_run(rnn, {0, 0, 1, 1}).accepted);    // aabb
  CHECK_FALSE(rnn_run(rnn, {0, 1, 1}).accepted); // abb underflows into _dead
  CHECK_FALSE(rnn_run(rnn, {1}).accepted);       // b undefined from the start
  CHECK_FALSE(rnn_run(rnn, {0}).accepted);       // open stack entry
}

TEST_CASE("rnn step input validation") {
  ConstructedRnn rnn = compile(build_dyck_dpda(1));
  CHECK_THROWS_AS(rnn_step(rnn, {r(1)}, 0), InputError);
  CHECK_THROWS_AS(rnn_step(rnn, rnn.h0, 9), InputError);
}

TEST_CASE("weight archive round trip") {
  ConstructedRnn rnn = compile(build_dyck_dpda(2));
  std::ostringstream out;
  write_rnn(rnn, out);
  std::istringstream in(out.str());
  ConstructedRnn back = read_rnn(in);
  CHECK(back.nq == rnn.nq);
  CHECK(back.ns == rnn.ns);
  CHECK(back.ng == rnn.ng);
  CHECK(back.activation == rnn.activation);
  CHECK(back.h0 == rnn.h0);
  REQUIRE(back.layers.size() == rnn.layers.size());
  for (size_t i = 0; i < rnn.layers.size(); ++i) {
    CHECK(back.layers[i].W.rows == rnn.layers[i].W.rows);
    CHECK(back.layers[i].W.cols == rnn.layers[i].W.cols);
    CHECK(back.layers[i].W.a == rnn.layers[i].W.a);
    CHECK(back.layers[i].b == rnn.layers[i].b);
  }
  Vocab v = Vocab::dyck(2);
  for (const auto& w : enumerate_words(v, 6))
    CHECK(rnn_run(back, w).accepted == rnn_run(rnn, w).accepted);

  std::istringstream junk("not an rnn archive");
  CHECK_THROWS_AS(read_rnn(junk), IoError);
}
