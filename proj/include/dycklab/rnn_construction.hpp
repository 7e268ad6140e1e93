#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "dycklab/pda.hpp"
#include "dycklab/rational.hpp"
#include "dycklab/stack_encoding.hpp"

namespace dycklab {

struct RatMatrix {
  int rows = 0, cols = 0;
  std::vector<Rational> a;  // row-major

  RatMatrix() = default;
  RatMatrix(int r, int c) : rows(r), cols(c), a(size_t(r) * c, Rational(0)) {}
  Rational& at(int r, int c) { return a[size_t(r) * cols + c]; }
  const Rational& at(int r, int c) const { return a[size_t(r) * cols + c]; }
};

// One layer y = act(x W + b), with an index of nonzero weights per output
// column so stepping skips the (many) zero entries.
struct AffineLayer {
  RatMatrix W;
  std::vector<Rational> b;
  std::vector<std::vector<std::pair<int, Rational>>> cols;

  int in_dim() const { return W.rows; }
  int out_dim() const { return W.cols; }
  void finalize();  // rebuild the sparse column index from W
  std::vector<Rational> affine(const std::vector<Rational>& x) const;
};

// Marries two one-hots [phi | psi] into the one-hot of the pair, indexed
// psi-major: position psi_index * size_phi + phi_index.  Ones into the
// pair column from each constituent, bias -1, saturation.
AffineLayer pair_map(int size_phi, int size_psi);

// Linear lookup: row r of the table is emitted verbatim when the input
// one-hot selects r.  Zero bias.
AffineLayer transition_map(const std::vector<std::vector<Rational>>& table,
                           int out_dim);

enum class Activation { kSatSigma, kReluPairs };

// A DPDA compiled to five affine layers per input symbol.  Hidden state
// h = [state one-hot (|Q|) | stack encoding (|Gamma|)]; layer pipeline:
//   L1 [h|x] -> [pair(q,x) | tau_top | omega]
//   L2       -> [triple(q,x,tau_top) | tau_top | omega]
//   L3       -> [q' | omega | omega_pop | omega_noop | tau_push | c_push | c_pop | c_noop]
//   L4       -> [q' | gated pop/noop/push candidates]
//   L5       -> [q' | candidate sum] = h'
// With kReluPairs every saturation sigma(z) is expanded to
// relu(z) - relu(z - 1): layer outputs are duplicated (second copy biased
// by -1) and the subtraction is folded into the next layer's weights; the
// step routine combines the two halves after the fifth layer.
struct ConstructedRnn {
  Dpda dpda;  // totalized copy; carries names, finals, acceptance metadata
  int nq = 0, ns = 0, ng = 0;
  Activation activation = Activation::kSatSigma;
  std::vector<AffineLayer> layers;  // exactly 5
  std::vector<Rational> h0;

  int hidden_dim() const { return nq + ng; }
};

// Only Push/Pop/NoOp transitions are supported; a partial transition table is
// totalized by routing missing triples to an absorbing dead state.
ConstructedRnn compile(const Dpda& dpda,
                       Activation activation = Activation::kSatSigma);

std::vector<Rational> rnn_step(const ConstructedRnn& rnn,
                               const std::vector<Rational>& h, int input);

// Hidden-state readouts.
int rnn_state(const ConstructedRnn& rnn, const std::vector<Rational>& h);
StackVec rnn_stack_vec(const ConstructedRnn& rnn,
                       const std::vector<Rational>& h);
std::vector<int> rnn_stack(const ConstructedRnn& rnn,
                           const std::vector<Rational>& h);

struct RnnRun {
  bool accepted = false;
  std::vector<std::vector<Rational>> trace;  // trace[0] == h0
};

// Accepts iff argmax of the final q-block is a final state and the
// omega-block equals h0's omega-block exactly (stack back to [Z0]).
RnnRun rnn_run(const ConstructedRnn& rnn, const TokenSeq& seq);

struct FixedRun {
  bool accepted = false;
  // 1-based index of the first consumed symbol after which some omega
  // component differs from the exact rational run; nullopt when none does.
  std::optional<int> first_divergence;
};

// Same computation with every value rounded to b fractional bits (ties to
// even) and saturated after each affine layer.
FixedRun rnn_run_fixed(const ConstructedRnn& rnn, const TokenSeq& seq,
                       int bits);

// Exact-rational weight archive (text; `num/den` entries).
void write_rnn(const ConstructedRnn& rnn, std::ostream& out);
ConstructedRnn read_rnn(std::istream& in);

}  // namespace dycklab
