#include "dycklab/rnn_construction.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace dycklab {

void AffineLayer::finalize() {
  cols.assign(W.cols, {});
  for (int r = 0; r < W.rows; ++r)
    for (int c = 0; c < W.cols; ++c)
      if (W.at(r, c) != 0) cols[c].emplace_back(r, W.at(r, c));
}

std::vector<Rational> AffineLayer::affine(
    const std::vector<Rational>& x) const {
  if (static_cast<int>(x.size()) != in_dim())
    throw InputError("affine layer: input dimension mismatch");
  std::vector<Rational> z(b);
  for (int c = 0; c < out_dim(); ++c)
    for (const auto& [r, w] : cols[c]) z[c] += w * x[r];
  return z;
}

AffineLayer pair_map(int size_phi, int size_psi) {
  if (size_phi < 1 || size_psi < 1)
    throw ConfigError("pair_map: sizes must be >= 1");
  AffineLayer l;
  l.W = RatMatrix(size_phi + size_psi, size_phi * size_psi);
  l.b.assign(size_phi * size_psi, Rational(-1));
  for (int j = 0; j < size_psi; ++j)
    for (int i = 0; i < size_phi; ++i) {
      l.W.at(i, j * size_phi + i) = 1;
      l.W.at(size_phi + j, j * size_phi + i) = 1;
    }
  l.finalize();
  return l;
}

AffineLayer transition_map(const std::vector<std::vector<Rational>>& table,
                           int out_dim) {
  AffineLayer l;
  l.W = RatMatrix(static_cast<int>(table.size()), out_dim);
  l.b.assign(out_dim, Rational(0));
  for (int r = 0; r < static_cast<int>(table.size()); ++r) {
    if (static_cast<int>(table[r].size()) != out_dim)
      throw ConfigError("transition_map: table row dimension mismatch");
    for (int c = 0; c < out_dim; ++c) l.W.at(r, c) = table[r][c];
  }
  l.finalize();
  return l;
}

namespace {

// Ensure delta covers every (input, state, top) triple; missing entries are
// routed to an absorbing non-final dead state.
Dpda totalize(const Dpda& in) {
  Dpda d = in;
  d.validate();
  if (d.is_total()) return d;
  std::string dead_name = "_dead";
  while (std::find(d.states.begin(), d.states.end(), dead_name) !=
         d.states.end())
    dead_name += "_";
  d.states.push_back(dead_name);
  int dead = d.num_states() - 1;
  for (int x = 0; x < d.num_inputs(); ++x)
    for (int q = 0; q < d.num_states(); ++q)
      for (int g = 0; g < d.num_stack_symbols(); ++g)
        d.delta.try_emplace({x, q, g}, dead, StackOp::noop());
  return d;
}

}  // namespace

ConstructedRnn compile(const Dpda& dpda, Activation activation) {
  ConstructedRnn rnn;
  rnn.dpda = totalize(dpda);
  const Dpda& d = rnn.dpda;
  const int Q = d.num_states(), S = d.num_inputs(), G = d.num_stack_symbols();
  rnn.nq = Q;
  rnn.ns = S;
  rnn.ng = G;
  rnn.layers.resize(5);

  // L1: [q | omega | x] -> [pair(q,x) | tau_top | omega]
  {
    AffineLayer& l = rnn.layers[0];
    l.W = RatMatrix(Q + G + S, Q * S + 2 * G);
    l.b.assign(Q * S + 2 * G, Rational(0));
    for (int ix = 0; ix < S; ++ix)
      for (int iq = 0; iq < Q; ++iq) {
        int j = ix * Q + iq;
        l.W.at(iq, j) = 1;
        l.W.at(Q + G + ix, j) = 1;
        l.b[j] = -1;
      }
    for (int g = 0; g < G; ++g) {
      l.W.at(Q + g, Q * S + g) = 4;       // top: sigma(4 omega - 2)
      l.b[Q * S + g] = -2;
      l.W.at(Q + g, Q * S + G + g) = 1;   // carry omega
    }
  }

  // L2: [pair | tau_top | omega] -> [triple | tau_top | omega]
  {
    AffineLayer& l = rnn.layers[1];
    const int P = Q * S;
    l.W = RatMatrix(P + 2 * G, P * G + 2 * G);
    l.b.assign(P * G + 2 * G, Rational(0));
    for (int g = 0; g < G; ++g)
      for (int ip = 0; ip < P; ++ip) {
        int j = g * P + ip;
        l.W.at(ip, j) = 1;
        l.W.at(P + g, j) = 1;
        l.b[j] = -1;
      }
    for (int g = 0; g < G; ++g) {
      l.W.at(P + g, P * G + g) = 1;
      l.W.at(P + G + g, P * G + G + g) = 1;
    }
  }

  // L3: [triple | tau_top | omega] ->
  //     [q' | omega | omega_pop | omega_noop | tau_push | c_push | c_pop | c_noop]
  {
    AffineLayer& l = rnn.layers[2];
    const int P = Q * S, T = P * G;
    const int oq = 0, oo = Q, opop = Q + G, onoop = Q + 2 * G,
              otpush = Q + 3 * G, ocpush = Q + 4 * G, ocpop = Q + 5 * G,
              ocnoop = Q + 6 * G;
    l.W = RatMatrix(T + 2 * G, Q + 7 * G);
    l.b.assign(Q + 7 * G, Rational(0));
    for (int g = 0; g < G; ++g)
      for (int ix = 0; ix < S; ++ix)
        for (int iq = 0; iq < Q; ++iq) {
          int r = g * P + ix * Q + iq;
          auto [q2, op] = d.delta.at({ix, iq, g});
          l.W.at(r, oq + q2) = 1;
          int ctrl = op.kind == StackOp::kPush  ? ocpush
                     : op.kind == StackOp::kPop ? ocpop
                                                : ocnoop;
          for (int k = 0; k < G; ++k) l.W.at(r, ctrl + k) = 1;
          if (op.kind == StackOp::kPush) l.W.at(r, otpush + op.symbol) = 1;
        }
    for (int g = 0; g < G; ++g) {
      l.W.at(T + G + g, oo + g) = 1;       // carry omega
      l.W.at(T + G + g, opop + g) = 4;     // pop candidate: 4w - 2 tau - 1
      l.W.at(T + g, opop + g) = -2;
      l.b[opop + g] = -1;
      l.W.at(T + G + g, onoop + g) = 1;    // no-op candidate
    }
  }

  // L4: gate the three candidates against their controls.
  {
    AffineLayer& l = rnn.layers[3];
    const int oo = Q, opop = Q + G, onoop = Q + 2 * G, otpush = Q + 3 * G,
              ocpush = Q + 4 * G, ocpop = Q + 5 * G, ocnoop = Q + 6 * G;
    l.W = RatMatrix(Q + 7 * G, Q + 3 * G);
    l.b.assign(Q + 3 * G, Rational(0));
    for (int iq = 0; iq < Q; ++iq) l.W.at(iq, iq) = 1;
    for (int g = 0; g < G; ++g) {
      l.W.at(opop + g, Q + g) = 1;              // sigma(w_pop + c_pop - 1)
      l.W.at(ocpop + g, Q + g) = 1;
      l.b[Q + g] = -1;
      l.W.at(onoop + g, Q + G + g) = 1;         // sigma(w + c_noop - 1)
      l.W.at(ocnoop + g, Q + G + g) = 1;
      l.b[Q + G + g] = -1;
      l.W.at(oo + g, Q + 2 * G + g) = Rational(1, 4);  // push candidate
      l.W.at(otpush + g, Q + 2 * G + g) = Rational(1, 2);
      l.W.at(ocpush + g, Q + 2 * G + g) = 1;
      l.b[Q + 2 * G + g] = Rational(-3, 4);
    }
  }

  // L5: sum the gated candidates back into one stack block.
  {
    AffineLayer& l = rnn.layers[4];
    l.W = RatMatrix(Q + 3 * G, Q + G);
    l.b.assign(Q + G, Rational(0));
    for (int iq = 0; iq < Q; ++iq) l.W.at(iq, iq) = 1;
    for (int g = 0; g < G; ++g)
      for (int k = 0; k < 3; ++k) l.W.at(Q + k * G + g, Q + g) = 1;
  }

  rnn.h0.assign(Q + G, Rational(0));
  rnn.h0[d.initial_state] = 1;
  StackVec w0 = push(StackVec::empty(G), d.initial_stack_symbol);
  for (int g = 0; g < G; ++g) rnn.h0[Q + g] = w0.w[g];

  if (activation == Activation::kReluPairs) {
    rnn.activation = Activation::kReluPairs;
    // sigma(z) = relu(z) - relu(z - 1): duplicate every layer's outputs with
    // the second copy biased down by one, and make layers 2..5 consume
    // [y, y'] via stacked [W; -W] so their affine input is y - y'.
    std::vector<AffineLayer> expanded(5);
    for (int k = 0; k < 5; ++k) {
      const AffineLayer& src = rnn.layers[k];
      AffineLayer& dst = expanded[k];
      int in = src.in_dim(), out = src.out_dim();
      bool doubled_in = k > 0;
      dst.W = RatMatrix(doubled_in ? 2 * in : in, 2 * out);
      dst.b.assign(2 * out, Rational(0));
      for (int r = 0; r < in; ++r)
        for (int c = 0; c < out; ++c) {
          const Rational& w = src.W.at(r, c);
          if (w == 0) continue;
          dst.W.at(r, c) = w;
          dst.W.at(r, out + c) = w;
          if (doubled_in) {
            dst.W.at(in + r, c) = -w;
            dst.W.at(in + r, out + c) = -w;
          }
        }
      for (int c = 0; c < out; ++c) {
        dst.b[c] = src.b[c];
        dst.b[out + c] = src.b[c] - 1;
      }
    }
    rnn.layers = std::move(expanded);
  }
  for (auto& l : rnn.layers) l.finalize();
  return rnn;
}

static Rational relu(const Rational& x) { return x < 0 ? Rational(0) : x; }

std::vector<Rational> rnn_step(const ConstructedRnn& rnn,
                               const std::vector<Rational>& h, int input) {
  if (static_cast<int>(h.size()) != rnn.hidden_dim())
    throw InputError("rnn_step: hidden state has wrong dimension");
  if (input < 0 || input >= rnn.ns)
    throw InputError("rnn_step: input symbol out of range");
  std::vector<Rational> v;
  v.reserve(h.size() + rnn.ns);
  v = h;
  v.resize(h.size() + rnn.ns, Rational(0));
  v[h.size() + input] = 1;
  for (const auto& layer : rnn.layers) {
    std::vector<Rational> z = layer.affine(v);
    if (rnn.activation == Activation::kSatSigma)
      for (auto& x : z) x = sat_sigma(x);
    else
      for (auto& x : z) x = relu(x);
    v = std::move(z);
  }
  if (rnn.activation == Activation::kReluPairs) {
    int half = static_cast<int>(v.size()) / 2;
    std::vector<Rational> combined(half);
    for (int i = 0; i < half; ++i) combined[i] = v[i] - v[half + i];
    v = std::move(combined);
  }
  return v;
}

int rnn_state(const ConstructedRnn& rnn, const std::vector<Rational>& h) {
  return static_cast<int>(
      std::max_element(h.begin(), h.begin() + rnn.nq) - h.begin());
}

StackVec rnn_stack_vec(const ConstructedRnn& rnn,
                       const std::vector<Rational>& h) {
  StackVec s;
  s.w.assign(h.begin() + rnn.nq, h.end());
  return s;
}

std::vector<int> rnn_stack(const ConstructedRnn& rnn,
                           const std::vector<Rational>& h) {
  return decode_stack(rnn_stack_vec(rnn, h));
}

static bool omega_equal(const ConstructedRnn& rnn,
                        const std::vector<Rational>& a,
                        const std::vector<Rational>& b) {
  for (int g = 0; g < rnn.ng; ++g)
    if (a[rnn.nq + g] != b[rnn.nq + g]) return false;
  return true;
}

RnnRun rnn_run(const ConstructedRnn& rnn, const TokenSeq& seq) {
  RnnRun r;
  r.trace.reserve(seq.size() + 1);
  r.trace.push_back(rnn.h0);
  for (int sym : seq) r.trace.push_back(rnn_step(rnn, r.trace.back(), sym));
  const auto& last = r.trace.back();
  r.accepted = rnn.dpda.is_final(rnn_state(rnn, last)) &&
               omega_equal(rnn, last, rnn.h0);
  return r;
}

FixedRun rnn_run_fixed(const ConstructedRnn& rnn, const TokenSeq& seq,
                       int bits) {
  check_fixed_bits(bits);
  if (rnn.activation != Activation::kSatSigma)
    throw ConfigError(
        "fixed-point runs are defined for the saturated-sigmoid form");
  auto quantize_state = [&](const std::vector<Rational>& h) {
    std::vector<FixedPoint> out;
    out.reserve(h.size());
    for (const auto& x : h) out.push_back(fixed_from_rational(x, bits));
    return out;
  };
  FixedRun result;
  std::vector<Rational> exact = rnn.h0;
  std::vector<FixedPoint> fixed = quantize_state(rnn.h0);
  int step_no = 0;
  for (int sym : seq) {
    ++step_no;
    exact = rnn_step(rnn, exact, sym);
    // Fixed path: same affine pipeline, rounding after every layer.
    std::vector<Rational> v(fixed.size() + rnn.ns, Rational(0));
    for (size_t i = 0; i < fixed.size(); ++i) v[i] = fixed[i].to_rational();
    v[fixed.size() + sym] = 1;
    std::vector<FixedPoint> cur;
    for (const auto& layer : rnn.layers) {
      std::vector<Rational> z = layer.affine(v);
      cur.clear();
      cur.reserve(z.size());
      for (const auto& x : z) cur.push_back(fixed_from_rational(x, bits));
      v.resize(cur.size());
      for (size_t i = 0; i < cur.size(); ++i) v[i] = cur[i].to_rational();
    }
    fixed = std::move(cur);
    if (!result.first_divergence) {
      for (int g = 0; g < rnn.ng; ++g)
        if (fixed[rnn.nq + g].to_rational() != exact[rnn.nq + g]) {
          result.first_divergence = step_no;
          break;
        }
    }
  }
  // Acceptance read off the fixed trajectory itself.
  int best = 0;
  for (int iq = 1; iq < rnn.nq; ++iq)
    if (fixed[iq].num > fixed[best].num) best = iq;
  bool stack_home = true;
  std::vector<FixedPoint> home = quantize_state(rnn.h0);
  for (int g = 0; g < rnn.ng; ++g)
    if (!(fixed[rnn.nq + g] == home[rnn.nq + g])) stack_home = false;
  result.accepted = rnn.dpda.is_final(best) && stack_home;
  return result;
}

// --- weight archive ----------------------------------------------------------

void write_rnn(const ConstructedRnn& rnn, std::ostream& out) {
  out << "#dycklab-rnn v1\n";
  out << "dims " << rnn.nq << " " << rnn.ns << " " << rnn.ng << "\n";
  out << "activation "
      << (rnn.activation == Activation::kSatSigma ? "satsigma" : "relupairs")
      << "\n";
  out << "q0 " << rnn.dpda.initial_state << "\n";
  out << "z0 " << rnn.dpda.initial_stack_symbol << "\n";
  out << "finals " << rnn.dpda.finals.size();
  for (int f : rnn.dpda.finals) out << " " << f;
  out << "\n";
  out << "accept final-state-and-base-stack\n";
  auto names = [&out](const char* tag, const std::vector<std::string>& v) {
    out << tag << " " << v.size();
    for (const auto& s : v) out << " " << s;
    out << "\n";
  };
  names("alphabet", rnn.dpda.alphabet);
  names("states", rnn.dpda.states);
  names("stack", rnn.dpda.stack_symbols);
  out << "h0 " << rnn.h0.size();
  for (const auto& x : rnn.h0) out << " " << to_string(x);
  out << "\n";
  for (size_t k = 0; k < rnn.layers.size(); ++k) {
    const AffineLayer& l = rnn.layers[k];
    out << "layer " << k + 1 << " " << l.in_dim() << " " << l.out_dim()
        << "\n";
    for (int r = 0; r < l.in_dim(); ++r) {
      for (int c = 0; c < l.out_dim(); ++c)
        out << (c ? " " : "") << to_string(l.W.at(r, c));
      out << "\n";
    }
    for (int c = 0; c < l.out_dim(); ++c)
      out << (c ? " " : "") << to_string(l.b[c]);
    out << "\n";
  }
}

namespace {
std::string expect_tag(std::istream& in, const std::string& tag) {
  std::string got;
  if (!(in >> got) || got != tag)
    throw IoError("rnn archive: expected '" + tag + "', got '" + got + "'");
  return got;
}
std::vector<std::string> read_names(std::istream& in, const std::string& tag) {
  expect_tag(in, tag);
  size_t k;
  in >> k;
  std::vector<std::string> v(k);
  for (auto& s : v)
    if (!(in >> s)) throw IoError("rnn archive: truncated " + tag);
  return v;
}
}  // namespace

ConstructedRnn read_rnn(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "#dycklab-rnn v1")
    throw IoError("rnn archive: bad or missing header");
  ConstructedRnn rnn;
  expect_tag(in, "dims");
  in >> rnn.nq >> rnn.ns >> rnn.ng;
  expect_tag(in, "activation");
  std::string act;
  in >> act;
  if (act == "satsigma")
    rnn.activation = Activation::kSatSigma;
  else if (act == "relupairs")
    rnn.activation = Activation::kReluPairs;
  else
    throw IoError("rnn archive: unknown activation '" + act + "'");
  expect_tag(in, "q0");
  in >> rnn.dpda.initial_state;
  expect_tag(in, "z0");
  in >> rnn.dpda.initial_stack_symbol;
  expect_tag(in, "finals");
  size_t nf;
  in >> nf;
  rnn.dpda.finals.resize(nf);
  for (auto& f : rnn.dpda.finals) in >> f;
  expect_tag(in, "accept");
  std::string rule;
  in >> rule;
  if (rule != "final-state-and-base-stack")
    throw IoError("rnn archive: unknown acceptance rule '" + rule + "'");
  rnn.dpda.alphabet = read_names(in, "alphabet");
  rnn.dpda.states = read_names(in, "states");
  rnn.dpda.stack_symbols = read_names(in, "stack");
  expect_tag(in, "h0");
  size_t hd;
  in >> hd;
  rnn.h0.resize(hd);
  std::string tok;
  for (auto& x : rnn.h0) {
    in >> tok;
    x = parse_rational(tok);
  }
  rnn.layers.resize(5);
  for (int k = 0; k < 5; ++k) {
    expect_tag(in, "layer");
    int idx, rows, sc;
    in >> idx >> rows >> sc;
    if (idx != k + 1) throw IoError("rnn archive: layers out of order");
    AffineLayer& l = rnn.layers[k];
    l.W = RatMatrix(rows, sc);
    l.b.assign(sc, Rational(0));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < sc; ++c) {
        if (!(in >> tok)) throw IoError("rnn archive: truncated weights");
        l.W.at(r, c) = parse_rational(tok);
      }
    for (int c = 0; c < sc; ++c) {
      if (!(in >> tok)) throw IoError("rnn archive: truncated bias");
      l.b[c] = parse_rational(tok);
    }
    l.finalize();
  }
  if (static_cast<int>(rnn.h0.size()) != rnn.nq + rnn.ng)
    throw IoError("rnn archive: h0 dimension mismatch");
  return rnn;
}

}  // namespace dycklab
