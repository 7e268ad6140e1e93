#include "dycklab/pda.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dycklab {

bool Dpda::is_final(int state) const {
  return std::find(finals.begin(), finals.end(), state) != finals.end();
}

bool Dpda::is_total() const {
  return delta.size() == static_cast<size_t>(num_inputs()) * num_states() *
                             num_stack_symbols();
}

void Dpda::validate() const {
  auto distinct = [](const std::vector<std::string>& v) {
    std::set<std::string> s(v.begin(), v.end());
    return s.size() == v.size();
  };
  if (alphabet.empty() || states.empty() || stack_symbols.empty())
    throw InputError("dpda: alphabet, states and stack must be nonempty");
  if (!distinct(alphabet) || !distinct(states) || !distinct(stack_symbols))
    throw InputError("dpda: symbol names must be distinct within a section");
  if (initial_state < 0 || initial_state >= num_states())
    throw InputError("dpda: initial state out of range");
  if (initial_stack_symbol < 0 || initial_stack_symbol >= num_stack_symbols())
    throw InputError("dpda: initial stack symbol out of range");
  if (epsilon_symbol && (*epsilon_symbol < 0 || *epsilon_symbol >= num_inputs()))
    throw InputError("dpda: epsilon symbol out of range");
  for (int f : finals)
    if (f < 0 || f >= num_states())
      throw InputError("dpda: final state out of range");
  for (const auto& [key, value] : delta) {
    auto [x, q, g] = key;
    if (x < 0 || x >= num_inputs() || q < 0 || q >= num_states() || g < 0 ||
        g >= num_stack_symbols())
      throw InputError("dpda: transition key out of range");
    if (value.first < 0 || value.first >= num_states())
      throw InputError("dpda: transition target state out of range");
    if (value.second.kind == StackOp::kPush &&
        (value.second.symbol < 0 || value.second.symbol >= num_stack_symbols()))
      throw InputError("dpda: pushed symbol out of range");
  }
}

Dpda build_dyck_dpda(int n) {
  if (n < 1) throw ConfigError("build_dyck_dpda: n must be >= 1");
  Vocab vocab = Vocab::dyck(n);
  Dpda d;
  d.alphabet = vocab.symbols;
  d.states = {"live", "dead"};
  d.stack_symbols.push_back("Z0");
  for (int t = 0; t < n; ++t)
    d.stack_symbols.push_back("A" + std::to_string(t + 1));
  d.initial_state = 0;
  d.initial_stack_symbol = 0;
  d.finals = {0};
  const int live = 0, dead = 1;
  for (int g = 0; g < d.num_stack_symbols(); ++g) {
    for (int t = 0; t < n; ++t) {
      d.delta[{vocab.open_index(t), live, g}] = {live, StackOp::push(1 + t)};
      d.delta[{vocab.close_index(t), live, g}] =
          g == 1 + t ? std::pair{live, StackOp::pop()}
                     : std::pair{dead, StackOp::noop()};
    }
    for (int x = 0; x < d.num_inputs(); ++x)
      d.delta[{x, dead, g}] = {dead, StackOp::noop()};
  }
  return d;
}

PdaConfig initial_config(const Dpda& dpda) {
  return PdaConfig{dpda.initial_state, {dpda.initial_stack_symbol}};
}

PdaConfig step(const Dpda& dpda, const PdaConfig& cfg, int input) {
  if (input < 0 || input >= dpda.num_inputs())
    throw InputError("step: input symbol out of range");
  if (cfg.stack.empty())
    throw StackUnderflowError("step: configuration has an empty stack");
  int top = cfg.stack.back();
  auto it = dpda.delta.find({input, cfg.state, top});
  if (it == dpda.delta.end())
    throw UndefinedTransitionError(
        "no transition for (" + dpda.alphabet[input] + ", " +
        dpda.states[cfg.state] + ", " + dpda.stack_symbols[top] + ")");
  PdaConfig next = cfg;
  next.state = it->second.first;
  const StackOp& op = it->second.second;
  switch (op.kind) {
    case StackOp::kPush:
      next.stack.push_back(op.symbol);
      break;
    case StackOp::kPop:
      next.stack.pop_back();
      break;
    case StackOp::kNoOp:
      break;
  }
  return next;
}

PdaRun run(const Dpda& dpda, const TokenSeq& seq) {
  PdaRun r;
  r.trace.reserve(seq.size() + 1);
  r.trace.push_back(initial_config(dpda));
  for (int sym : seq) r.trace.push_back(step(dpda, r.trace.back(), sym));
  const PdaConfig& last = r.trace.back();
  r.accepted = dpda.is_final(last.state) && last.stack.size() == 1 &&
               last.stack[0] == dpda.initial_stack_symbol;
  return r;
}

int max_stack_height(const PdaRun& r) {
  size_t h = 0;
  for (const auto& cfg : r.trace) h = std::max(h, cfg.stack.size());
  return static_cast<int>(h);
}

// --- spec-file serialization -------------------------------------------------

namespace {

int lookup(const std::vector<std::string>& names, const std::string& name,
           const char* what) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw InputError(std::string("dpda file: unknown ") + what + " '" + name +
                     "'");
  return static_cast<int>(it - names.begin());
}

StackOp parse_op(const std::string& text,
                 const std::vector<std::string>& stack_symbols) {
  if (text == "pop" || text == "pop()") return StackOp::pop();
  if (text == "noop" || text == "noop()") return StackOp::noop();
  if (text.rfind("push(", 0) == 0 && text.back() == ')') {
    std::string arg = text.substr(5, text.size() - 6);
    return StackOp::push(lookup(stack_symbols, arg, "stack symbol"));
  }
  throw InputError("dpda file: cannot parse stack op '" + text + "'");
}

std::string format_op(const StackOp& op,
                      const std::vector<std::string>& stack_symbols) {
  switch (op.kind) {
    case StackOp::kPush:
      return "push(" + stack_symbols[op.symbol] + ")";
    case StackOp::kPop:
      return "pop";
    default:
      return "noop";
  }
}

}  // namespace

Dpda parse_dpda(const std::string& text) {
  Dpda d;
  std::string section;
  std::vector<std::string> transition_lines, final_names;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos)
      line.erase(pos);
    std::istringstream trim(line);
    std::string first;
    if (!(trim >> first)) continue;
    // Only the exact headers open a section; a lone "[" is a symbol name.
    if (first == "[alphabet]" || first == "[states]" || first == "[stack]" ||
        first == "[transitions]" || first == "[finals]") {
      section = first;
      continue;
    }
    if (section == "[alphabet]") {
      if (first == "eps") d.epsilon_symbol = static_cast<int>(d.alphabet.size());
      d.alphabet.push_back(first);
    } else if (section == "[states]") {
      d.states.push_back(first);
    } else if (section == "[stack]") {
      d.stack_symbols.push_back(first);
    } else if (section == "[transitions]") {
      transition_lines.push_back(line);
    } else if (section == "[finals]") {
      final_names.push_back(first);
    } else {
      throw InputError("dpda file: content outside a known section: '" + line +
                       "'");
    }
  }
  if (d.states.empty() || d.alphabet.empty() || d.stack_symbols.empty())
    throw InputError("dpda file: missing [alphabet], [states] or [stack]");
  // First state listed is initial, first stack symbol is Z0.
  d.initial_state = 0;
  d.initial_stack_symbol = 0;
  for (const auto& tl : transition_lines) {
    std::istringstream ts(tl);
    std::string x, q, top, arrow, q2, op;
    if (!(ts >> x >> q >> top >> arrow >> q2 >> op) || arrow != "->")
      throw InputError("dpda file: bad transition line '" + tl + "'");
    std::tuple<int, int, int> key{lookup(d.alphabet, x, "input symbol"),
                                  lookup(d.states, q, "state"),
                                  lookup(d.stack_symbols, top, "stack symbol")};
    if (d.delta.count(key))
      throw InputError("dpda file: duplicate transition for '" + x + " " + q +
                       " " + top + "'");
    d.delta[key] = {lookup(d.states, q2, "state"),
                    parse_op(op, d.stack_symbols)};
  }
  for (const auto& f : final_names)
    d.finals.push_back(lookup(d.states, f, "state"));
  d.validate();
  return d;
}

std::string format_dpda(const Dpda& d) {
  d.validate();
  std::ostringstream out;
  out << "[alphabet]\n";
  for (const auto& s : d.alphabet) out << s << "\n";
  out << "[states]\n";
  // Initial state first, per the file convention.
  out << d.states[d.initial_state] << "\n";
  for (int q = 0; q < d.num_states(); ++q)
    if (q != d.initial_state) out << d.states[q] << "\n";
  out << "[stack]\n";
  out << d.stack_symbols[d.initial_stack_symbol] << "\n";
  for (int g = 0; g < d.num_stack_symbols(); ++g)
    if (g != d.initial_stack_symbol) out << d.stack_symbols[g] << "\n";
  out << "[transitions]\n";
  for (const auto& [key, value] : d.delta) {
    auto [x, q, g] = key;
    out << d.alphabet[x] << " " << d.states[q] << " " << d.stack_symbols[g]
        << " -> " << d.states[value.first] << " "
        << format_op(value.second, d.stack_symbols) << "\n";
  }
  out << "[finals]\n";
  for (int f : d.finals) out << d.states[f] << "\n";
  return out.str();
}

}  // namespace dycklab
