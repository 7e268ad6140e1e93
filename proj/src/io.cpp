#include "dycklab/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dycklab {

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

void write_dataset(std::ostream& out, const DatasetFile& ds) {
  Vocab vocab = Vocab::dyck(ds.n);
  std::ostringstream header;
  header.precision(17);
  header << "#dyck n=" << ds.n << " p=" << ds.p << " q=" << ds.q
         << " seed=" << ds.seed << "\n";
  out << header.str();
  for (const auto& w : ds.words) out << format_word(vocab, w) << "\n";
  if (!out) throw IoError("dataset write failed");
}

void write_dataset(const std::string& path, const DatasetFile& ds) {
  auto out = open_out(path, std::ios::out);
  write_dataset(out, ds);
}

DatasetFile read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset file is empty");
  DatasetFile ds;
  {
    std::istringstream hs(line);
    std::string tag, kv;
    hs >> tag;
    if (tag != "#dyck")
      throw IoError("dataset header must start with '#dyck', got '" + line +
                    "'");
    bool have_n = false;
    while (hs >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw IoError("malformed dataset header field '" + kv + "'");
      std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      try {
        if (key == "n") {
          ds.n = std::stoi(val);
          have_n = true;
        } else if (key == "p") {
          ds.p = std::stod(val);
        } else if (key == "q") {
          ds.q = std::stod(val);
        } else if (key == "seed") {
          ds.seed = std::stoull(val);
        } else {
          throw IoError("unknown dataset header field '" + key + "'");
        }
      } catch (const std::logic_error&) {
        throw IoError("bad value in dataset header field '" + kv + "'");
      }
    }
    if (!have_n) throw IoError("dataset header is missing n");
  }
  Vocab vocab = Vocab::dyck(ds.n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ds.words.push_back(parse_word(vocab, line));
  }
  return ds;
}

DatasetFile read_dataset(const std::string& path) {
  auto in = open_in(path, std::ios::in);
  return read_dataset(in);
}

namespace {

constexpr char kCheckpointMagic[] = "DLCKPT01";

void put_u32(std::ostream& out, uint32_t x) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  out.write(b, 4);
}

uint32_t get_u32(std::istream& in) {
  char b[4];
  if (!in.read(b, 4)) throw IoError("checkpoint archive is truncated");
  uint32_t x = 0;
  for (int i = 0; i < 4; ++i)
    x |= static_cast<uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return x;
}

void put_f64(std::ostream& out, double d) {
  auto bits = std::bit_cast<uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

double get_f64(std::istream& in) {
  char b[8];
  if (!in.read(b, 8)) throw IoError("checkpoint archive is truncated");
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_named_tensors(std::ostream& out, const NamedParams& params) {
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<uint32_t>(t.rows()));
    put_u32(out, static_cast<uint32_t>(t.cols()));
    for (double d : t.data()) put_f64(out, d);
  }
  if (!out) throw IoError("tensor archive write failed");
}

NamedParams read_named_tensors(std::istream& in) {
  NamedParams params;
  uint32_t count = get_u32(in);
  params.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = get_u32(in);
    if (name_len > 4096) throw IoError("implausible tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      throw IoError("checkpoint archive is truncated");
    int rows = static_cast<int>(get_u32(in));
    int cols = static_cast<int>(get_u32(in));
    if (rows < 0 || cols < 0 || static_cast<int64_t>(rows) * cols > (1 << 28))
      throw IoError("implausible tensor shape in archive");
    std::vector<double> data(static_cast<size_t>(rows) * cols);
    for (auto& d : data) d = get_f64(in);
    params.emplace_back(name, Tensor::from_data(rows, cols, std::move(data)));
  }
  return params;
}

std::string model_config_json(const ModelConfig& cfg) {
  nlohmann::json j{{"kind", model_kind_name(cfg.kind)},
                   {"hidden", cfg.hidden},
                   {"layers", cfg.layers},
                   {"heads", cfg.heads},
                   {"use_positional", cfg.use_positional},
                   {"vocab_size", cfg.vocab_size},
                   {"seed", cfg.seed},
                   {"max_positions", cfg.max_positions}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad model config JSON: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.kind = parse_model_kind(j.at("kind").get<std::string>());
    cfg.hidden = j.at("hidden").get<int>();
    cfg.layers = j.at("layers").get<int>();
    cfg.heads = j.value("heads", cfg.heads);
    cfg.use_positional = j.value("use_positional", cfg.use_positional);
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.max_positions = j.value("max_positions", cfg.max_positions);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model config JSON is missing fields: ") +
                  e.what());
  }
  return cfg;
}

void save_checkpoint(std::ostream& out, const SequenceModel& model) {
  out << kCheckpointMagic << "\n";
  out << model_config_json(model.config()) << "\n";
  write_named_tensors(out, model.params());
}

void save_checkpoint(const std::string& path, const SequenceModel& model) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  save_checkpoint(out, model);
}

SequenceModel load_checkpoint(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != kCheckpointMagic)
    throw IoError("not a checkpoint file (bad version header)");
  std::string config_line;
  if (!std::getline(in, config_line))
    throw IoError("checkpoint is missing its config line");
  ModelConfig cfg = model_config_from_json(config_line);
  SequenceModel model(cfg);
  NamedParams loaded = read_named_tensors(in);
  NamedParams& live = model.params();
  if (loaded.size() != live.size())
    throw IoError("checkpoint holds " + std::to_string(loaded.size()) +
                  " tensors, model expects " + std::to_string(live.size()));
  for (size_t i = 0; i < live.size(); ++i) {
    auto& [name, t] = live[i];
    const auto& [lname, lt] = loaded[i];
    if (lname != name)
      throw IoError("checkpoint tensor '" + lname + "' where '" + name +
                    "' was expected");
    if (lt.rows() != t.rows() || lt.cols() != t.cols())
      throw IoError("checkpoint tensor '" + name + "' has shape " +
                    std::to_string(lt.rows()) + "x" +
                    std::to_string(lt.cols()) + ", model expects " +
                    std::to_string(t.rows()) + "x" +
                    std::to_string(t.cols()));
    t.data() = lt.data();
  }
  return model;
}

SequenceModel load_checkpoint(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return load_checkpoint(in);
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path, std::ios::out);
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path, std::ios::in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dycklab
