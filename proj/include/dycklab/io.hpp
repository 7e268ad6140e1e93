#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dycklab/dyck.hpp"
#include "dycklab/models.hpp"

namespace dycklab {

// Dataset files: header line `#dyck n=<n> p=<p> q=<q> seed=<seed>`, then one
// word per line with space-separated symbols, LF endings.  Blank lines are
// skipped, so the empty word is not representable (sampled bins start at
// length 2).
struct DatasetFile {
  int n = 0;
  double p = 0.5, q = 0.25;
  uint64_t seed = 0;
  std::vector<TokenSeq> words;
};

void write_dataset(std::ostream& out, const DatasetFile& ds);
void write_dataset(const std::string& path, const DatasetFile& ds);
DatasetFile read_dataset(std::istream& in);
DatasetFile read_dataset(const std::string& path);

// Checkpoints: a version magic line, one JSON line with the model config,
// then a named-tensor archive (name, rows, cols, raw little-endian doubles).
void save_checkpoint(std::ostream& out, const SequenceModel& model);
void save_checkpoint(const std::string& path, const SequenceModel& model);
SequenceModel load_checkpoint(std::istream& in);
SequenceModel load_checkpoint(const std::string& path);

// The raw archive section of the checkpoint format.
void write_named_tensors(std::ostream& out, const NamedParams& params);
NamedParams read_named_tensors(std::istream& in);

std::string model_config_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

// Small file helpers (throw IoError with the path on failure).
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace dycklab
