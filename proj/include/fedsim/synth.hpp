#pragma once

#include <cstdint>
#include <string>

namespace fedsim {

struct SynthConfig {
  int n_docs = 100;
  int n_classes = 2;
  int vocab_size = 60;
  double overlap = 0.0;  // probability a token is drawn from the full vocab
  std::uint64_t seed = 0;
};

// Writes a JSONL corpus whose class-conditional token distributions are
// separable by construction at overlap = 0. Labels "class0".."classC-1",
// balanced to within one document. Deterministic by seed.
void make_synthetic(const std::string& out_path, const SynthConfig& cfg);

}  // namespace fedsim
