#include "fedsim/synth.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

using nlohmann::json;

void make_synthetic(const std::string& out_path, const SynthConfig& cfg) {
  if (cfg.n_classes < 2) throw ConfigError("synthetic corpus needs at least 2 classes");
  if (cfg.vocab_size < cfg.n_classes)
    throw ConfigError("vocab_size must be at least n_classes");
  if (!(cfg.overlap >= 0.0 && cfg.overlap <= 1.0))
    throw ConfigError("overlap must be in [0, 1]");

  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write synthetic corpus: " + out_path);

  // Vocabulary is sliced into per-class blocks; with overlap = 0 a document
  // only ever contains tokens from its own class block.
  const int block = cfg.vocab_size / cfg.n_classes;
  Rng rng(cfg.seed);

  for (int i = 0; i < cfg.n_docs; ++i) {
    const int cls = i % cfg.n_classes;
    const int lo = cls * block;
    const int hi = (cls == cfg.n_classes - 1) ? cfg.vocab_size : lo + block;
    const int len = 5 + static_cast<int>(rng.below(11));

    std::string text;
    for (int t = 0; t < len; ++t) {
      int tok;
      if (cfg.overlap > 0.0 && rng.next_double() < cfg.overlap) {
        tok = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.vocab_size)));
      } else {
        tok = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo)));
      }
      if (!text.empty()) text.push_back(' ');
      text += "tok" + std::to_string(tok);
    }

    json j;
    j["id"] = "d" + std::to_string(i);
    j["text"] = text;
    j["label"] = "class" + std::to_string(cls);
    out << j.dump() << "\n";
  }
}

}  // namespace fedsim
