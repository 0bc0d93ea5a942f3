#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedsim/model.hpp"

namespace fedsim {

enum class Split { Train, Val, Test };

struct Document {
  std::string id;
  std::string text;
  std::string raw_label;
  std::optional<std::string> merged_label;
  std::optional<Split> split;

  // Label used for stratification and featurization.
  const std::string& effective_label() const { return merged_label ? *merged_label : raw_label; }
};

// Table-driven raw->merged label mapping; drops remove a class entirely.
struct LabelSchema {
  std::map<std::string, std::string> merges;
  std::set<std::string> drops;
  std::vector<std::string> class_order;

  void validate() const;
  int class_index(const std::string& merged) const;  // -1 if absent
  static LabelSchema identity(const std::vector<std::string>& labels);
  static LabelSchema load(const std::string& path);
};

struct Partition {
  int client_id = 0;
  std::vector<std::string> example_ids;
};

// Merged-label -> {hate, not-hate} projection for functional evaluation.
struct BinaryMapping {
  std::set<std::string> hate_labels;
  std::set<std::string> nothate_labels;

  void validate_covers(const std::vector<std::string>& class_order) const;
  bool is_hate(const std::string& merged_label) const { return hate_labels.count(merged_label) > 0; }
  static BinaryMapping load(const std::string& path);
};

enum class CorpusFormat { Csv, Jsonl };

struct CorpusLoad {
  std::vector<Document> docs;
  int empty_text_warnings = 0;
};

// CSV needs header id,text,label (RFC-4180 quoting); JSONL one object per
// line with keys id, text, label. Empty-text records are dropped and counted.
CorpusLoad load_corpus(const std::string& path, CorpusFormat format);

std::vector<Document> apply_schema(const std::vector<Document>& docs, const LabelSchema& schema);

// Drops documents whose token count strictly exceeds the percentile-th
// percentile (nearest-rank) of token counts.
std::vector<Document> filter_longest_percentile(const std::vector<Document>& docs,
                                                double percentile);

// Assigns Split::Train/Val/Test per class with largest-remainder rounding;
// within-class order shuffled by the seeded RNG. Requires >= 3 docs per class.
void stratified_split(std::vector<Document>& docs, double train_ratio, double val_ratio,
                      double test_ratio, std::uint64_t seed);

// Seeded shuffle then round-robin deal; sizes differ by at most one.
std::vector<Partition> partition_iid(const std::vector<Document>& train_docs, int n_clients,
                                     std::uint64_t seed);

// Lowercases ASCII and splits on runs of ASCII non-alphanumerics; bytes >=
// 0x80 are treated as word characters so UTF-8 sequences stay inside tokens.
std::vector<std::string> tokenize(const std::string& text);

std::uint64_t token_count(const std::string& text);

// Hashing-trick feature map for raw text: index = fnv1a64(token) mod D,
// value = token multiplicity, sorted by index.
std::vector<std::pair<std::uint32_t, double>> hash_features(const std::string& text,
                                                            int feature_dim);

// Hashing-trick featurization: index = fnv1a64(token) mod D.
FeaturizedExample featurize_one(const Document& doc, int feature_dim,
                                const std::vector<std::string>& class_order, bool allow_empty);

std::vector<FeaturizedExample> featurize(const std::vector<Document>& docs, int feature_dim,
                                         const std::vector<std::string>& class_order,
                                         bool allow_empty = false);

}  // namespace fedsim
