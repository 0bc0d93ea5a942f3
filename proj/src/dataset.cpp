#include "fedsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

using nlohmann::json;

void LabelSchema::validate() const {
  std::set<std::string> classes(class_order.begin(), class_order.end());
  if (classes.size() != class_order.size())
    throw ConfigError("schema: duplicate entries in class_order");
  for (const auto& [raw, merged] : merges) {
    if (!classes.count(merged))
      throw ConfigError("schema: merged label '" + merged + "' not in class_order");
    if (drops.count(raw))
      throw ConfigError("schema: label '" + raw + "' both merged and dropped");
  }
}

int LabelSchema::class_index(const std::string& merged) const {
  auto it = std::find(class_order.begin(), class_order.end(), merged);
  return it == class_order.end() ? -1 : static_cast<int>(it - class_order.begin());
}

LabelSchema LabelSchema::identity(const std::vector<std::string>& labels) {
  LabelSchema s;
  std::set<std::string> uniq(labels.begin(), labels.end());
  for (const auto& l : uniq) {
    s.merges[l] = l;
    s.class_order.push_back(l);
  }
  return s;
}

LabelSchema LabelSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("schema file " + path + ": " + e.what());
  }
  LabelSchema s;
  for (const auto& [k, v] : j.at("merges").items()) s.merges[k] = v.get<std::string>();
  for (const auto& d : j.value("drops", json::array())) s.drops.insert(d.get<std::string>());
  for (const auto& c : j.at("class_order")) s.class_order.push_back(c.get<std::string>());
  s.validate();
  return s;
}

void BinaryMapping::validate_covers(const std::vector<std::string>& class_order) const {
  for (const auto& c : class_order) {
    if (!hate_labels.count(c) && !nothate_labels.count(c))
      throw ConfigError("binary mapping does not cover class '" + c + "'");
    if (hate_labels.count(c) && nothate_labels.count(c))
      throw ConfigError("binary mapping assigns class '" + c + "' to both sides");
  }
}

BinaryMapping BinaryMapping::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mapping file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("mapping file " + path + ": " + e.what());
  }
  BinaryMapping m;
  for (const auto& l : j.at("hate_labels")) m.hate_labels.insert(l.get<std::string>());
  for (const auto& l : j.value("nothate_labels", json::array()))
    m.nothate_labels.insert(l.get<std::string>());
  return m;
}

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

// RFC-4180 parser; quoted fields may contain commas, quotes ("") and newlines.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_started = true;
        break;
      case ',':
        row.push_back(field);
        field.clear();
        row_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_started || !field.empty() || !row.empty()) {
          row.push_back(field);
          rows.push_back(row);
        }
        field.clear();
        row.clear();
        row_started = false;
        break;
      default:
        field.push_back(c);
        row_started = true;
        break;
    }
  }
  if (row_started || !field.empty() || !row.empty()) {
    row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

std::string json_id_field(const json& j) {
  const json& id = j.at("id");
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<long long>());
  throw DataError("id field must be a string or integer");
}

}  // namespace

CorpusLoad load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);

  CorpusLoad out;
  std::unordered_set<std::string> seen_ids;
  auto add = [&](Document d, std::size_t line_no) {
    if (is_blank(d.text)) {
      ++out.empty_text_warnings;
      return;
    }
    if (!seen_ids.insert(d.id).second)
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate id '" + d.id + "'");
    out.docs.push_back(std::move(d));
  };

  if (format == CorpusFormat::Csv) {
    auto rows = parse_csv(in);
    if (rows.empty()) throw DataError(path + ": empty csv");
    const std::vector<std::string> expect = {"id", "text", "label"};
    if (rows[0] != expect) throw DataError(path + ": csv header must be id,text,label");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 3)
        throw DataError(path + ": record " + std::to_string(i + 1) + " has " +
                        std::to_string(rows[i].size()) + " fields, expected 3");
      add(Document{rows[i][0], rows[i][1], rows[i][2], std::nullopt, std::nullopt}, i + 1);
    }
  } else {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (is_blank(line)) continue;
      json j;
      try {
        j = json::parse(line);
        add(Document{json_id_field(j), j.at("text").get<std::string>(),
                     j.at("label").get<std::string>(), std::nullopt, std::nullopt},
            line_no);
      } catch (const json::exception& e) {
        throw DataError(path + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
      }
    }
  }
  return out;
}

std::vector<Document> apply_schema(const std::vector<Document>& docs, const LabelSchema& schema) {
  schema.validate();
  std::vector<Document> out;
  out.reserve(docs.size());
  for (const Document& d : docs) {
    if (schema.drops.count(d.raw_label)) continue;
    auto it = schema.merges.find(d.raw_label);
    if (it == schema.merges.end())
      throw DataError("raw label '" + d.raw_label + "' not covered by schema (doc " + d.id + ")");
    Document copy = d;
    copy.merged_label = it->second;
    out.push_back(std::move(copy));
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    bool word = std::isalnum(c) != 0 || c >= 0x80;
    if (word) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::uint64_t token_count(const std::string& text) { return tokenize(text).size(); }

std::vector<Document> filter_longest_percentile(const std::vector<Document>& docs,
                                                double percentile) {
  if (docs.empty()) throw DataError("filter_longest_percentile: empty input");
  if (!(percentile > 0.0 && percentile < 100.0))
    throw ConfigError("percentile must be in (0, 100)");
  std::vector<std::uint64_t> lengths(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) lengths[i] = token_count(docs[i].text);

  // Nearest-rank: the value at 1-based rank ceil(p/100 * n) of sorted lengths.
  std::vector<std::uint64_t> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(percentile / 100.0 * static_cast<double>(sorted.size())));
  rank = std::max<std::size_t>(rank, 1);
  const std::uint64_t cutoff = sorted[rank - 1];

  std::vector<Document> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (lengths[i] <= cutoff) out.push_back(docs[i]);
  }
  return out;
}

void stratified_split(std::vector<Document>& docs, double train_ratio, double val_ratio,
                      double test_ratio, std::uint64_t seed) {
  if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");

  // Classes processed in sorted label order for determinism.
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < docs.size(); ++i) by_class[docs[i].effective_label()].push_back(i);

  Rng rng(seed);
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 3)
      throw DataError("class '" + label + "' has fewer than 3 documents (" +
                      std::to_string(idx.size()) + ")");
    rng.shuffle(idx);

    const double n = static_cast<double>(idx.size());
    const double targets[3] = {n * train_ratio, n * val_ratio, n * test_ratio};
    std::size_t counts[3];
    double rem[3];
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      counts[s] = static_cast<std::size_t>(std::floor(targets[s]));
      rem[s] = targets[s] - std::floor(targets[s]);
      assigned += counts[s];
    }
    // Largest remainder; ties favor train, then val, then test.
    while (assigned < idx.size()) {
      int best = 0;
      for (int s = 1; s < 3; ++s) {
        if (rem[s] > rem[best]) best = s;
      }
      ++counts[best];
      rem[best] = -1.0;
      ++assigned;
    }

    std::size_t pos = 0;
    const Split splits[3] = {Split::Train, Split::Val, Split::Test};
    for (int s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < counts[s]; ++k) docs[idx[pos++]].split = splits[s];
    }
  }
}

std::vector<Partition> partition_iid(const std::vector<Document>& train_docs, int n_clients,
                                     std::uint64_t seed) {
  if (n_clients < 1) throw ConfigError("n_clients must be >= 1");
  if (train_docs.size() < static_cast<std::size_t>(n_clients))
    throw DataError("more clients than training documents");

  std::vector<std::size_t> order(train_docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Partition> parts(static_cast<std::size_t>(n_clients));
  for (int c = 0; c < n_clients; ++c) parts[static_cast<std::size_t>(c)].client_id = c;
  for (std::size_t i = 0; i < order.size(); ++i)
    parts[i % static_cast<std::size_t>(n_clients)].example_ids.push_back(
        train_docs[order[i]].id);
  return parts;
}

std::vector<std::pair<std::uint32_t, double>> hash_features(const std::string& text,
                                                            int feature_dim) {
  std::map<std::uint32_t, double> counts;
  for (const std::string& tok : tokenize(text)) {
    std::uint32_t idx = static_cast<std::uint32_t>(fnv1a64(tok.data(), tok.size()) %
                                                   static_cast<std::uint64_t>(feature_dim));
    counts[idx] += 1.0;
  }
  return {counts.begin(), counts.end()};
}

FeaturizedExample featurize_one(const Document& doc, int feature_dim,
                                const std::vector<std::string>& class_order, bool allow_empty) {
  const std::string& label = doc.effective_label();
  auto it = std::find(class_order.begin(), class_order.end(), label);
  if (it == class_order.end())
    throw DataError("label '" + label + "' not in class_order (doc " + doc.id + ")");

  FeaturizedExample ex;
  ex.label = static_cast<int>(it - class_order.begin());
  ex.features = hash_features(doc.text, feature_dim);
  if (ex.features.empty() && !allow_empty)
    throw DataError("document '" + doc.id + "' has no tokens after tokenization");
  return ex;
}

std::vector<FeaturizedExample> featurize(const std::vector<Document>& docs, int feature_dim,
                                         const std::vector<std::string>& class_order,
                                         bool allow_empty) {
  std::vector<FeaturizedExample> out;
  out.reserve(docs.size());
  for (const Document& d : docs) out.push_back(featurize_one(d, feature_dim, class_order, allow_empty));
  return out;
}

}  // namespace fedsim
