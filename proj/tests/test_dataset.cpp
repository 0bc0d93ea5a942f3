#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

Document doc(const std::string& id, const std::string& text, const std::string& label) {
  return Document{id, text, label, std::nullopt, std::nullopt};
}

std::vector<Document> docs_with_labels(const std::map<std::string, int>& counts) {
  std::vector<Document> out;
  int n = 0;
  for (const auto& [label, count] : counts) {
    for (int i = 0; i < count; ++i) out.push_back(doc("d" + std::to_string(n++), "some text", label));
  }
  return out;
}

}  // namespace

TEST_CASE("load_corpus: jsonl happy path and empty-text warning") {
  auto p = temp_file("corpus1.jsonl",
                     R"({"id":"a","text":"hello world","label":"x"})"
                     "\n"
                     R"({"id":"b","text":"   ","label":"x"})"
                     "\n"
                     R"({"id":"c","text":"more text","label":"y"})"
                     "\n");
  CorpusLoad load = load_corpus(p.string(), CorpusFormat::Jsonl);
  CHECK(load.docs.size() == 2);
  CHECK(load.empty_text_warnings == 1);
  CHECK(load.docs[0].id == "a");
  CHECK(load.docs[1].raw_label == "y");
}

TEST_CASE("load_corpus: duplicate id and malformed line report position") {
  auto p = temp_file("corpus2.jsonl",
                     R"({"id":"a","text":"one","label":"x"})"
                     "\n"
                     R"({"id":"a","text":"two","label":"x"})"
                     "\n");
  CHECK_THROWS_WITH_AS(load_corpus(p.string(), CorpusFormat::Jsonl),
                       doctest::Contains(":2"), DataError);

  auto q = temp_file("corpus3.jsonl", "{not json}\n");
  CHECK_THROWS_AS(load_corpus(q.string(), CorpusFormat::Jsonl), DataError);
}

TEST_CASE("load_corpus: csv with quoted commas and newlines survives round-trip") {
  const std::string text = "hello, \"world\",\nsecond line";
  std::string quoted = "\"hello, \"\"world\"\",\nsecond line\"";
  auto p = temp_file("corpus4.csv", "id,text,label\n1," + quoted + ",x\n2,plain,y\n");
  CorpusLoad load = load_corpus(p.string(), CorpusFormat::Csv);
  REQUIRE(load.docs.size() == 2);
  CHECK(load.docs[0].text == text);
  CHECK(load.docs[1].text == "plain");
}

TEST_CASE("load_corpus: csv header enforced") {
  auto p = temp_file("corpus5.csv", "text,id,label\na,b,c\n");
  CHECK_THROWS_AS(load_corpus(p.string(), CorpusFormat::Csv), DataError);
}

TEST_CASE("apply_schema: drops, merges, uncovered labels") {
  LabelSchema schema;
  schema.merges = {{"a", "x"}, {"b", "x"}, {"c", "c"}};
  schema.drops = {"abusive"};
  schema.class_order = {"x", "c"};

  std::vector<Document> docs;
  for (int i = 0; i < 3; ++i) docs.push_back(doc("a" + std::to_string(i), "t", "a"));
  for (int i = 0; i < 2; ++i) docs.push_back(doc("b" + std::to_string(i), "t", "b"));
  for (int i = 0; i < 2; ++i) docs.push_back(doc("ab" + std::to_string(i), "t", "abusive"));
  docs.push_back(doc("c0", "t", "c"));

  auto out = apply_schema(docs, schema);
  CHECK(out.size() == 6);  // 2 dropped
  int x_count = 0;
  for (const auto& d : out)
    if (*d.merged_label == "x") ++x_count;
  CHECK(x_count == 5);

  docs.push_back(doc("z", "t", "unknown"));
  CHECK_THROWS_AS(apply_schema(docs, schema), DataError);
}

TEST_CASE("apply_schema: identity keeps the label multiset") {
  auto docs = docs_with_labels({{"p", 4}, {"q", 2}});
  auto schema = LabelSchema::identity({"p", "q"});
  auto out = apply_schema(docs, schema);
  CHECK(out.size() == 6);
  for (const auto& d : out) CHECK(*d.merged_label == d.raw_label);
}

TEST_CASE("tokenize: case folding, splitting, unicode bytes") {
  auto toks = tokenize("A a b");
  REQUIRE(toks.size() == 3);
  CHECK(toks[0] == "a");
  CHECK(toks[1] == "a");
  CHECK(toks[2] == "b");
  CHECK(tokenize("Hello, WORLD!!x2") == std::vector<std::string>{"hello", "world", "x2"});
  CHECK(tokenize("   ").empty());
  CHECK(tokenize("caf\xc3\xa9 time") == std::vector<std::string>{"caf\xc3\xa9", "time"});
}

TEST_CASE("filter_longest_percentile: rank arithmetic") {
  std::vector<Document> docs;
  for (int len = 1; len <= 100; ++len) {
    std::string text;
    for (int t = 0; t < len; ++t) text += "w ";
    docs.push_back(doc("d" + std::to_string(len), text, "x"));
  }
  auto out = filter_longest_percentile(docs, 99.0);
  CHECK(out.size() == 99);
  std::uint64_t max_len = 0;
  for (const auto& d : out) max_len = std::max(max_len, token_count(d.text));
  CHECK(max_len == 99);
}

TEST_CASE("filter_longest_percentile: equal lengths remove nothing") {
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) docs.push_back(doc("d" + std::to_string(i), "a b c", "x"));
  CHECK(filter_longest_percentile(docs, 90.0).size() == 10);
}

TEST_CASE("filter_longest_percentile: heavy tail clipped") {
  std::vector<Document> docs;
  Rng rng(5);
  for (int i = 0; i < 990; ++i) {
    std::string text;
    int len = 1 + static_cast<int>(rng.below(30));
    for (int t = 0; t < len; ++t) text += "w ";
    docs.push_back(doc("s" + std::to_string(i), text, "x"));
  }
  for (int i = 0; i < 10; ++i) {
    std::string text;
    for (int t = 0; t < 5000; ++t) text += "w ";
    docs.push_back(doc("l" + std::to_string(i), text, "x"));
  }
  auto out = filter_longest_percentile(docs, 99.0);
  for (const auto& d : out) CHECK(token_count(d.text) <= 30);
}

TEST_CASE("filter_longest_percentile: empty input rejected") {
  std::vector<Document> empty;
  CHECK_THROWS_AS(filter_longest_percentile(empty, 99.0), DataError);
}

TEST_CASE("stratified_split: exact and proportional splits") {
  auto docs = docs_with_labels({{"only", 100}});
  stratified_split(docs, 0.70, 0.10, 0.20, 1);
  std::map<Split, int> counts;
  for (const auto& d : docs) ++counts[*d.split];
  CHECK(counts[Split::Train] == 70);
  CHECK(counts[Split::Val] == 10);
  CHECK(counts[Split::Test] == 20);

  auto two = docs_with_labels({{"a", 60}, {"b", 40}});
  stratified_split(two, 0.70, 0.10, 0.20, 1);
  std::map<std::string, std::map<Split, int>> per;
  for (const auto& d : two) ++per[d.raw_label][*d.split];
  CHECK(per["a"][Split::Train] == 42);
  CHECK(per["a"][Split::Val] == 6);
  CHECK(per["a"][Split::Test] == 12);
  CHECK(per["b"][Split::Train] == 28);
  CHECK(per["b"][Split::Val] == 4);
  CHECK(per["b"][Split::Test] == 8);
}

TEST_CASE("stratified_split: 97 docs round within one of targets") {
  auto docs = docs_with_labels({{"only", 97}});
  stratified_split(docs, 0.70, 0.10, 0.20, 3);
  std::map<Split, int> counts;
  for (const auto& d : docs) ++counts[*d.split];
  CHECK(counts[Split::Train] + counts[Split::Val] + counts[Split::Test] == 97);
  CHECK(std::abs(counts[Split::Train] - 67.9) <= 1.0);
  CHECK(std::abs(counts[Split::Val] - 9.7) <= 1.0);
  CHECK(std::abs(counts[Split::Test] - 19.4) <= 1.0);
}

TEST_CASE("stratified_split: tiny class and bad ratios rejected") {
  auto docs = docs_with_labels({{"a", 10}, {"b", 2}});
  CHECK_THROWS_AS(stratified_split(docs, 0.70, 0.10, 0.20, 1), DataError);
  auto ok = docs_with_labels({{"a", 10}});
  CHECK_THROWS_AS(stratified_split(ok, 0.5, 0.1, 0.2, 1), ConfigError);
}

TEST_CASE("stratified_split: deterministic under seed") {
  auto a = docs_with_labels({{"p", 37}, {"q", 23}});
  auto b = a;
  stratified_split(a, 0.70, 0.10, 0.20, 12345);
  stratified_split(b, 0.70, 0.10, 0.20, 12345);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].split == *b[i].split);
}

TEST_CASE("partition_iid: sizes and disjointness") {
  auto docs = docs_with_labels({{"x", 103}});
  auto parts = partition_iid(docs, 10, 7);
  REQUIRE(parts.size() == 10);
  int elevens = 0, tens = 0;
  std::set<std::string> seen;
  for (const auto& p : parts) {
    if (p.example_ids.size() == 11) ++elevens;
    if (p.example_ids.size() == 10) ++tens;
    for (const auto& id : p.example_ids) CHECK(seen.insert(id).second);
  }
  CHECK(elevens == 3);
  CHECK(tens == 7);
  CHECK(seen.size() == 103);

  auto tiny = docs_with_labels({{"x", 10}});
  auto singles = partition_iid(tiny, 10, 0);
  for (const auto& p : singles) CHECK(p.example_ids.size() == 1);

  CHECK_THROWS_AS(partition_iid(tiny, 11, 0), DataError);
}

TEST_CASE("partition_iid: per-client class balance stays sane") {
  // 1000 docs at a 9:1 class ratio over 100 clients: no client should see a
  // wildly skewed positive fraction under any of 20 seeds.
  auto docs = docs_with_labels({{"neg", 900}, {"pos", 100}});
  for (std::uint64_t seed = 82; seed < 102; ++seed) {
    auto parts = partition_iid(docs, 100, seed);
    for (const auto& p : parts) {
      int pos = 0;
      for (const auto& id : p.example_ids) {
        // ids d900..d999 carry the "pos" label (docs_with_labels orders by label)
        if (std::stoi(id.substr(1)) >= 900) ++pos;
      }
      double frac = static_cast<double>(pos) / static_cast<double>(p.example_ids.size());
      CHECK(frac <= 0.4);
    }
  }
}

TEST_CASE("featurize: counting, hashing determinism, degenerate input") {
  Document d = doc("1", "A a b", "x");
  d.merged_label = "x";
  auto ex = featurize_one(d, 1024, {"x", "y"}, false);
  REQUIRE(ex.features.size() == 2);
  double max_count = 0;
  for (const auto& [idx, cnt] : ex.features) max_count = std::max(max_count, cnt);
  CHECK(max_count == 2.0);  // "a" appears twice after case folding
  CHECK(ex.label == 0);

  auto again = featurize_one(d, 1024, {"x", "y"}, false);
  CHECK(again.features == ex.features);

  Document empty = doc("2", "!!!", "x");
  empty.merged_label = "x";
  CHECK_THROWS_AS(featurize_one(empty, 1024, {"x"}, false), DataError);
  auto allowed = featurize_one(empty, 1024, {"x"}, true);
  CHECK(allowed.features.empty());

  Document bad = doc("3", "words here", "z");
  bad.merged_label = "z";
  CHECK_THROWS_AS(featurize_one(bad, 1024, {"x", "y"}, false), DataError);
}

TEST_CASE("fnv1a64 hashing is the published function") {
  // Known FNV-1a test vectors
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("schema and mapping json loaders") {
  auto sp = temp_file("schema1.json",
                      R"({"merges":{"a":"x","b":"x"},"drops":["junk"],"class_order":["x"]})");
  LabelSchema s = LabelSchema::load(sp.string());
  CHECK(s.merges.size() == 2);
  CHECK(s.drops.count("junk") == 1);
  CHECK(s.class_index("x") == 0);
  CHECK(s.class_index("nope") == -1);

  auto bad = temp_file("schema2.json",
                       R"({"merges":{"a":"zz"},"drops":[],"class_order":["x"]})");
  CHECK_THROWS_AS(LabelSchema::load(bad.string()), ConfigError);

  auto mp = temp_file("mapping1.json",
                      R"({"hate_labels":["x"],"nothate_labels":["none"]})");
  BinaryMapping m = BinaryMapping::load(mp.string());
  CHECK(m.is_hate("x"));
  CHECK_FALSE(m.is_hate("none"));
  m.validate_covers({"x", "none"});
  CHECK_THROWS_AS(m.validate_covers({"x", "missing"}), ConfigError);
}
