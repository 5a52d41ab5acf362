#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "mcl/data.hpp"
#include "mcl/tensor.hpp"

using namespace mcl;
using namespace mcl::data;

namespace {

std::filesystem::path temp_file(const std::string& name,
                                const std::string& contents) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream out(p);
  out << contents;
  return p;
}

} // namespace

TEST_CASE("tokenize basics") {
  SUBCASE("pure and stable in its inputs") {
    auto [ids1, m1] = tokenize("Hello world", "", false, 100, 8);
    auto [ids2, m2] = tokenize("hello   WORLD", "", false, 100, 8);
    CHECK(ids1 == ids2); // case and whitespace insensitive
    CHECK(m1 == m2);
    CHECK(ids1.size() == 8);
    CHECK(m1[0] == 1.0);
    CHECK(m1[1] == 1.0);
    CHECK(m1[2] == 0.0);
    CHECK(ids1[2] == 0);
    for (int id : ids1) CHECK((id == 0 || (id >= 2 && id < 100)));
  }
  SUBCASE("same word always hashes to the same id") {
    auto [a, _] = tokenize("cat cat dog cat", "", false, 50, 6);
    CHECK(a[0] == a[1]);
    CHECK(a[0] == a[3]);
    CHECK(a[0] != a[2]);
  }
  SUBCASE("empty text is all padding") {
    auto [ids, mask] = tokenize("", "", false, 100, 5);
    CHECK(std::all_of(ids.begin(), ids.end(), [](int i) { return i == 0; }));
    CHECK(std::all_of(mask.begin(), mask.end(),
                      [](double m) { return m == 0.0; }));
  }
  SUBCASE("sentence pairs are joined by the separator id") {
    auto [ids, mask] = tokenize("a b", "c", true, 100, 8);
    CHECK(ids[2] == 1);
    CHECK(mask[3] == 1.0);
    CHECK(mask[4] == 0.0);
  }
  SUBCASE("long input truncates to max_len") {
    std::string text;
    for (int i = 0; i < 100; ++i) text += "w" + std::to_string(i) + " ";
    auto [ids, mask] = tokenize(text, "", false, 4096, 64);
    CHECK(ids.size() == 64);
    CHECK(std::all_of(mask.begin(), mask.end(),
                      [](double m) { return m == 1.0; }));
  }
  SUBCASE("invalid sizes are errors") {
    CHECK_THROWS_AS(tokenize("a", "", false, 2, 4), Error); // no room to hash
    CHECK_THROWS_AS(tokenize("a", "", false, 100, 0), Error);
  }
}

TEST_CASE("tokenize_batch lays rows out contiguously") {
  std::vector<Sample> samples(2);
  samples[0].text = "one two three";
  samples[1].text = "four";
  TokenBatch tb = tokenize_batch(samples, 100, 5);
  CHECK(tb.batch == 2);
  CHECK(tb.max_len == 5);
  CHECK(tb.ids.size() == 10);
  auto [row0, mask0] = tokenize("one two three", "", false, 100, 5);
  for (int j = 0; j < 5; ++j) {
    CHECK(tb.ids[j] == row0[j]);
    CHECK(tb.mask[j] == mask0[j]);
  }
  CHECK(tb.mask[5] == 1.0);
  CHECK(tb.mask[6] == 0.0);
}

TEST_CASE("synthetic stream structure and determinism") {
  SyntheticSpec spec;
  spec.n_tasks = 3;
  spec.samples_per_task = 60;
  spec.support_size = 16;
  spec.query_size = 14;
  spec.train_size = 20;
  spec.word_types = 120;
  spec.secret_size = 4;

  std::vector<std::vector<std::string>> secrets_a, secrets_b;
  TaskStream a = gen_synthetic_stream(spec, 7, &secrets_a);
  TaskStream b = gen_synthetic_stream(spec, 7, &secrets_b);
  REQUIRE(a.tasks.size() == 3);

  SUBCASE("deterministic in (spec, seed)") {
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(a.tasks[t].support.size() == 16);
      CHECK(a.tasks[t].query.size() == 14);
      CHECK(a.tasks[t].train.size() == 20);
      CHECK(a.tasks[t].eval.size() == 60 - 16 - 14 - 20);
      REQUIRE(a.tasks[t].support.size() == b.tasks[t].support.size());
      for (std::size_t i = 0; i < a.tasks[t].support.size(); ++i) {
        CHECK(a.tasks[t].support[i].text == b.tasks[t].support[i].text);
        CHECK(a.tasks[t].support[i].label == b.tasks[t].support[i].label);
      }
    }
    CHECK(secrets_a == secrets_b);
    TaskStream c = gen_synthetic_stream(spec, 8);
    CHECK(a.tasks[0].support[0].text != c.tasks[0].support[0].text);
  }

  SUBCASE("secret subsets are disjoint across tasks") {
    std::set<std::string> seen;
    for (const auto& sec : secrets_a) {
      CHECK(sec.size() == 4);
      for (const auto& w : sec) CHECK(seen.insert(w).second);
    }
  }

  SUBCASE("labels follow the secret-word oracle at zero noise") {
    for (std::size_t t = 0; t < 3; ++t) {
      const auto& sec = secrets_a[t];
      int pos = 0;
      for (const auto* split :
           {&a.tasks[t].support, &a.tasks[t].query, &a.tasks[t].train,
            &a.tasks[t].eval}) {
        pos = 0;
        for (const Sample& s : *split) {
          bool has_secret = false;
          std::string word;
          std::istringstream in(s.text);
          while (in >> word)
            if (std::find(sec.begin(), sec.end(), word) != sec.end())
              has_secret = true;
          CHECK(s.label == (has_secret ? 1.0 : 0.0));
          pos += static_cast<int>(s.label);
        }
        // exactly balanced splits
        CHECK(pos == static_cast<int>(split->size()) / 2);
      }
    }
  }

  SUBCASE("regression tasks carry sentence pairs with labels in [0,1]") {
    SyntheticSpec rspec = spec;
    rspec.kinds = {TaskKind::kClassification, TaskKind::kRegression};
    TaskStream r = gen_synthetic_stream(rspec, 9);
    CHECK(r.tasks[0].kind == TaskKind::kClassification);
    CHECK(r.tasks[1].kind == TaskKind::kRegression);
    CHECK(r.tasks[2].kind == TaskKind::kClassification);
    CHECK(r.tasks[1].metric == Metric::kPearson);
    bool saw_positive = false;
    for (const Sample& s : r.tasks[1].support) {
      CHECK(s.has_pair);
      CHECK(s.label >= 0.0);
      CHECK(s.label <= 1.0);
      if (s.label > 0.0) saw_positive = true;
    }
    CHECK(saw_positive);
  }

  SUBCASE("invalid specs are rejected") {
    SyntheticSpec bad = spec;
    bad.samples_per_task = 40; // smaller than the splits need
    CHECK_THROWS_AS(gen_synthetic_stream(bad, 1), Error);
    bad = spec;
    bad.secret_size = 100; // 3 * 100 secrets > 120 word types
    CHECK_THROWS_AS(gen_synthetic_stream(bad, 1), Error);
    bad = spec;
    bad.n_tasks = 0;
    CHECK_THROWS_AS(gen_synthetic_stream(bad, 1), Error);
  }
}

TEST_CASE("load_jsonl") {
  SUBCASE("reads texts, pairs, and mapped labels") {
    auto p = temp_file("mcl_test_a.jsonl",
                       R"({"text": "good movie", "label": "pos"}
{"text": "bad movie", "label": "neg"}
)");
    JsonlSchema schema;
    schema.label_map = {{"pos", 1}, {"neg", 0}};
    auto samples = load_jsonl(p.string(), schema);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].text == "good movie");
    CHECK(samples[0].label == 1.0);
    CHECK(samples[1].label == 0.0);
    CHECK_FALSE(samples[0].has_pair);
    std::filesystem::remove(p);
  }
  SUBCASE("numeric labels and pairs") {
    auto p = temp_file(
        "mcl_test_b.jsonl",
        R"({"text": "a b", "text_pair": "c d", "label": 0.75}
)");
    JsonlSchema schema;
    schema.classification = false;
    auto samples = load_jsonl(p.string(), schema);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].has_pair);
    CHECK(samples[0].text_pair == "c d");
    CHECK(samples[0].label == 0.75);
    std::filesystem::remove(p);
  }
  SUBCASE("malformed lines report the line number") {
    auto p = temp_file("mcl_test_c.jsonl",
                       "{\"text\": \"ok\", \"label\": 0}\nnot json\n");
    try {
      load_jsonl(p.string(), JsonlSchema{});
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    std::filesystem::remove(p);
  }
  SUBCASE("missing file is an error") {
    CHECK_THROWS_AS(load_jsonl("/nonexistent/x.jsonl", JsonlSchema{}), Error);
  }
  SUBCASE("unmapped string label is an error") {
    auto p = temp_file("mcl_test_d.jsonl",
                       "{\"text\": \"x\", \"label\": \"maybe\"}\n");
    JsonlSchema schema;
    schema.label_map = {{"pos", 1}, {"neg", 0}};
    CHECK_THROWS_AS(load_jsonl(p.string(), schema), Error);
    std::filesystem::remove(p);
  }
}

TEST_CASE("load_tsv") {
  SUBCASE("entailment-style pair file with header") {
    auto p = temp_file("mcl_test_e.tsv",
                       "premise\thypothesis\tgold\n"
                       "the cat sat\ta cat was sitting\tentailment\n"
                       "the cat sat\tthe dog ran\tnot_entailment\n");
    TsvSpec spec;
    spec.text_col = 0;
    spec.pair_col = 1;
    spec.label_col = 2;
    spec.has_header = true;
    spec.label_map = {{"entailment", 0}, {"not_entailment", 1}};
    auto samples = load_tsv(p.string(), spec);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].text == "the cat sat");
    CHECK(samples[0].text_pair == "a cat was sitting");
    CHECK(samples[0].has_pair);
    CHECK(samples[0].label == 0.0);
    CHECK(samples[1].label == 1.0);
    std::filesystem::remove(p);
  }
  SUBCASE("regression column and single sentence") {
    auto p = temp_file("mcl_test_f.tsv", "happy text\t4.2\nsad text\t0.5\n");
    TsvSpec spec;
    spec.classification = false;
    auto samples = load_tsv(p.string(), spec);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].label == 4.2);
    CHECK_FALSE(samples[0].has_pair);
    std::filesystem::remove(p);
  }
  SUBCASE("short rows report the line number") {
    auto p = temp_file("mcl_test_g.tsv", "a\t1\nonly-one-column\n");
    try {
      load_tsv(p.string(), TsvSpec{});
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    std::filesystem::remove(p);
  }
}

TEST_CASE("split_support_query is disjoint, sized, and seeded") {
  std::vector<Sample> pool(50);
  for (int i = 0; i < 50; ++i) pool[i].text = "s" + std::to_string(i);
  auto [sup, qry] = split_support_query(pool, 30, 15, 3);
  CHECK(sup.size() == 30);
  CHECK(qry.size() == 15);
  std::set<std::string> seen;
  for (const auto& s : sup) CHECK(seen.insert(s.text).second);
  for (const auto& s : qry) CHECK(seen.insert(s.text).second);

  auto [sup2, qry2] = split_support_query(pool, 30, 15, 3);
  for (std::size_t i = 0; i < sup.size(); ++i)
    CHECK(sup[i].text == sup2[i].text);
  auto [sup3, qry3] = split_support_query(pool, 30, 15, 4);
  bool differs = false;
  for (std::size_t i = 0; i < sup.size(); ++i)
    if (sup[i].text != sup3[i].text) differs = true;
  CHECK(differs);

  CHECK_THROWS_AS(split_support_query(pool, 40, 15, 1), Error); // 55 > 50
}
