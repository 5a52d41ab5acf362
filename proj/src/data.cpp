#include "mcl/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mcl/rng.hpp"
#include "mcl/tensor.hpp" // Error

namespace mcl::data {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

int hash_token(const std::string& token, int vocab_size) {
  return 2 + static_cast<int>(rng::mix(fnv1a(token)) %
                              static_cast<std::uint64_t>(vocab_size - 2));
}

} // namespace

std::pair<std::vector<int>, std::vector<double>> tokenize(
    const std::string& text, const std::string& text_pair, bool has_pair,
    int vocab_size, int max_len) {
  if (max_len < 1) throw Error("tokenize: max_len must be >= 1");
  if (vocab_size <= 2) throw Error("tokenize: vocab_size must be > 2");
  std::vector<int> ids;
  for (const auto& w : split_words(text))
    ids.push_back(hash_token(w, vocab_size));
  if (has_pair) {
    ids.push_back(1); // separator
    for (const auto& w : split_words(text_pair))
      ids.push_back(hash_token(w, vocab_size));
  }
  if (static_cast<int>(ids.size()) > max_len) ids.resize(max_len);
  std::vector<double> mask(max_len, 0.0);
  std::fill(mask.begin(), mask.begin() + ids.size(), 1.0);
  ids.resize(max_len, 0);
  return {std::move(ids), std::move(mask)};
}

TokenBatch tokenize_batch(std::span<const Sample> samples, int vocab_size,
                          int max_len) {
  TokenBatch out;
  out.batch = static_cast<int>(samples.size());
  out.max_len = max_len;
  out.ids.reserve(samples.size() * max_len);
  out.mask.reserve(samples.size() * max_len);
  for (const auto& s : samples) {
    auto [ids, mask] = tokenize(s.text, s.text_pair, s.has_pair, vocab_size,
                                max_len);
    out.ids.insert(out.ids.end(), ids.begin(), ids.end());
    out.mask.insert(out.mask.end(), mask.begin(), mask.end());
  }
  return out;
}

// ------------------------------------------------------- synthetic data

namespace {

std::string word_name(int i) { return "w" + std::to_string(i); }

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::vector<Sample> gen_classification_split(
    int n, const std::vector<std::string>& secret,
    const std::vector<std::string>& common, const SyntheticSpec& spec,
    rng::Stream& rng) {
  // Exactly half the samples positive, order shuffled, so every split
  // is balanced before noise.
  std::vector<int> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + n / 2, 1);
  for (int i = n - 1; i > 0; --i)
    std::swap(labels[i], labels[rng.below(i + 1)]);
  std::vector<Sample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int len =
        spec.min_len + static_cast<int>(rng.below(spec.max_len - spec.min_len + 1));
    std::vector<std::string> words(len);
    for (auto& w : words) w = common[rng.below(common.size())];
    if (labels[i] == 1) {
      const int n_ins = 1 + static_cast<int>(rng.below(3));
      for (int k = 0; k < n_ins; ++k)
        words[rng.below(words.size())] = secret[rng.below(secret.size())];
    }
    Sample s;
    s.text = join(words);
    s.label = labels[i];
    if (spec.noise_rate > 0.0 && rng.uniform01() < spec.noise_rate)
      s.label = 1.0 - s.label;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> gen_regression_split(int n,
                                         const std::vector<std::string>& common,
                                         const SyntheticSpec& spec,
                                         rng::Stream& rng) {
  std::vector<Sample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int len =
        spec.min_len + static_cast<int>(rng.below(spec.max_len - spec.min_len + 1));
    std::vector<std::string> first(len);
    for (auto& w : first) w = common[rng.below(common.size())];
    const double keep = rng.uniform01();
    std::vector<std::string> second;
    for (const auto& w : first)
      if (rng.uniform01() < keep) second.push_back(w);
    while (static_cast<int>(second.size()) < len)
      second.push_back(common[rng.below(common.size())]);
    std::set<std::string> sa(first.begin(), first.end());
    std::set<std::string> sb(second.begin(), second.end());
    std::vector<std::string> inter, uni;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::back_inserter(inter));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(),
                   std::back_inserter(uni));
    Sample s;
    s.text = join(first);
    s.text_pair = join(second);
    s.has_pair = true;
    s.label = static_cast<double>(inter.size()) / static_cast<double>(uni.size());
    if (spec.noise_rate > 0.0)
      s.label += (rng.uniform01() - 0.5) * spec.noise_rate;
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace

TaskStream gen_synthetic_stream(
    const SyntheticSpec& spec, std::uint64_t seed,
    std::vector<std::vector<std::string>>* secrets_out) {
  if (spec.n_tasks < 1) throw Error("gen_synthetic_stream: n_tasks must be >= 1");
  const int reserved = spec.n_tasks * spec.secret_size;
  if (spec.word_types < reserved + 30)
    throw Error("gen_synthetic_stream: word_types " +
                std::to_string(spec.word_types) +
                " too small for " + std::to_string(spec.n_tasks) +
                " disjoint secret subsets of size " +
                std::to_string(spec.secret_size));
  const int eval_size = spec.samples_per_task - spec.support_size -
                        spec.query_size - spec.train_size;
  if (eval_size < 10)
    throw Error("gen_synthetic_stream: samples_per_task " +
                std::to_string(spec.samples_per_task) +
                " leaves fewer than 10 eval samples");
  std::vector<std::string> common;
  for (int i = reserved; i < spec.word_types; ++i)
    common.push_back(word_name(i));

  TaskStream stream;
  stream.phase = Phase::kMetaTrain;
  if (secrets_out) secrets_out->clear();
  for (int t = 0; t < spec.n_tasks; ++t) {
    Task task;
    task.id = "task" + std::to_string(t);
    task.kind = spec.kinds.empty() ? TaskKind::kClassification
                                   : spec.kinds[t % spec.kinds.size()];
    std::vector<std::string> secret;
    if (task.kind == TaskKind::kClassification) {
      task.num_classes = 2;
      task.metric = Metric::kAccuracy;
      for (int k = 0; k < spec.secret_size; ++k)
        secret.push_back(word_name(t * spec.secret_size + k));
    } else {
      task.metric = Metric::kPearson;
    }
    if (secrets_out) secrets_out->push_back(secret);

    const int sizes[4] = {spec.support_size, spec.query_size, spec.train_size,
                          eval_size};
    std::vector<Sample>* splits[4] = {&task.support, &task.query, &task.train,
                                      &task.eval};
    for (int s = 0; s < 4; ++s) {
      rng::Stream rng(rng::derive(seed, 0xda7a0 + t, s));
      *splits[s] =
          task.kind == TaskKind::kClassification
              ? gen_classification_split(sizes[s], secret, common, spec, rng)
              : gen_regression_split(sizes[s], common, spec, rng);
    }
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

// --------------------------------------------------------- file loading

std::vector<Sample> load_jsonl(const std::string& path,
                               const JsonlSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("load_jsonl: cannot open " + path);
  std::vector<Sample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw Error("load_jsonl: " + where + ": malformed JSON: " + e.what());
    }
    if (!obj.contains(schema.text_key))
      throw Error("load_jsonl: " + where + ": missing field '" +
                  schema.text_key + "'");
    Sample s;
    s.text = obj.at(schema.text_key).get<std::string>();
    if (obj.contains(schema.pair_key) && !obj.at(schema.pair_key).is_null()) {
      s.text_pair = obj.at(schema.pair_key).get<std::string>();
      s.has_pair = true;
    }
    if (!obj.contains(schema.label_key))
      throw Error("load_jsonl: " + where + ": missing field '" +
                  schema.label_key + "'");
    const auto& lab = obj.at(schema.label_key);
    if (lab.is_string()) {
      auto it = schema.label_map.find(lab.get<std::string>());
      if (it == schema.label_map.end())
        throw Error("load_jsonl: " + where + ": unknown label '" +
                    lab.get<std::string>() + "'");
      s.label = it->second;
    } else if (lab.is_number()) {
      s.label = lab.get<double>();
    } else {
      throw Error("load_jsonl: " + where + ": label must be string or number");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> load_tsv(const std::string& path, const TsvSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error("load_tsv: cannot open " + path);
  std::vector<Sample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (spec.has_header && lineno == 1) continue;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const int need = std::max({spec.text_col, spec.pair_col, spec.label_col});
    if (static_cast<int>(cols.size()) <= need)
      throw Error("load_tsv: " + where + ": only " +
                  std::to_string(cols.size()) + " columns, need " +
                  std::to_string(need + 1));
    Sample s;
    s.text = cols[spec.text_col];
    if (spec.pair_col >= 0) {
      s.text_pair = cols[spec.pair_col];
      s.has_pair = true;
    }
    const std::string& lab = cols[spec.label_col];
    if (spec.classification && !spec.label_map.empty()) {
      auto it = spec.label_map.find(lab);
      if (it == spec.label_map.end())
        throw Error("load_tsv: " + where + ": unknown label '" + lab + "'");
      s.label = it->second;
    } else {
      try {
        std::size_t used = 0;
        s.label = std::stod(lab, &used);
        if (used != lab.size()) throw std::invalid_argument(lab);
      } catch (const std::exception&) {
        throw Error("load_tsv: " + where + ": unparseable label '" + lab + "'");
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_support_query(
    const std::vector<Sample>& samples, int n_support, int n_query,
    std::uint64_t seed) {
  if (n_support < 0 || n_query < 0 ||
      n_support + n_query > static_cast<int>(samples.size()))
    throw Error("split_support_query: need " +
                std::to_string(n_support + n_query) + " samples, have " +
                std::to_string(samples.size()));
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng::Stream rng(rng::derive(seed, 0x5971e7));
  for (std::size_t i = idx.size() - 1; i > 0; --i)
    std::swap(idx[i], idx[rng.below(i + 1)]);
  std::vector<Sample> support, query;
  for (int i = 0; i < n_support; ++i) support.push_back(samples[idx[i]]);
  for (int i = 0; i < n_query; ++i)
    query.push_back(samples[idx[n_support + i]]);
  return {std::move(support), std::move(query)};
}

} // namespace mcl::data
