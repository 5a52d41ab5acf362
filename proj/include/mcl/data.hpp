#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mcl::data {

struct Sample {
  std::string text;
  std::string text_pair; // sentence-pair tasks only
  bool has_pair = false;
  double label = 0.0; // class id for classification, target for regression
};

enum class TaskKind { kClassification, kRegression };
enum class Metric { kAccuracy, kMatthews, kPearson };

struct Task {
  std::string id;
  TaskKind kind = TaskKind::kClassification;
  int num_classes = 2;
  Metric metric = Metric::kAccuracy;
  std::vector<Sample> support; // inner-loop adaptation (meta-training)
  std::vector<Sample> query;   // outer-loop evaluation (meta-training)
  std::vector<Sample> train;   // fine-tuning data (meta-testing)
  std::vector<Sample> eval;    // held-out metric data (meta-testing)
};

enum class Phase { kMetaTrain, kMetaTest };

struct TaskStream {
  std::vector<Task> tasks;
  Phase phase = Phase::kMetaTrain;
};

// Token ids and mask for a batch, row-major [batch x max_len].
// id 0 = pad, id 1 = separator between the texts of a pair; real
// tokens hash into [2, vocab_size).
struct TokenBatch {
  int batch = 0;
  int max_len = 0;
  std::vector<int> ids;
  std::vector<double> mask;
};

// Lowercased whitespace tokenization with stable hashing. Pure in
// (text, vocab_size, max_len); empty text yields all-pad.
std::pair<std::vector<int>, std::vector<double>> tokenize(
    const std::string& text, const std::string& text_pair, bool has_pair,
    int vocab_size, int max_len);

TokenBatch tokenize_batch(std::span<const Sample> samples, int vocab_size,
                          int max_len);

struct SyntheticSpec {
  int n_tasks = 4;
  int samples_per_task = 400;
  int word_types = 200;  // distinct surface words in the generator
  double noise_rate = 0.0;
  std::vector<TaskKind> kinds; // cycled over tasks; empty = all classification
  int support_size = 128;
  int query_size = 112;
  int train_size = 100; // eval split gets the remainder
  int min_len = 8;
  int max_len = 20;
  int secret_size = 6; // words in each task's secret subset
};

// Synthetic task stream. Each classification task labels a sequence
// positive iff it contains a word from that task's secret subset;
// subsets are disjoint across tasks. Regression tasks score the token
// overlap of a sentence pair. Deterministic in (spec, seed).
// If `secrets_out` is given it receives each task's secret words
// (empty for regression tasks), for use by oracle checks.
TaskStream gen_synthetic_stream(
    const SyntheticSpec& spec, std::uint64_t seed,
    std::vector<std::vector<std::string>>* secrets_out = nullptr);

struct JsonlSchema {
  std::string text_key = "text";
  std::string pair_key = "text_pair";
  std::string label_key = "label";
  bool classification = true;
  // Optional string label -> class id mapping for classification.
  std::map<std::string, int> label_map;
};

std::vector<Sample> load_jsonl(const std::string& path,
                               const JsonlSchema& schema);

struct TsvSpec {
  int text_col = 0;
  int pair_col = -1; // -1 = single-sentence task
  int label_col = 1;
  bool has_header = false;
  bool classification = true;
  std::map<std::string, int> label_map;
};

std::vector<Sample> load_tsv(const std::string& path, const TsvSpec& spec);

// Disjoint seeded sampling without replacement.
std::pair<std::vector<Sample>, std::vector<Sample>> split_support_query(
    const std::vector<Sample>& samples, int n_support, int n_query,
    std::uint64_t seed);

} // namespace mcl::data
