#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcl/data.hpp"
#include "mcl/metaobj.hpp"
#include "mcl/nn.hpp"

namespace mcl::exp {

// One externally loaded dataset task ([data] source = files).
struct DatasetTaskSpec {
  std::string name;
  std::string format = "jsonl"; // jsonl | tsv
  std::string path;
  data::TaskKind kind = data::TaskKind::kClassification;
  int num_classes = 2;
  data::Metric metric = data::Metric::kAccuracy;
  // jsonl keys
  std::string text_key = "text";
  std::string pair_key = "text_pair";
  std::string label_key = "label";
  // tsv columns
  int text_col = 0;
  int pair_col = -1;
  int label_col = 1;
  bool has_header = false;
  std::map<std::string, int> label_map;
};

// Flat sectioned key = value config file. Unknown keys are errors.
struct ExperimentConfig {
  meta::Method method = meta::Method::kMamlRep;
  meta::Config train;
  nn::EncoderSpec encoder;
  int head_hidden = 0;

  std::string source = "synthetic"; // synthetic | files
  data::SyntheticSpec synthetic;
  std::vector<DatasetTaskSpec> dataset_tasks;

  static ExperimentConfig load(const std::string& path);
  void validate() const;
};

// Materialize the configured task stream (generation or file loading
// plus splitting).
data::TaskStream build_stream(const ExperimentConfig& cfg);

meta::TrainSetup setup_of(const ExperimentConfig& cfg);

// Command entry points; return a process exit code. On failure they
// remove any partial outputs they created.
int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override);
int cmd_baseline(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override);
int cmd_test(const std::string& config_path, const std::string& checkpoint,
             const std::string& out_dir,
             std::optional<std::uint64_t> seed_override);
int cmd_gradcheck(const std::string& config_path, bool corrupt_gradients);
int cmd_gen_data(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override);
int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_dir);

// Report row shared by cmd_test and cmd_report.
struct ReportRow {
  std::string task;
  std::string metric;
  double immediate = 0.0;
  double final_value = 0.0;
  double delta = 0.0;
};

std::vector<ReportRow> read_report_csv(const std::string& path);

} // namespace mcl::exp
