#include "mcl/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mcl/checkpoint.hpp"
#include "mcl/evalcl.hpp"
#include "mcl/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace mcl::exp {

namespace {

// ------------------------------------------------------------- parsing

struct IniEntry {
  std::string section, key, value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<IniEntry> parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  std::vector<IniEntry> entries;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw Error("config: " + path + ":" + std::to_string(lineno) +
                    ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("config: " + path + ":" + std::to_string(lineno) +
                  ": expected key = value");
    entries.push_back({section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)),
                       lineno});
  }
  return entries;
}

[[noreturn]] void bad_entry(const std::string& path, const IniEntry& e,
                            const std::string& why) {
  throw Error("config: " + path + ":" + std::to_string(e.line) + ": " + why +
              " ('" + e.section + "." + e.key + " = " + e.value + "')");
}

int to_int(const std::string& path, const IniEntry& e) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    bad_entry(path, e, "expected an integer");
  }
}

double to_double(const std::string& path, const IniEntry& e) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    bad_entry(path, e, "expected a number");
  }
}

bool to_bool(const std::string& path, const IniEntry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  bad_entry(path, e, "expected true or false");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

data::TaskKind parse_kind(const std::string& path, const IniEntry& e) {
  if (e.value == "classification") return data::TaskKind::kClassification;
  if (e.value == "regression") return data::TaskKind::kRegression;
  bad_entry(path, e, "expected classification or regression");
}

data::Metric parse_metric(const std::string& path, const IniEntry& e) {
  if (e.value == "accuracy") return data::Metric::kAccuracy;
  if (e.value == "matthews") return data::Metric::kMatthews;
  if (e.value == "pearson") return data::Metric::kPearson;
  bad_entry(path, e, "expected accuracy, matthews or pearson");
}

// ----------------------------------------------------------- filesystem

// Removes everything it registered unless committed; keeps failed runs
// from leaving partial outputs behind.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it)
      fs::remove(*it, ec);
  }
  void track(const fs::path& p) { files_.push_back(p); }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> files_;
  bool committed_ = false;
};

std::string dstr(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string dfix(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void write_text(OutputGuard& guard, const fs::path& p, const std::string& s) {
  guard.track(p);
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
  if (!out) throw Error("write failed for " + p.string());
}

} // namespace

// ------------------------------------------------------- config loading

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  ExperimentConfig cfg;
  const auto entries = parse_ini(path);

  // Pre-pass: task list so per-task keys can be validated.
  std::vector<std::string> task_names;
  for (const auto& e : entries)
    if (e.section == "data" && e.key == "tasks") task_names = split_csv(e.value);
  std::map<std::string, DatasetTaskSpec> task_specs;
  for (const auto& n : task_names) {
    DatasetTaskSpec s;
    s.name = n;
    task_specs[n] = s;
  }

  for (const auto& e : entries) {
    if (e.section == "experiment") {
      if (e.key == "method") {
        if (e.value == "maml_rep") cfg.method = meta::Method::kMamlRep;
        else if (e.value == "oml") cfg.method = meta::Method::kOml;
        else if (e.value == "sequential") cfg.method = meta::Method::kSequential;
        else bad_entry(path, e, "expected maml_rep, oml or sequential");
      } else if (e.key == "seed") {
        cfg.train.seed = static_cast<std::uint64_t>(to_int(path, e));
      } else {
        bad_entry(path, e, "unknown key");
      }
    } else if (e.section == "model") {
      if (e.key == "vocab_size") cfg.encoder.vocab_size = to_int(path, e);
      else if (e.key == "embed_dim") cfg.encoder.embed_dim = to_int(path, e);
      else if (e.key == "hidden_dims") {
        cfg.encoder.hidden_dims.clear();
        for (const auto& d : split_csv(e.value))
          cfg.encoder.hidden_dims.push_back(
              to_int(path, {e.section, e.key, d, e.line}));
      } else if (e.key == "max_len") cfg.encoder.max_len = to_int(path, e);
      else if (e.key == "dropout") cfg.encoder.dropout_rate = to_double(path, e);
      else if (e.key == "head_hidden") cfg.head_hidden = to_int(path, e);
      else bad_entry(path, e, "unknown key");
    } else if (e.section == "train") {
      auto& t = cfg.train;
      if (e.key == "inner_lr") t.inner_lr = to_double(path, e);
      else if (e.key == "outer_lr") t.outer_lr = to_double(path, e);
      else if (e.key == "outer_lr_min") t.outer_lr_min = to_double(path, e);
      else if (e.key == "inner_steps_train") t.inner_steps_train = to_int(path, e);
      else if (e.key == "inner_steps_test") t.inner_steps_test = to_int(path, e);
      else if (e.key == "batch_size") t.batch_size = to_int(path, e);
      else if (e.key == "support_size") t.support_size = to_int(path, e);
      else if (e.key == "query_size") t.query_size = to_int(path, e);
      else if (e.key == "test_train_size") t.test_train_size = to_int(path, e);
      else if (e.key == "meta_epochs") t.meta_epochs = to_int(path, e);
      else if (e.key == "grad_mode") {
        if (e.value == "first_order") t.grad_mode = meta::GradMode::kFirstOrder;
        else if (e.value == "exact_fd") t.grad_mode = meta::GradMode::kExactFd;
        else bad_entry(path, e, "expected first_order or exact_fd");
      } else if (e.key == "fd_epsilon") t.fd_epsilon = to_double(path, e);
      else if (e.key == "fd_coord_budget")
        t.fd_coord_budget = static_cast<std::size_t>(to_int(path, e));
      else if (e.key == "inner_optimizer") {
        if (e.value == "sgd") t.inner_optimizer = meta::InnerOpt::kSgd;
        else if (e.value == "adam") t.inner_optimizer = meta::InnerOpt::kAdam;
        else bad_entry(path, e, "expected sgd or adam");
      } else bad_entry(path, e, "unknown key");
    } else if (e.section == "data") {
      auto& s = cfg.synthetic;
      if (e.key == "source") {
        if (e.value != "synthetic" && e.value != "files")
          bad_entry(path, e, "expected synthetic or files");
        cfg.source = e.value;
      } else if (e.key == "n_tasks") s.n_tasks = to_int(path, e);
      else if (e.key == "samples_per_task") s.samples_per_task = to_int(path, e);
      else if (e.key == "word_types") s.word_types = to_int(path, e);
      else if (e.key == "noise_rate") s.noise_rate = to_double(path, e);
      else if (e.key == "min_len") s.min_len = to_int(path, e);
      else if (e.key == "max_len") s.max_len = to_int(path, e);
      else if (e.key == "secret_size") s.secret_size = to_int(path, e);
      else if (e.key == "kinds") {
        s.kinds.clear();
        for (const auto& k : split_csv(e.value))
          s.kinds.push_back(parse_kind(path, {e.section, e.key, k, e.line}));
      } else if (e.key == "tasks") {
        // handled in the pre-pass
      } else {
        const auto dot = e.key.find('.');
        if (dot == std::string::npos) bad_entry(path, e, "unknown key");
        const std::string tname = e.key.substr(0, dot);
        const std::string sub = e.key.substr(dot + 1);
        auto it = task_specs.find(tname);
        if (it == task_specs.end())
          bad_entry(path, e, "task '" + tname + "' not listed in data.tasks");
        auto& ts = it->second;
        if (sub == "format") {
          if (e.value != "jsonl" && e.value != "tsv")
            bad_entry(path, e, "expected jsonl or tsv");
          ts.format = e.value;
        } else if (sub == "path") ts.path = e.value;
        else if (sub == "kind") ts.kind = parse_kind(path, e);
        else if (sub == "num_classes") ts.num_classes = to_int(path, e);
        else if (sub == "metric") ts.metric = parse_metric(path, e);
        else if (sub == "text_key") ts.text_key = e.value;
        else if (sub == "pair_key") ts.pair_key = e.value;
        else if (sub == "label_key") ts.label_key = e.value;
        else if (sub == "text_col") ts.text_col = to_int(path, e);
        else if (sub == "pair_col") ts.pair_col = to_int(path, e);
        else if (sub == "label_col") ts.label_col = to_int(path, e);
        else if (sub == "has_header") ts.has_header = to_bool(path, e);
        else if (sub == "labels") {
          for (const auto& pair : split_csv(e.value)) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos)
              bad_entry(path, e, "labels must be name:id pairs");
            ts.label_map[trim(pair.substr(0, colon))] =
                to_int(path, {e.section, e.key, trim(pair.substr(colon + 1)),
                              e.line});
          }
        } else bad_entry(path, e, "unknown key");
      }
    } else {
      bad_entry(path, e, "unknown section");
    }
  }
  for (const auto& n : task_names) cfg.dataset_tasks.push_back(task_specs[n]);
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  encoder.validate();
  train.validate();
  if (head_hidden < 0) throw Error("config: head_hidden must be >= 0");
  if (source == "files") {
    if (dataset_tasks.empty())
      throw Error("config: source=files requires data.tasks");
    for (const auto& t : dataset_tasks)
      if (t.path.empty())
        throw Error("config: task '" + t.name + "' has no path");
  }
}

data::TaskStream build_stream(const ExperimentConfig& cfg) {
  if (cfg.source == "synthetic") {
    data::SyntheticSpec spec = cfg.synthetic;
    spec.support_size = cfg.train.support_size;
    spec.query_size = cfg.train.query_size;
    spec.train_size = cfg.train.test_train_size;
    return data::gen_synthetic_stream(spec, cfg.train.seed);
  }
  data::TaskStream stream;
  for (std::size_t ti = 0; ti < cfg.dataset_tasks.size(); ++ti) {
    const auto& ts = cfg.dataset_tasks[ti];
    std::vector<data::Sample> samples;
    if (ts.format == "jsonl") {
      data::JsonlSchema schema;
      schema.text_key = ts.text_key;
      schema.pair_key = ts.pair_key;
      schema.label_key = ts.label_key;
      schema.classification = ts.kind == data::TaskKind::kClassification;
      schema.label_map = ts.label_map;
      samples = data::load_jsonl(ts.path, schema);
    } else {
      data::TsvSpec spec;
      spec.text_col = ts.text_col;
      spec.pair_col = ts.pair_col;
      spec.label_col = ts.label_col;
      spec.has_header = ts.has_header;
      spec.classification = ts.kind == data::TaskKind::kClassification;
      spec.label_map = ts.label_map;
      samples = data::load_tsv(ts.path, spec);
    }
    const int s = cfg.train.support_size, q = cfg.train.query_size,
              tr = cfg.train.test_train_size;
    if (static_cast<int>(samples.size()) < s + q + tr + 10)
      throw Error("task '" + ts.name + "': " + std::to_string(samples.size()) +
                  " samples cannot fill support/query/train/eval splits");
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng::Stream rs(rng::derive(cfg.train.seed, 0x5417, ti));
    for (std::size_t i = idx.size() - 1; i > 0; --i)
      std::swap(idx[i], idx[rs.below(i + 1)]);
    data::Task task;
    task.id = ts.name;
    task.kind = ts.kind;
    task.num_classes = ts.num_classes;
    task.metric = ts.metric;
    std::size_t pos = 0;
    for (int i = 0; i < s; ++i) task.support.push_back(samples[idx[pos++]]);
    for (int i = 0; i < q; ++i) task.query.push_back(samples[idx[pos++]]);
    for (int i = 0; i < tr; ++i) task.train.push_back(samples[idx[pos++]]);
    while (pos < idx.size()) task.eval.push_back(samples[idx[pos++]]);
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

meta::TrainSetup setup_of(const ExperimentConfig& cfg) {
  return {cfg.encoder, cfg.head_hidden};
}

// ------------------------------------------------------------ commands

namespace {

ExperimentConfig load_with_seed(const std::string& config_path,
                                std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  if (seed) cfg.train.seed = *seed;
  return cfg;
}

std::string log_to_jsonl(const std::vector<meta::LogRecord>& log) {
  std::string out;
  for (const auto& r : log) {
    ordered_json obj;
    obj["epoch"] = r.epoch;
    obj["task"] = r.task;
    obj["loss"] = r.loss;
    obj["lr"] = r.lr;
    obj["mode"] = r.mode;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

int run_training(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override,
                 std::optional<meta::Method> method_override) {
  ExperimentConfig cfg = load_with_seed(config_path, seed_override);
  if (method_override) cfg.method = *method_override;
  const auto stream = build_stream(cfg);
  fs::create_directories(out_dir);
  OutputGuard guard;
  meta::TrainResult result;
  if (cfg.method == meta::Method::kSequential) {
    result = meta::sequential_baseline(stream, setup_of(cfg), cfg.train);
  } else {
    auto checkpoint = [&](int epoch, const ParamSet& theta) {
      const fs::path p =
          fs::path(out_dir) / ("checkpoint_epoch_" + std::to_string(epoch) +
                               ".ckpt");
      guard.track(p);
      ckpt::save(p.string(), theta);
    };
    result = meta::meta_train(stream, setup_of(cfg), cfg.train, cfg.method,
                              checkpoint);
  }
  const fs::path final_ckpt = fs::path(out_dir) / "checkpoint.ckpt";
  guard.track(final_ckpt);
  ckpt::save(final_ckpt.string(), result.theta);
  write_text(guard, fs::path(out_dir) / "train_log.jsonl",
             log_to_jsonl(result.log));
  ordered_json meta_obj;
  meta_obj["method"] = meta::to_string(cfg.method);
  meta_obj["seed"] = cfg.train.seed;
  meta_obj["freeze_checks"] = result.freeze.calls;
  meta_obj["freeze_violations"] = result.freeze.violations;
  write_text(guard, fs::path(out_dir) / "meta.json", meta_obj.dump(2) + "\n");
  guard.commit();
  std::cout << "wrote " << final_ckpt.string() << " ("
            << result.log.size() << " log records)\n";
  return 0;
}

std::string matrix_to_csv(const eval::ForgettingMatrix& matrix) {
  std::string out = "task,metric,immediate,final,delta\n";
  for (const auto& r : matrix.rows) {
    out += r.task + "," + r.metric + "," + dstr(r.immediate) + "," +
           dstr(r.final_value) + "," + dstr(r.immediate - r.final_value) +
           "\n";
  }
  return out;
}

std::string matrix_to_markdown(const eval::ForgettingMatrix& matrix) {
  std::string out = "| task | metric | immediate/final | delta |\n";
  out += "|---|---|---|---|\n";
  for (const auto& r : matrix.rows)
    out += "| " + r.task + " | " + r.metric + " | " + dfix(r.immediate) + "/" +
           dfix(r.final_value) + " | " + dfix(r.immediate - r.final_value) +
           " |\n";
  const auto summary = eval::forgetting_delta(matrix);
  if (summary.mean)
    out += "\nmean forgetting delta (all but last task): " +
           dfix(*summary.mean) + "\n";
  else
    out += "\nmean forgetting delta: n/a (single task)\n";
  return out;
}

} // namespace

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
  return run_training(config_path, out_dir, seed_override, std::nullopt);
}

int cmd_baseline(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  return run_training(config_path, out_dir, seed_override,
                      meta::Method::kSequential);
}

int cmd_test(const std::string& config_path, const std::string& checkpoint,
             const std::string& out_dir,
             std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = load_with_seed(config_path, seed_override);
  const auto stream = build_stream(cfg);
  const ParamSet reference = nn::init_rln(cfg.encoder, 0);
  const ParamSet theta = ckpt::load_matching(checkpoint, reference);
  const auto matrix = eval::meta_test(theta, stream, setup_of(cfg), cfg.train);
  fs::create_directories(out_dir);
  OutputGuard guard;
  write_text(guard, fs::path(out_dir) / "report.csv", matrix_to_csv(matrix));
  write_text(guard, fs::path(out_dir) / "report.md",
             matrix_to_markdown(matrix));
  ordered_json meta_obj;
  meta_obj["method"] = meta::to_string(cfg.method);
  meta_obj["seed"] = cfg.train.seed;
  meta_obj["checkpoint"] = checkpoint;
  write_text(guard, fs::path(out_dir) / "meta.json", meta_obj.dump(2) + "\n");
  guard.commit();
  std::cout << matrix_to_markdown(matrix);
  return 0;
}

int cmd_gradcheck(const std::string& config_path, bool corrupt_gradients) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  // Clamp the configured model to gradient-check size.
  nn::EncoderSpec enc = cfg.encoder;
  enc.vocab_size = std::min(enc.vocab_size, 64);
  enc.embed_dim = std::min(enc.embed_dim, 6);
  for (auto& h : enc.hidden_dims) h = std::min(h, 8);
  enc.max_len = std::min(enc.max_len, 10);
  enc.dropout_rate = 0.0;

  data::SyntheticSpec dspec;
  dspec.n_tasks = 1;
  dspec.word_types = 66;
  dspec.support_size = 8;
  dspec.query_size = 6;
  dspec.train_size = 4;
  dspec.samples_per_task = 30;
  dspec.min_len = 3;
  dspec.max_len = 6;

  bool all_pass = true;
  auto report = [&](const std::string& name, bool pass, double err) {
    all_pass = all_pass && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " " << name
              << " (max rel err " << dstr(err) << ")\n";
  };

  // backward vs central finite differences on the full episode loss
  for (int trial = 0; trial < 5; ++trial) {
    const auto stream = data::gen_synthetic_stream(dspec, 90 + trial);
    const auto& task = stream.tasks[0];
    auto model = nn::TextModel::for_task(enc, task, cfg.head_hidden);
    ParamSet theta = nn::init_rln(enc, rng::derive(trial, 1));
    ParamSet w = nn::init_pln(model.head(), rng::derive(trial, 2));
    auto batch = std::span(task.support).subspan(0, 4);
    Graph g;
    Tensor l = model.episode_loss(g, theta, w, batch, Mode::kEval, 0, true);
    g.backward(l);
    GradMap got;
    for (const auto& [name, t] : theta.items()) got[name] = g.grad_of(t);
    for (const auto& [name, t] : w.items()) got[name] = g.grad_of(t);
    if (corrupt_gradients) got["embed"].data()[0] += 1e-2;
    auto f = [&](const ParamSet& p) {
      // p holds theta followed by w coordinates
      Graph gg;
      return model
          .episode_loss(gg, p /*theta part*/, w, batch, Mode::kEval, 0, false)
          .item();
    };
    // finite differences over theta and w separately
    GradMap fd = finite_diff_grad(f, theta, 1e-6);
    auto fw = [&](const ParamSet& p) {
      Graph gg;
      return model.episode_loss(gg, theta, p, batch, Mode::kEval, 0, false)
          .item();
    };
    GradMap fdw = finite_diff_grad(fw, w, 1e-6);
    for (auto& [name, t] : fdw) fd[name] = t;
    const double err = max_rel_err(got, fd);
    report("gradcheck backward-vs-fd trial " + std::to_string(trial),
           err <= 1e-4, err);
  }

  // first_order vs exact_fd with no inner adaptation
  meta::Config mcfg = cfg.train;
  mcfg.inner_steps_train = 0;
  mcfg.fd_epsilon = 1e-6;
  for (int trial = 0; trial < 3; ++trial) {
    const auto stream = data::gen_synthetic_stream(dspec, 170 + trial);
    const auto& task = stream.tasks[0];
    auto model = nn::TextModel::for_task(enc, task, cfg.head_hidden);
    ParamSet theta = nn::init_rln(enc, rng::derive(trial, 3));
    ParamSet w = nn::init_pln(model.head(), rng::derive(trial, 4));
    meta::Config first = mcfg;
    first.grad_mode = meta::GradMode::kFirstOrder;
    meta::Config exact = mcfg;
    exact.grad_mode = meta::GradMode::kExactFd;
    auto a = meta::outer_grad(model, theta, w, std::span(task.support),
                              std::span(task.query), first,
                              meta::InnerMode::kBatched, Mode::kEval, 5);
    auto b = meta::outer_grad(model, theta, w, std::span(task.support),
                              std::span(task.query), exact,
                              meta::InnerMode::kBatched, Mode::kEval, 5);
    if (corrupt_gradients) a.theta_grads["embed"].data()[0] += 1e-2;
    const double err = max_rel_err(a.theta_grads, b.theta_grads);
    report("gradcheck first-order-vs-exact (0 inner steps) trial " +
               std::to_string(trial),
           err <= 1e-4, err);
  }

  std::cout << (all_pass ? "gradcheck: all checks passed\n"
                         : "gradcheck: FAILURES detected\n");
  return all_pass ? 0 : 1;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = load_with_seed(config_path, seed_override);
  data::SyntheticSpec spec = cfg.synthetic;
  spec.support_size = cfg.train.support_size;
  spec.query_size = cfg.train.query_size;
  spec.train_size = cfg.train.test_train_size;
  const auto stream = data::gen_synthetic_stream(spec, cfg.train.seed);
  fs::create_directories(out_dir);
  OutputGuard guard;
  for (const auto& task : stream.tasks) {
    std::string body;
    auto emit = [&](const std::vector<data::Sample>& split,
                    const char* split_name) {
      for (const auto& s : split) {
        ordered_json obj;
        obj["text"] = s.text;
        if (s.has_pair) obj["text_pair"] = s.text_pair;
        obj["label"] = s.label;
        obj["split"] = split_name;
        body += obj.dump();
        body += '\n';
      }
    };
    emit(task.support, "support");
    emit(task.query, "query");
    emit(task.train, "train");
    emit(task.eval, "eval");
    write_text(guard, fs::path(out_dir) / (task.id + ".jsonl"), body);
  }
  guard.commit();
  std::cout << "wrote " << stream.tasks.size() << " task files to " << out_dir
            << "\n";
  return 0;
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("report: cannot open " + path);
  std::vector<ReportRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue; // header
    std::vector<std::string> cols = split_csv(line);
    if (cols.size() != 5)
      throw Error("report: " + path + ":" + std::to_string(lineno) +
                  ": expected 5 columns");
    rows.push_back({cols[0], cols[1], std::stod(cols[2]), std::stod(cols[3]),
                    std::stod(cols[4])});
  }
  return rows;
}

int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_dir) {
  if (run_dirs.empty()) throw Error("report: no run directories given");
  struct Run {
    std::string method;
    std::vector<ReportRow> rows;
  };
  std::vector<Run> runs;
  for (const auto& dir : run_dirs) {
    const fs::path csv = fs::path(dir) / "report.csv";
    if (!fs::exists(csv))
      throw Error("report: " + dir + " has no report.csv");
    Run run;
    run.method = fs::path(dir).filename().string();
    const fs::path meta_path = fs::path(dir) / "meta.json";
    if (fs::exists(meta_path)) {
      std::ifstream mf(meta_path);
      ordered_json m = ordered_json::parse(mf);
      if (m.contains("method")) run.method = m["method"].get<std::string>();
    }
    run.rows = read_report_csv(csv.string());
    if (run.rows.empty()) throw Error("report: " + dir + " has an empty report");
    runs.push_back(std::move(run));
  }

  std::string csv = "task,metric";
  for (const auto& r : runs)
    csv += "," + r.method + "_immediate," + r.method + "_final," + r.method +
           "_delta";
  csv += "\n";
  std::string md = "| task | metric |";
  for (const auto& r : runs) md += " " + r.method + " |";
  md += "\n|---|---|";
  for (std::size_t i = 0; i < runs.size(); ++i) md += "---|";
  md += "\n";
  const auto& base = runs.front().rows;
  for (std::size_t ti = 0; ti < base.size(); ++ti) {
    csv += base[ti].task + "," + base[ti].metric;
    md += "| " + base[ti].task + " | " + base[ti].metric + " |";
    for (const auto& run : runs) {
      const ReportRow* row = nullptr;
      for (const auto& r : run.rows)
        if (r.task == base[ti].task) row = &r;
      if (!row)
        throw Error("report: method " + run.method + " lacks task " +
                    base[ti].task);
      csv += "," + dstr(row->immediate) + "," + dstr(row->final_value) + "," +
             dstr(row->delta);
      md += " " + dfix(row->immediate) + "/" + dfix(row->final_value) + " |";
    }
    csv += "\n";
    md += "\n";
  }
  // Mean forgetting delta over all tasks but the last, per method.
  csv += "mean_delta,";
  md += "| mean delta | |";
  for (const auto& run : runs) {
    eval::ForgettingMatrix matrix;
    for (const auto& r : run.rows)
      matrix.rows.push_back({r.task, r.metric, r.immediate, r.final_value});
    const auto summary = eval::forgetting_delta(matrix);
    const std::string cell = summary.mean ? dstr(*summary.mean) : "n/a";
    csv += "," + cell + ",,";
    md += " " + (summary.mean ? dfix(*summary.mean) : std::string("n/a")) +
          " |";
  }
  csv += "\n";
  md += "\n";

  fs::create_directories(out_dir);
  OutputGuard guard;
  write_text(guard, fs::path(out_dir) / "comparison.csv", csv);
  write_text(guard, fs::path(out_dir) / "comparison.md", md);
  guard.commit();
  std::cout << md;
  return 0;
}

} // namespace mcl::exp
