#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcl/data.hpp"
#include "mcl/nn.hpp"
#include "mcl/optim.hpp"
#include "mcl/paramset.hpp"
#include "mcl/rng.hpp"
#include "mcl/tensor.hpp"

namespace mcl::meta {

enum class InnerMode { kBatched, kPerSample };
enum class GradMode { kFirstOrder, kExactFd };
enum class InnerOpt { kSgd, kAdam };
enum class Method { kMamlRep, kOml, kSequential };

std::string to_string(InnerMode mode);
std::string to_string(Method method);

struct Config {
  double inner_lr = 5e-3;     // alpha: PLN updates
  double outer_lr = 5e-5;     // beta: RLN updates
  double outer_lr_min = 0.0;  // cosine floor
  int inner_steps_train = 5;
  int inner_steps_test = 7;
  int batch_size = 16;
  int support_size = 128;
  int query_size = 112;
  int test_train_size = 100;
  int meta_epochs = 20;
  GradMode grad_mode = GradMode::kFirstOrder;
  double fd_epsilon = 1e-5;
  std::size_t fd_coord_budget = 5000;
  InnerOpt inner_optimizer = InnerOpt::kSgd;
  std::uint64_t seed = 0;

  void validate() const;
};

// Counts freeze-discipline checks around inner adaptation. Violations
// stay zero unless the representation parameters changed under a loop
// that must not touch them.
struct FreezeStats {
  long calls = 0;
  long violations = 0;
};

// Ordered samples from one task, the unit the per-sample (OML) inner
// loop walks.
template <class Example>
struct Trajectory {
  std::string task_id;
  std::vector<Example> samples;
};

// Sequential batch view over a sample range: full batches, then one
// final partial batch; asking for a batch when nothing remains is an
// error (no silent cycling).
template <class Example>
class BatchCursor {
 public:
  BatchCursor(std::span<const Example> all, int batch_size)
      : all_(all), batch_size_(batch_size) {
    if (batch_size < 1) throw Error("batch cursor: batch_size must be >= 1");
  }

  std::span<const Example> next() {
    if (pos_ >= all_.size())
      throw Error("batch cursor: data exhausted after " +
                  std::to_string(pos_) + " samples; refusing to cycle");
    const std::size_t n = std::min<std::size_t>(batch_size_, all_.size() - pos_);
    auto out = all_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const Example> all_;
  std::size_t batch_size_;
  std::size_t pos_ = 0;
};

// Inner loop of the meta-objective: adapt the head on support data
// with the representation parameters frozen. Batched mode consumes one
// batch per step; per-sample mode consumes exactly one sample per
// step, in order.
template <class Model>
ParamSet inner_adapt(const Model& model, const ParamSet& theta,
                     const ParamSet& w0,
                     std::span<const typename Model::Example> support,
                     int steps, double alpha, InnerMode mode, int batch_size,
                     Mode loss_mode, std::uint64_t rng_key,
                     InnerOpt opt = InnerOpt::kSgd,
                     FreezeStats* freeze = nullptr) {
  if (support.empty()) throw Error("inner_adapt: empty support set");
  if (steps < 0) throw Error("inner_adapt: steps must be >= 0");
  if (mode == InnerMode::kPerSample &&
      steps > static_cast<int>(support.size()))
    throw Error("inner_adapt: " + std::to_string(steps) +
                " per-sample steps exceed " + std::to_string(support.size()) +
                " support samples; refusing to cycle");
  const std::uint64_t before = theta.checksum();
  ParamSet w = w0.clone();
  optim::AdamState adam = optim::AdamState::init(w);
  BatchCursor<typename Model::Example> cursor(
      support, mode == InnerMode::kPerSample ? 1 : batch_size);
  for (int step = 0; step < steps; ++step) {
    auto batch = cursor.next();
    Graph g;
    Tensor l = model.episode_loss(g, theta, w, batch, loss_mode,
                                  rng::derive(rng_key, step),
                                  /*bind_theta=*/false);
    GradMap grads = backward(g, l, w);
    if (opt == InnerOpt::kAdam) {
      auto [nw, ns] = optim::adam_step(adam, w, grads, alpha);
      w = std::move(nw);
      adam = std::move(ns);
    } else {
      w = optim::sgd_step(w, grads, alpha);
    }
  }
  if (freeze) {
    ++freeze->calls;
    if (theta.checksum() != before) ++freeze->violations;
  }
  return w;
}

template <class Model>
struct OuterResult {
  GradMap theta_grads;
  double query_loss = 0.0;
  ParamSet adapted_w;
};

// Outer gradient of the query loss w.r.t. the representation
// parameters. First-order treats the adapted head as a constant;
// exact mode runs central finite differences through the whole
// adapt-then-evaluate pipeline (dropout off, rng fixed).
template <class Model>
OuterResult<Model> outer_grad(const Model& model, const ParamSet& theta,
                              const ParamSet& w0,
                              std::span<const typename Model::Example> support,
                              std::span<const typename Model::Example> query,
                              const Config& cfg, InnerMode mode,
                              Mode loss_mode, std::uint64_t rng_key,
                              FreezeStats* freeze = nullptr) {
  if (query.empty()) throw Error("outer_grad: empty query set");
  const std::uint64_t inner_key = rng::derive(rng_key, 1);
  const std::uint64_t query_key = rng::derive(rng_key, 2);
  if (cfg.grad_mode == GradMode::kFirstOrder) {
    ParamSet wk = inner_adapt(model, theta, w0, support,
                              cfg.inner_steps_train, cfg.inner_lr, mode,
                              cfg.batch_size, loss_mode, inner_key,
                              cfg.inner_optimizer, freeze);
    Graph g;
    Tensor l = model.episode_loss(g, theta, wk, query, loss_mode, query_key,
                                  /*bind_theta=*/true);
    OuterResult<Model> out{backward(g, l, theta), l.item(), std::move(wk)};
    return out;
  }
  if (theta.num_coords() > cfg.fd_coord_budget)
    throw Error("outer_grad: exact_fd over " +
                std::to_string(theta.num_coords()) +
                " coordinates exceeds the budget of " +
                std::to_string(cfg.fd_coord_budget) +
                "; use a smaller model or first_order");
  auto pipeline = [&](const ParamSet& th) {
    ParamSet wk = inner_adapt(model, th, w0, support, cfg.inner_steps_train,
                              cfg.inner_lr, mode, cfg.batch_size, Mode::kEval,
                              inner_key, cfg.inner_optimizer, freeze);
    Graph g;
    return model
        .episode_loss(g, th, wk, query, Mode::kEval, query_key,
                      /*bind_theta=*/false)
        .item();
  };
  OuterResult<Model> out;
  out.theta_grads = finite_diff_grad(pipeline, theta, cfg.fd_epsilon);
  out.adapted_w = inner_adapt(model, theta, w0, support, cfg.inner_steps_train,
                              cfg.inner_lr, mode, cfg.batch_size, Mode::kEval,
                              inner_key, cfg.inner_optimizer, freeze);
  Graph g;
  out.query_loss = model
                       .episode_loss(g, theta, out.adapted_w, query,
                                     Mode::kEval, query_key,
                                     /*bind_theta=*/false)
                       .item();
  return out;
}

struct LogRecord {
  int epoch = 0;
  std::string task;
  double loss = 0.0;
  double lr = 0.0;
  std::string mode;
};

struct TrainResult {
  ParamSet theta;
  std::vector<LogRecord> log;
  FreezeStats freeze;
};

struct TrainSetup {
  nn::EncoderSpec encoder;
  int head_hidden = 0;
};

// Called with (meta_epoch, theta) every 5 epochs and after the last.
using CheckpointFn = std::function<void(int, const ParamSet&)>;

// Meta-training over the ordered stream: one outer Adam step on theta
// per task visit, cosine-annealed outer lr, fresh head per visit.
// method kMamlRep uses batched inner updates, kOml per-sample ones.
TrainResult meta_train(const data::TaskStream& stream, const TrainSetup& setup,
                       const Config& cfg, Method method,
                       const CheckpointFn& checkpoint = nullptr);

// Baseline: one shared theta trained on the tasks in order, jointly
// with a fresh head per task, no freeze and no outer loop.
TrainResult sequential_baseline(const data::TaskStream& stream,
                                const TrainSetup& setup, const Config& cfg);

// Sum over tasks of the post-adaptation held-out loss after walking a
// per-sample trajectory of length k.
double oml_objective(const ParamSet& theta, std::uint64_t head_seed,
                     const data::TaskStream& stream, const TrainSetup& setup,
                     int trajectory_len, double alpha, const Config& cfg);

// Joint fine-tuning of theta and head (the meta-testing update rule):
// Adam on both, cosine-annealed lrs over the step count.
struct FineTuneResult {
  ParamSet theta;
  ParamSet w;
};

FineTuneResult fine_tune_joint(const nn::TextModel& model, const ParamSet& theta,
                               const ParamSet& w,
                               std::span<const data::Sample> samples, int steps,
                               const Config& cfg, std::uint64_t rng_key);

} // namespace mcl::meta
