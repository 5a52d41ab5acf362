#include "mcl/metaobj.hpp"

#include <algorithm>
#include <numeric>

namespace mcl::meta {

std::string to_string(InnerMode mode) {
  return mode == InnerMode::kPerSample ? "per_sample" : "batched";
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kMamlRep: return "maml_rep";
    case Method::kOml: return "oml";
    case Method::kSequential: return "sequential";
  }
  return "?";
}

void Config::validate() const {
  if (inner_lr <= 0.0) throw Error("config: inner_lr must be > 0");
  if (outer_lr < 0.0) throw Error("config: outer_lr must be >= 0");
  if (outer_lr_min < 0.0) throw Error("config: outer_lr_min must be >= 0");
  if (inner_steps_train < 0 || inner_steps_test < 0)
    throw Error("config: inner step counts must be >= 0");
  if (batch_size < 1) throw Error("config: batch_size must be >= 1");
  if (support_size < 1 || query_size < 1 || test_train_size < 1)
    throw Error("config: split sizes must be >= 1");
  if (meta_epochs < 1) throw Error("config: meta_epochs must be >= 1");
  if (fd_epsilon <= 0.0) throw Error("config: fd_epsilon must be > 0");
}

namespace {

constexpr std::uint64_t kRlnSeedTag = 0x01;
constexpr std::uint64_t kPlnSeedTag = 0x02;
constexpr std::uint64_t kStepSeedTag = 0x03;
constexpr std::uint64_t kTestSeedTag = 0x04;

void check_stream(const data::TaskStream& stream, const char* who) {
  if (stream.tasks.empty())
    throw Error(std::string(who) + ": empty task stream");
}

} // namespace

TrainResult meta_train(const data::TaskStream& stream, const TrainSetup& setup,
                       const Config& cfg, Method method,
                       const CheckpointFn& checkpoint) {
  cfg.validate();
  check_stream(stream, "meta_train");
  if (method == Method::kSequential)
    throw Error("meta_train: use sequential_baseline for the sequential method");
  const InnerMode mode =
      method == Method::kOml ? InnerMode::kPerSample : InnerMode::kBatched;
  const int n_tasks = static_cast<int>(stream.tasks.size());

  TrainResult result{nn::init_rln(setup.encoder, rng::derive(cfg.seed, kRlnSeedTag)),
                     {},
                     {}};
  optim::AdamState adam = optim::AdamState::init(result.theta);
  const optim::CosineSchedule sched{cfg.outer_lr, cfg.outer_lr_min,
                                    cfg.meta_epochs * n_tasks};
  int step = 0;
  for (int epoch = 0; epoch < cfg.meta_epochs; ++epoch) {
    for (int ti = 0; ti < n_tasks; ++ti) {
      const data::Task& task = stream.tasks[ti];
      auto model =
          nn::TextModel::for_task(setup.encoder, task, setup.head_hidden);
      // Fresh head per task visit; seed stream keyed by (epoch, task).
      ParamSet w0 = nn::init_pln(
          model.head(), rng::derive(cfg.seed, kPlnSeedTag, epoch, ti));
      auto outer = outer_grad(model, result.theta, w0, task.support,
                              task.query, cfg, mode, Mode::kTrain,
                              rng::derive(cfg.seed, kStepSeedTag, epoch, ti),
                              &result.freeze);
      const double lr =
          cfg.outer_lr > 0.0 ? optim::cosine_lr(sched, step) : 0.0;
      if (lr > 0.0) {
        auto [nt, ns] = optim::adam_step(adam, result.theta,
                                         outer.theta_grads, lr);
        result.theta = std::move(nt);
        adam = std::move(ns);
      }
      result.log.push_back(
          {epoch, task.id, outer.query_loss, lr, to_string(method)});
      ++step;
    }
    if (checkpoint && (epoch + 1) % 5 == 0)
      checkpoint(epoch + 1, result.theta);
  }
  if (checkpoint && cfg.meta_epochs % 5 != 0)
    checkpoint(cfg.meta_epochs, result.theta);
  return result;
}

TrainResult sequential_baseline(const data::TaskStream& stream,
                                const TrainSetup& setup, const Config& cfg) {
  cfg.validate();
  check_stream(stream, "sequential_baseline");
  TrainResult result{nn::init_rln(setup.encoder, rng::derive(cfg.seed, kRlnSeedTag)),
                     {},
                     {}};
  for (std::size_t ti = 0; ti < stream.tasks.size(); ++ti) {
    const data::Task& task = stream.tasks[ti];
    auto model =
        nn::TextModel::for_task(setup.encoder, task, setup.head_hidden);
    ParamSet w = nn::init_pln(model.head(),
                              rng::derive(cfg.seed, kPlnSeedTag, 0, ti));
    auto tuned =
        fine_tune_joint(model, result.theta, w, task.support,
                        cfg.inner_steps_test, cfg,
                        rng::derive(cfg.seed, kStepSeedTag, 0, ti));
    result.theta = std::move(tuned.theta);
    Graph g;
    const double qloss =
        model
            .episode_loss(g, result.theta, tuned.w, task.query, Mode::kEval,
                          0, /*bind_theta=*/false)
            .item();
    result.log.push_back(
        {0, task.id, qloss, cfg.inner_lr, to_string(Method::kSequential)});
  }
  return result;
}

double oml_objective(const ParamSet& theta, std::uint64_t head_seed,
                     const data::TaskStream& stream, const TrainSetup& setup,
                     int trajectory_len, double alpha, const Config& cfg) {
  check_stream(stream, "oml_objective");
  if (trajectory_len < 1)
    throw Error("oml_objective: trajectory length must be >= 1");
  double total = 0.0;
  for (std::size_t ti = 0; ti < stream.tasks.size(); ++ti) {
    const data::Task& task = stream.tasks[ti];
    if (static_cast<int>(task.support.size()) < trajectory_len)
      throw Error("oml_objective: task " + task.id + " has " +
                  std::to_string(task.support.size()) +
                  " support samples, fewer than trajectory length " +
                  std::to_string(trajectory_len));
    if (task.query.empty())
      throw Error("oml_objective: task " + task.id + " has no held-out samples");
    auto model =
        nn::TextModel::for_task(setup.encoder, task, setup.head_hidden);
    // Seeded trajectory sample: shuffle the support indices, walk the
    // first k in order.
    std::vector<std::size_t> idx(task.support.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng::Stream rs(rng::derive(cfg.seed, 0x7247, ti));
    for (std::size_t i = idx.size() - 1; i > 0; --i)
      std::swap(idx[i], idx[rs.below(i + 1)]);
    Trajectory<data::Sample> traj;
    traj.task_id = task.id;
    for (int k = 0; k < trajectory_len; ++k)
      traj.samples.push_back(task.support[idx[k]]);
    ParamSet w0 = nn::init_pln(model.head(), rng::derive(head_seed, ti));
    ParamSet wk = inner_adapt(model, theta, w0, std::span(traj.samples),
                              trajectory_len, alpha, InnerMode::kPerSample,
                              /*batch_size=*/1, Mode::kEval,
                              rng::derive(cfg.seed, 0x7248, ti),
                              cfg.inner_optimizer);
    Graph g;
    total += model
                 .episode_loss(g, theta, wk, task.query, Mode::kEval, 0,
                               /*bind_theta=*/false)
                 .item();
  }
  return total;
}

FineTuneResult fine_tune_joint(const nn::TextModel& model,
                               const ParamSet& theta, const ParamSet& w,
                               std::span<const data::Sample> samples, int steps,
                               const Config& cfg, std::uint64_t rng_key) {
  if (samples.empty()) throw Error("fine_tune_joint: no samples");
  FineTuneResult out{theta.clone(), w.clone()};
  if (steps == 0) return out;
  optim::AdamState adam_theta = optim::AdamState::init(out.theta);
  optim::AdamState adam_w = optim::AdamState::init(out.w);
  const optim::CosineSchedule sched_theta{cfg.outer_lr, cfg.outer_lr_min,
                                          steps};
  const optim::CosineSchedule sched_w{cfg.inner_lr, cfg.outer_lr_min, steps};
  BatchCursor<data::Sample> cursor(samples, cfg.batch_size);
  for (int step = 0; step < steps; ++step) {
    auto batch = cursor.next();
    Graph g;
    Tensor l = model.episode_loss(g, out.theta, out.w, batch, Mode::kTrain,
                                  rng::derive(rng_key, kTestSeedTag, step),
                                  /*bind_theta=*/true);
    g.backward(l);
    GradMap gt, gw;
    for (const auto& [name, t] : out.theta.items()) gt[name] = g.grad_of(t);
    for (const auto& [name, t] : out.w.items()) gw[name] = g.grad_of(t);
    const double lr_theta =
        cfg.outer_lr > 0.0 ? optim::cosine_lr(sched_theta, step) : 0.0;
    const double lr_w =
        cfg.inner_lr > 0.0 ? optim::cosine_lr(sched_w, step) : 0.0;
    auto [nt, nst] = optim::adam_step(adam_theta, out.theta, gt, lr_theta);
    auto [nw, nsw] = optim::adam_step(adam_w, out.w, gw, lr_w);
    out.theta = std::move(nt);
    adam_theta = std::move(nst);
    out.w = std::move(nw);
    adam_w = std::move(nsw);
  }
  return out;
}

} // namespace mcl::meta
