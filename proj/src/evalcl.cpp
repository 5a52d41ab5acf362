#include "mcl/evalcl.hpp"

#include <cmath>

namespace mcl::eval {

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& labels) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw Error("accuracy: need equal nonempty prediction/label vectors, got " +
                std::to_string(predictions.size()) + " and " +
                std::to_string(labels.size()));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double matthews_corr(const std::vector<int>& predictions,
                     const std::vector<int>& labels) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw Error("matthews_corr: need equal nonempty vectors");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1))
      throw Error("matthews_corr: inputs must be binary (0/1)");
    if (p == 1 && y == 1) ++tp;
    else if (p == 0 && y == 0) ++tn;
    else if (p == 1 && y == 0) ++fp;
    else ++fn;
  }
  const double denom2 = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom2 == 0.0) return 0.0; // degenerate margin convention
  return (tp * tn - fp * fn) / std::sqrt(denom2);
}

double pearson_corr(const std::vector<double>& x,
                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error("pearson_corr: need two equal-length vectors of size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0)
    throw Error("pearson_corr: first vector is constant; correlation undefined");
  if (syy == 0.0)
    throw Error("pearson_corr: second vector is constant; correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

std::string to_string(data::Metric metric) {
  switch (metric) {
    case data::Metric::kAccuracy: return "accuracy";
    case data::Metric::kMatthews: return "matthews";
    case data::Metric::kPearson: return "pearson";
  }
  return "?";
}

double evaluate_metric(const nn::TextModel& model, const ParamSet& theta,
                       const ParamSet& w, const data::Task& task) {
  if (task.eval.empty())
    throw Error("evaluate_metric: task " + task.id + " has no eval split");
  const std::vector<double> scores = model.scores(theta, w, task.eval);
  switch (task.metric) {
    case data::Metric::kAccuracy:
    case data::Metric::kMatthews: {
      std::vector<int> preds, labels;
      preds.reserve(scores.size());
      labels.reserve(scores.size());
      for (std::size_t i = 0; i < scores.size(); ++i) {
        preds.push_back(static_cast<int>(scores[i]));
        labels.push_back(static_cast<int>(task.eval[i].label));
      }
      return task.metric == data::Metric::kAccuracy
                 ? accuracy(preds, labels)
                 : matthews_corr(preds, labels);
    }
    case data::Metric::kPearson: {
      std::vector<double> labels;
      labels.reserve(scores.size());
      for (const auto& s : task.eval) labels.push_back(s.label);
      return pearson_corr(scores, labels);
    }
  }
  throw Error("evaluate_metric: unknown metric");
}

ForgettingMatrix meta_test(const ParamSet& theta,
                           const data::TaskStream& targets,
                           const meta::TrainSetup& setup,
                           const meta::Config& cfg) {
  cfg.validate();
  if (targets.tasks.empty()) throw Error("meta_test: empty target stream");
  for (const auto& task : targets.tasks)
    if (task.eval.empty())
      throw Error("meta_test: task " + task.id + " has no eval split");

  ParamSet shared_theta = theta.clone();
  std::vector<ParamSet> heads;
  ForgettingMatrix matrix;
  for (std::size_t ti = 0; ti < targets.tasks.size(); ++ti) {
    const data::Task& task = targets.tasks[ti];
    auto model = nn::TextModel::for_task(setup.encoder, task, setup.head_hidden);
    ParamSet w0 = nn::init_pln(model.head(),
                               rng::derive(cfg.seed, 0x7e57, ti));
    auto tuned = meta::fine_tune_joint(model, shared_theta, w0, task.train,
                                       cfg.inner_steps_test, cfg,
                                       rng::derive(cfg.seed, 0x7e58, ti));
    shared_theta = std::move(tuned.theta); // drift persists across tasks
    heads.push_back(std::move(tuned.w));
    matrix.rows.push_back({task.id, to_string(task.metric),
                           evaluate_metric(model, shared_theta, heads.back(),
                                           task),
                           0.0});
  }
  for (std::size_t ti = 0; ti < targets.tasks.size(); ++ti) {
    const data::Task& task = targets.tasks[ti];
    auto model = nn::TextModel::for_task(setup.encoder, task, setup.head_hidden);
    matrix.rows[ti].final_value =
        evaluate_metric(model, shared_theta, heads[ti], task);
  }
  return matrix;
}

ForgettingSummary forgetting_delta(const ForgettingMatrix& matrix) {
  ForgettingSummary out;
  if (matrix.rows.empty())
    throw Error("forgetting_delta: empty forgetting matrix");
  for (std::size_t i = 0; i + 1 < matrix.rows.size(); ++i)
    out.deltas.push_back(matrix.rows[i].immediate -
                         matrix.rows[i].final_value);
  if (!out.deltas.empty()) {
    double sum = 0.0;
    for (double d : out.deltas) sum += d;
    out.mean = sum / static_cast<double>(out.deltas.size());
  }
  return out;
}

} // namespace mcl::eval
