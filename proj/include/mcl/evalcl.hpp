#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcl/data.hpp"
#include "mcl/metaobj.hpp"
#include "mcl/paramset.hpp"

namespace mcl::eval {

// Per-task metric measured right after that task's own fine-tuning
// (immediate) and again after the whole target stream (final), using
// the task's retained head with the then-current shared theta.
struct ForgettingMatrix {
  struct Row {
    std::string task;
    std::string metric;
    double immediate = 0.0;
    double final_value = 0.0;
  };
  std::vector<Row> rows;
};

struct ForgettingSummary {
  // delta_i = immediate_i - final_i for every task except the last
  // (whose delta is identically zero).
  std::vector<double> deltas;
  std::optional<double> mean;
};

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& labels);

// Matthews correlation for binary predictions/labels; 0 by convention
// when any confusion-matrix margin is empty.
double matthews_corr(const std::vector<int>& predictions,
                     const std::vector<int>& labels);

// Sample Pearson correlation; a constant input vector is an error.
double pearson_corr(const std::vector<double>& x,
                    const std::vector<double>& y);

std::string to_string(data::Metric metric);

// Evaluate one task's eval split with the given parameters.
double evaluate_metric(const nn::TextModel& model, const ParamSet& theta,
                       const ParamSet& w, const data::Task& task);

// Meta-testing: walk the target tasks in order, fine-tuning theta and
// a fresh head jointly on each task's train split, recording the
// immediate metric; after the last task, re-evaluate every task with
// its retained head against the drifted shared theta.
ForgettingMatrix meta_test(const ParamSet& theta,
                           const data::TaskStream& targets,
                           const meta::TrainSetup& setup,
                           const meta::Config& cfg);

ForgettingSummary forgetting_delta(const ForgettingMatrix& matrix);

} // namespace mcl::eval
