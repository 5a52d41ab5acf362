#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>

#include "mcl/paramset.hpp"

namespace mcl::optim {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. States form a lineage: each step consumes the
// newest state and produces the next one. Stepping from a state that
// has already been superseded is an error.
class AdamState {
 public:
  static AdamState init(const ParamSet& params, AdamHyper hyper = {});

  long step_count() const { return t_; }
  const AdamHyper& hyper() const { return hyper_; }

 private:
  AdamState() = default;
  long t_ = 0;
  AdamHyper hyper_;
  std::map<std::string, Tensor> m_, v_;
  std::shared_ptr<long> lineage_; // newest t in this lineage
  friend std::pair<ParamSet, AdamState> adam_step(const AdamState& state,
                                                  const ParamSet& params,
                                                  const GradMap& grads,
                                                  double lr);
};

// p <- p - lr * g, per coordinate. Inputs are not mutated.
ParamSet sgd_step(const ParamSet& params, const GradMap& grads, double lr);

std::pair<ParamSet, AdamState> adam_step(const AdamState& state,
                                         const ParamSet& params,
                                         const GradMap& grads, double lr);

struct CosineSchedule {
  double lr_max = 0.0;
  double lr_min = 0.0;
  int total_steps = 1;
};

// lr_min + 0.5 (lr_max - lr_min) (1 + cos(pi step / total)).
double cosine_lr(const CosineSchedule& schedule, int step);

} // namespace mcl::optim
