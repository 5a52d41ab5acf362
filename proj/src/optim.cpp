#include "mcl/optim.hpp"

#include <cmath>
#include <numbers>

namespace mcl::optim {

namespace {

const Tensor& grad_for(const GradMap& grads, const std::string& name,
                       const Tensor& param, const char* who) {
  auto it = grads.find(name);
  if (it == grads.end())
    throw Error(std::string(who) + ": no gradient for parameter " + name);
  if (it->second.shape() != param.shape())
    throw Error(std::string(who) + ": gradient shape " +
                shape_str(it->second.shape()) + " does not match parameter " +
                name + " " + shape_str(param.shape()));
  return it->second;
}

} // namespace

ParamSet sgd_step(const ParamSet& params, const GradMap& grads, double lr) {
  ParamSet out(params.role());
  for (const auto& [name, p] : params.items()) {
    const Tensor& g = grad_for(grads, name, p, "sgd_step");
    Tensor np = p.clone();
    for (std::size_t i = 0; i < np.size(); ++i)
      np.data()[i] -= lr * g.data()[i];
    check_finite("sgd_step", np);
    out.add(name, std::move(np));
  }
  return out;
}

AdamState AdamState::init(const ParamSet& params, AdamHyper hyper) {
  AdamState s;
  s.hyper_ = hyper;
  for (const auto& [name, p] : params.items()) {
    s.m_.emplace(name, Tensor(p.shape()));
    s.v_.emplace(name, Tensor(p.shape()));
  }
  s.lineage_ = std::make_shared<long>(0);
  return s;
}

std::pair<ParamSet, AdamState> adam_step(const AdamState& state,
                                         const ParamSet& params,
                                         const GradMap& grads, double lr) {
  if (!state.lineage_) throw Error("adam_step: uninitialized state");
  if (state.t_ != *state.lineage_)
    throw Error("adam_step: stale state (t=" + std::to_string(state.t_) +
                ", lineage already at t=" + std::to_string(*state.lineage_) +
                ")");
  const auto& h = state.hyper_;
  AdamState next;
  next.hyper_ = h;
  next.t_ = state.t_ + 1;
  next.lineage_ = state.lineage_;
  const double bc1 = 1.0 - std::pow(h.beta1, next.t_);
  const double bc2 = 1.0 - std::pow(h.beta2, next.t_);
  ParamSet out(params.role());
  for (const auto& [name, p] : params.items()) {
    const Tensor& g = grad_for(grads, name, p, "adam_step");
    auto mit = state.m_.find(name);
    auto vit = state.v_.find(name);
    if (mit == state.m_.end() || vit == state.v_.end())
      throw Error("adam_step: state has no moments for parameter " + name);
    Tensor m = mit->second.clone();
    Tensor v = vit->second.clone();
    Tensor np = p.clone();
    for (std::size_t i = 0; i < np.size(); ++i) {
      const double gi = g.data()[i];
      m.data()[i] = h.beta1 * m.data()[i] + (1.0 - h.beta1) * gi;
      v.data()[i] = h.beta2 * v.data()[i] + (1.0 - h.beta2) * gi * gi;
      const double mhat = m.data()[i] / bc1;
      const double vhat = v.data()[i] / bc2;
      np.data()[i] -= lr * mhat / (std::sqrt(vhat) + h.eps);
    }
    check_finite("adam_step", np);
    next.m_.emplace(name, std::move(m));
    next.v_.emplace(name, std::move(v));
    out.add(name, std::move(np));
  }
  *next.lineage_ = next.t_;
  return {std::move(out), std::move(next)};
}

double cosine_lr(const CosineSchedule& schedule, int step) {
  if (schedule.total_steps <= 0)
    throw Error("cosine_lr: total_steps must be > 0");
  if (schedule.lr_max <= 0.0) throw Error("cosine_lr: lr_max must be > 0");
  if (schedule.lr_min < 0.0 || schedule.lr_min > schedule.lr_max)
    throw Error("cosine_lr: lr_min must lie in [0, lr_max]");
  if (step < 0 || step > schedule.total_steps)
    throw Error("cosine_lr: step " + std::to_string(step) +
                " outside [0," + std::to_string(schedule.total_steps) + "]");
  if (step == 0) return schedule.lr_max; // exact endpoints
  if (step == schedule.total_steps) return schedule.lr_min;
  const double frac =
      static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return schedule.lr_min + 0.5 * (schedule.lr_max - schedule.lr_min) *
                               (1.0 + std::cos(std::numbers::pi * frac));
}

} // namespace mcl::optim
