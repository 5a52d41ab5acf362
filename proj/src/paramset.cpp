#include "mcl/paramset.hpp"

#include <cmath>
#include <cstring>

namespace mcl {

void ParamSet::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw Error("paramset: duplicate parameter " + name);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(t));
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("paramset: unknown parameter " + name);
  return entries_[it->second].second;
}

std::size_t ParamSet::num_coords() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_coords());
  for (const auto& [name, t] : entries_)
    flat.insert(flat.end(), t.vec().begin(), t.vec().end());
  return flat;
}

ParamSet ParamSet::unflatten(const std::vector<double>& flat) const {
  if (flat.size() != num_coords())
    throw Error("paramset: unflatten got " + std::to_string(flat.size()) +
                " coords, expected " + std::to_string(num_coords()));
  ParamSet out(role_);
  std::size_t pos = 0;
  for (const auto& [name, t] : entries_) {
    std::vector<double> vals(flat.begin() + pos, flat.begin() + pos + t.size());
    pos += t.size();
    out.add(name, Tensor(t.shape(), std::move(vals)));
  }
  return out;
}

ParamSet ParamSet::clone() const {
  ParamSet out(role_);
  for (const auto& [name, t] : entries_) out.add(name, t.clone());
  return out;
}

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto eat = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, t] : entries_) {
    eat(name.data(), name.size());
    eat(t.data(), t.size() * sizeof(double));
  }
  return h;
}

GradMap backward(Graph& g, const Tensor& root, const ParamSet& params) {
  g.backward(root);
  GradMap grads;
  for (const auto& [name, t] : params.items()) grads[name] = g.grad_of(t);
  return grads;
}

GradMap finite_diff_grad(const std::function<double(const ParamSet&)>& f,
                         const ParamSet& params, double epsilon) {
  if (epsilon <= 0.0) throw Error("finite_diff_grad: epsilon must be > 0");
  if (f(params) != f(params))
    throw Error("finite_diff_grad: f is not deterministic at the base point");
  ParamSet probe = params.clone();
  GradMap grads;
  for (const auto& [name, t] : probe.items()) {
    Tensor grad(t.shape());
    // t shares storage with probe, so poking it perturbs the set.
    double* vals = const_cast<double*>(t.data());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + epsilon;
      const double up = f(probe);
      vals[i] = orig - epsilon;
      const double down = f(probe);
      vals[i] = orig;
      grad.data()[i] = (up - down) / (2.0 * epsilon);
    }
    grads[name] = std::move(grad);
  }
  return grads;
}

double max_rel_err(const GradMap& a, const GradMap& b, double floor) {
  if (a.size() != b.size())
    throw Error("max_rel_err: gradient maps differ in size");
  double worst = 0.0;
  for (const auto& [name, ta] : a) {
    const Tensor& tb = b.at(name);
    if (ta.shape() != tb.shape())
      throw Error("max_rel_err: shape mismatch for " + name);
    for (std::size_t i = 0; i < ta.size(); ++i) {
      const double x = ta.data()[i], y = tb.data()[i];
      const double denom = std::max({std::fabs(x), std::fabs(y), floor});
      worst = std::max(worst, std::fabs(x - y) / denom);
    }
  }
  return worst;
}

} // namespace mcl
