#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mcl/tensor.hpp"

namespace mcl {

enum class Role { kRLN, kPLN };

// Named, ordered collection of parameter tensors. Insertion order is
// the canonical order used by flatten/unflatten and checkpoints.
class ParamSet {
 public:
  explicit ParamSet(Role role = Role::kRLN) : role_(role) {}

  Role role() const { return role_; }

  void add(const std::string& name, Tensor t);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }
  const std::vector<std::pair<std::string, Tensor>>& items() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }

  // Total number of scalar coordinates.
  std::size_t num_coords() const;

  std::vector<double> flatten() const;
  // New ParamSet with the same names/shapes and the given coordinates.
  ParamSet unflatten(const std::vector<double>& flat) const;

  // Deep copy (fresh storage).
  ParamSet clone() const;

  // FNV-1a over names and raw value bytes; used for freeze checks.
  std::uint64_t checksum() const;

 private:
  Role role_;
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using GradMap = std::map<std::string, Tensor>;

// Reverse-mode gradients of a scalar root w.r.t. every parameter in
// `params`. Parameters absent from the graph get zero gradients.
GradMap backward(Graph& g, const Tensor& root, const ParamSet& params);

// Central-difference gradient oracle: (f(p+eps e) - f(p-eps e)) / 2eps
// per coordinate. f must be deterministic; this is checked by
// evaluating it twice at the base point.
GradMap finite_diff_grad(const std::function<double(const ParamSet&)>& f,
                         const ParamSet& params, double epsilon);

// Largest relative error between two gradient maps, coordinate-wise:
// |a-b| / max(|a|, |b|, floor).
double max_rel_err(const GradMap& a, const GradMap& b, double floor = 1e-6);

} // namespace mcl
