#pragma once

#include <string>

#include "mcl/paramset.hpp"

namespace mcl::ckpt {

// Binary checkpoint: magic + format version header, then named
// parameter tensors with shapes, little-endian 64-bit floats.
void save(const std::string& path, const ParamSet& params);

ParamSet load(const std::string& path, Role role = Role::kRLN);

// Error unless the checkpoint's names and shapes match `reference`.
ParamSet load_matching(const std::string& path, const ParamSet& reference);

} // namespace mcl::ckpt
