#include "mcl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mcl::ckpt {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw Error("checkpoint: truncated file " + path);
  return v;
}

} // namespace

void save(const std::string& path, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params.items()) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), name.size());
    put(out, static_cast<std::uint32_t>(t.shape().size()));
    for (int d : t.shape()) put(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.data()),
              t.size() * sizeof(double));
  }
  if (!out) throw Error("checkpoint: write failed for " + path);
}

ParamSet load(const std::string& path, Role role) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("checkpoint: " + path + " is not a checkpoint file");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion)
    throw Error("checkpoint: " + path + " has unsupported version " +
                std::to_string(version));
  const auto count = get<std::uint32_t>(in, path);
  ParamSet params(role);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto ndim = get<std::uint32_t>(in, path);
    std::vector<int> shape(ndim);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = static_cast<int>(get<std::uint32_t>(in, path));
      numel *= d;
    }
    std::vector<double> values(numel);
    in.read(reinterpret_cast<char*>(values.data()), numel * sizeof(double));
    if (!in) throw Error("checkpoint: truncated file " + path);
    params.add(name, Tensor(std::move(shape), std::move(values)));
  }
  return params;
}

ParamSet load_matching(const std::string& path, const ParamSet& reference) {
  ParamSet loaded = load(path, reference.role());
  if (loaded.size() != reference.size())
    throw Error("checkpoint: " + path + " holds " +
                std::to_string(loaded.size()) + " tensors, model expects " +
                std::to_string(reference.size()));
  for (const auto& [name, t] : reference.items()) {
    if (!loaded.contains(name))
      throw Error("checkpoint: " + path + " is missing parameter " + name);
    if (loaded.at(name).shape() != t.shape())
      throw Error("checkpoint: " + path + " parameter " + name + " has shape " +
                  shape_str(loaded.at(name).shape()) + ", model expects " +
                  shape_str(t.shape()));
  }
  return loaded;
}

} // namespace mcl::ckpt
