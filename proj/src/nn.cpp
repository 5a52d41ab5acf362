#include "mcl/nn.hpp"

#include <cmath>

#include "mcl/rng.hpp"

namespace mcl::nn {

void EncoderSpec::validate() const {
  if (vocab_size <= 2) throw Error("encoder spec: vocab_size must be > 2");
  if (embed_dim < 1) throw Error("encoder spec: embed_dim must be >= 1");
  if (max_len < 1) throw Error("encoder spec: max_len must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw Error("encoder spec: dropout_rate must be in [0,1)");
  for (int d : hidden_dims)
    if (d < 1) throw Error("encoder spec: hidden dims must be >= 1");
}

void HeadSpec::validate() const {
  if (kind == data::TaskKind::kClassification && num_classes < 2)
    throw Error("head spec: num_classes must be >= 2");
  if (input_dim < 1) throw Error("head spec: input_dim must be >= 1");
  if (hidden_dim < 0) throw Error("head spec: hidden_dim must be >= 0");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw Error("head spec: dropout_rate must be in [0,1)");
}

namespace {

Tensor uniform_init(const std::vector<int>& shape, int fan_in, int fan_out,
                    std::uint64_t key) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] = rng::uniform_sym(rng::derive(key, i), bound);
  return t;
}

} // namespace

ParamSet init_rln(const EncoderSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamSet p(Role::kRLN);
  p.add("embed", uniform_init({spec.vocab_size, spec.embed_dim},
                              spec.vocab_size, spec.embed_dim,
                              rng::derive(seed, 0)));
  int in = spec.embed_dim;
  for (std::size_t l = 0; l < spec.hidden_dims.size(); ++l) {
    const int out = spec.hidden_dims[l];
    const std::string base = "enc" + std::to_string(l);
    p.add(base + ".w",
          uniform_init({in, out}, in, out, rng::derive(seed, 1 + l)));
    p.add(base + ".b", Tensor({out}));
    in = out;
  }
  return p;
}

ParamSet init_pln(const HeadSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamSet p(Role::kPLN);
  int in = spec.input_dim;
  if (spec.hidden_dim > 0) {
    p.add("head0.w", uniform_init({in, spec.hidden_dim}, in, spec.hidden_dim,
                                  rng::derive(seed, 100)));
    p.add("head0.b", Tensor({spec.hidden_dim}));
    in = spec.hidden_dim;
  }
  p.add("head.w", uniform_init({in, spec.output_dim()}, in, spec.output_dim(),
                               rng::derive(seed, 101)));
  p.add("head.b", Tensor({spec.output_dim()}));
  return p;
}

Tensor encode(Graph& g, const ParamSet& theta, const data::TokenBatch& tokens,
              const EncoderSpec& spec, Mode mode, std::uint64_t rng_key,
              bool bind_theta) {
  (void)mode;
  (void)rng_key; // encoder has no dropout; kept for interface symmetry
  auto param = [&](const std::string& name) {
    return bind_theta ? g.leaf(theta.at(name)) : theta.at(name);
  };
  Tensor emb = ops::embedding_lookup(g, param("embed"), tokens.ids,
                                     {tokens.batch, tokens.max_len});
  Tensor rep = ops::masked_mean_pool(g, emb, tokens.mask);
  for (std::size_t l = 0; l < spec.hidden_dims.size(); ++l) {
    const std::string base = "enc" + std::to_string(l);
    rep = ops::matmul(g, rep, param(base + ".w"));
    rep = ops::add(g, rep, param(base + ".b"));
    rep = ops::tanh(g, rep);
  }
  return rep;
}

Tensor predict(Graph& g, const ParamSet& w, const Tensor& rep,
               const HeadSpec& spec, Mode mode, std::uint64_t rng_key,
               bool bind_w) {
  if (rep.shape().size() != 2 || rep.shape()[1] != spec.input_dim)
    throw Error("predict: representation " + shape_str(rep.shape()) +
                " does not match head input_dim " +
                std::to_string(spec.input_dim));
  auto param = [&](const std::string& name) {
    return bind_w ? g.leaf(w.at(name)) : w.at(name);
  };
  Tensor x = ops::dropout(g, rep, spec.dropout_rate, rng::derive(rng_key, 7),
                          mode);
  if (spec.hidden_dim > 0) {
    x = ops::matmul(g, x, param("head0.w"));
    x = ops::add(g, x, param("head0.b"));
    x = ops::relu(g, x);
    x = ops::dropout(g, x, spec.dropout_rate, rng::derive(rng_key, 8), mode);
  }
  x = ops::matmul(g, x, param("head.w"));
  x = ops::add(g, x, param("head.b"));
  return x;
}

Tensor loss(Graph& g, const Tensor& output, std::span<const data::Sample> batch,
            data::TaskKind kind) {
  if (output.shape().size() != 2 ||
      output.shape()[0] != static_cast<int>(batch.size()))
    throw Error("loss: output " + shape_str(output.shape()) +
                " does not match batch of " + std::to_string(batch.size()));
  if (kind == data::TaskKind::kClassification) {
    std::vector<int> labels;
    labels.reserve(batch.size());
    for (const auto& s : batch) {
      const double l = s.label;
      if (l != std::floor(l))
        throw Error("loss: non-integer label " + std::to_string(l) +
                    " for classification");
      labels.push_back(static_cast<int>(l));
    }
    return ops::softmax_cross_entropy(g, output, labels);
  }
  if (output.shape()[1] != 1)
    throw Error("loss: regression output must be [batch x 1], got " +
                shape_str(output.shape()));
  Tensor targets({static_cast<int>(batch.size()), 1});
  for (std::size_t i = 0; i < batch.size(); ++i)
    targets.data()[i] = batch[i].label;
  return ops::mse(g, output, targets);
}

TextModel TextModel::for_task(const EncoderSpec& enc, const data::Task& task,
                              int head_hidden_dim) {
  HeadSpec head;
  head.kind = task.kind;
  head.num_classes = task.num_classes;
  head.input_dim = enc.rep_dim();
  head.hidden_dim = head_hidden_dim;
  head.dropout_rate = enc.dropout_rate;
  return TextModel(enc, head);
}

Tensor TextModel::episode_loss(Graph& g, const ParamSet& theta,
                               const ParamSet& w,
                               std::span<const Example> batch, Mode mode,
                               std::uint64_t rng_key, bool bind_theta) const {
  auto tokens = data::tokenize_batch(batch, enc_.vocab_size, enc_.max_len);
  Tensor rep = encode(g, theta, tokens, enc_, mode, rng_key, bind_theta);
  Tensor out = predict(g, w, rep, head_, mode, rng_key);
  return loss(g, out, batch, head_.kind);
}

std::vector<double> TextModel::scores(const ParamSet& theta, const ParamSet& w,
                                      std::span<const Example> batch) const {
  Graph g;
  auto tokens = data::tokenize_batch(batch, enc_.vocab_size, enc_.max_len);
  Tensor rep = encode(g, theta, tokens, enc_, Mode::kEval, 0, false);
  Tensor out = predict(g, w, rep, head_, Mode::kEval, 0, false);
  if (head_.kind == data::TaskKind::kClassification) {
    std::vector<double> preds(batch.size());
    const int c = head_.num_classes;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double* row = out.data() + i * c;
      int best = 0;
      for (int j = 1; j < c; ++j)
        if (row[j] > row[best]) best = j;
      preds[i] = best;
    }
    return preds;
  }
  return out.vec();
}

} // namespace mcl::nn
