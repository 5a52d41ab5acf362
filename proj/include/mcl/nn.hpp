#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcl/data.hpp"
#include "mcl/paramset.hpp"
#include "mcl/tensor.hpp"

namespace mcl::nn {

// Representation network: embedding table, masked mean-pool over
// tokens, then a tanh MLP. The representation dimension is the last
// hidden dim.
struct EncoderSpec {
  int vocab_size = 4096;
  int embed_dim = 64;
  std::vector<int> hidden_dims = {128, 64};
  int max_len = 64;
  double dropout_rate = 0.1; // applied in the head, not the encoder

  int rep_dim() const {
    return hidden_dims.empty() ? embed_dim : hidden_dims.back();
  }
  void validate() const;
};

// Task head: linear, or one hidden relu layer when hidden_dim > 0.
struct HeadSpec {
  data::TaskKind kind = data::TaskKind::kClassification;
  int num_classes = 2; // classification only
  int input_dim = 64;
  int hidden_dim = 0;
  double dropout_rate = 0.1;

  int output_dim() const {
    return kind == data::TaskKind::kClassification ? num_classes : 1;
  }
  void validate() const;
};

// Scaled uniform init, bound sqrt(6 / (fan_in + fan_out)); zero biases.
// Deterministic in (spec, seed).
ParamSet init_rln(const EncoderSpec& spec, std::uint64_t seed);
ParamSet init_pln(const HeadSpec& spec, std::uint64_t seed);

// tokens -> [batch x rep_dim]. With bind_theta false the encoder
// parameters are treated as constants (no gradients flow to them).
Tensor encode(Graph& g, const ParamSet& theta, const data::TokenBatch& tokens,
              const EncoderSpec& spec, Mode mode, std::uint64_t rng_key,
              bool bind_theta = true);

// representation -> logits [batch x C] or scores [batch x 1].
Tensor predict(Graph& g, const ParamSet& w, const Tensor& rep,
               const HeadSpec& spec, Mode mode, std::uint64_t rng_key,
               bool bind_w = true);

// Batch-mean loss: softmax cross-entropy for classification, mse for
// regression. Targets come from the samples' labels.
Tensor loss(Graph& g, const Tensor& output, std::span<const data::Sample> batch,
            data::TaskKind kind);

// Encoder + head glued together; the episode model the meta-loops run.
class TextModel {
 public:
  using Example = data::Sample;

  TextModel(EncoderSpec enc, HeadSpec head) : enc_(enc), head_(head) {
    enc_.validate();
    head_.input_dim = enc_.rep_dim();
    head_.validate();
  }

  static TextModel for_task(const EncoderSpec& enc, const data::Task& task,
                            int head_hidden_dim = 0);

  Tensor episode_loss(Graph& g, const ParamSet& theta, const ParamSet& w,
                      std::span<const Example> batch, Mode mode,
                      std::uint64_t rng_key, bool bind_theta) const;

  // Eval-mode forward pass; returns flat scores (argmax class ids for
  // classification are up to the caller).
  std::vector<double> scores(const ParamSet& theta, const ParamSet& w,
                             std::span<const Example> batch) const;

  const EncoderSpec& encoder() const { return enc_; }
  const HeadSpec& head() const { return head_; }

 private:
  EncoderSpec enc_;
  HeadSpec head_;
};

} // namespace mcl::nn
