#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ospar/rng.hpp"
#include "ospar/span_chart.hpp"
#include "ospar/vocab.hpp"

namespace ospar {

/// Named row-major block of doubles.
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::string name, std::vector<int> shape);

  std::size_t size() const { return data.size(); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols(), static_cast<std::size_t>(cols())}; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols(), static_cast<std::size_t>(cols())};
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Ordered list of tensors; model parameters and their gradients share this
/// layout.
struct ParameterSet {
  std::vector<Tensor> tensors;

  ParameterSet zeros_like() const;
  void set_zero();
  void add_scaled(const ParameterSet& other, double scale);
  std::size_t num_values() const;
  /// Flat view by global coordinate, used by gradient checks and optimizers.
  double& value(std::size_t coordinate);
  bool all_finite() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

struct ScorerConfig {
  int embed_dim = 64;    // d, must be even
  int hidden_dim = 250;  // h
  int max_len = 128;     // sentences need n < max_len
  double ln_eps = 1e-5;

  friend bool operator==(const ScorerConfig&, const ScorerConfig&) = default;
};

class SentenceTooLong : public std::runtime_error {
 public:
  SentenceTooLong(int n, int max_len);
};

class NoCachedForward : public std::logic_error {
 public:
  NoCachedForward() : std::logic_error("backward called without a cached forward pass") {}
};

/// Which order heads score_spans evaluates. With LeftOnly the Right entries
/// of the chart stay zero; the baseline decoder reads only the Left slice.
enum class ScoreHeads { Both, LeftOnly };

/// Fenceposts h_0..h_n, each of dimension d.
struct Encoding {
  int n = 0;
  int dim = 0;
  std::vector<double> fenceposts;  // (n+1) x d

  std::span<const double> fencepost(int k) const {
    return {fenceposts.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
  }
};

/// Everything backward needs from one forward pass.
struct ForwardCache {
  std::vector<int> token_ids;  // <START> w_1 .. w_n <STOP>
  std::vector<double> inputs;  // (n+2) x 2d, [token ; position]
  std::vector<double> mixed;   // (n+2) x d, tanh output
  Encoding encoding;
  ScoreHeads heads = ScoreHeads::Both;
  struct Head {
    std::vector<double> projected;  // (n+1) x h, q_k = W1_fwd f_k - W1_bwd b_k
    std::vector<double> normalized;  // spans x h, LN output before gain/bias
    std::vector<double> inv_std;     // spans
    std::vector<double> activated;   // spans x h, after ReLU
  };
  Head head[kNumOrders];
  bool valid = false;
};

/// Desk-scale span scorer: token + position embeddings, one tanh mixing layer,
/// fencepost span vectors and two order-specific heads
/// s(i,j,o,.) = W_o2 ReLU(LN(W_o1 v(i,j) + b_o1)) + b_o2.
class ScorerModel {
 public:
  enum Slot : int { kTokenEmb = 0, kPositionEmb, kMixWeight, kMixBias, kHeadBase };
  enum HeadSlot : int { kW1 = 0, kB1, kLnGain, kLnBias, kW2, kB2, kHeadSlots };

  ScorerModel() = default;
  /// Zero parameters except unit layer-norm gains.
  ScorerModel(ScorerConfig config, Vocabulary tokens, Vocabulary labels);
  static ScorerModel random(ScorerConfig config, Vocabulary tokens, Vocabulary labels, Rng& rng);

  const ScorerConfig& config() const { return config_; }
  const Vocabulary& tokens() const { return tokens_; }
  const Vocabulary& labels() const { return labels_; }
  int num_labels() const { return labels_.size(); }

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  Tensor& tensor(int slot) { return params_.tensors.at(static_cast<std::size_t>(slot)); }
  const Tensor& tensor(int slot) const { return params_.tensors.at(static_cast<std::size_t>(slot)); }
  static int head_slot(Order o, HeadSlot s) { return kHeadBase + order_index(o) * kHeadSlots + s; }

  /// Word ids with <UNK> for out-of-vocabulary words.
  std::vector<int> token_ids(std::span<const std::string> words) const;

  friend bool operator==(const ScorerModel&, const ScorerModel&) = default;

 private:
  ScorerConfig config_;
  Vocabulary tokens_;
  Vocabulary labels_;
  ParameterSet params_;
};

/// Fencepost encoding of a sentence given word ids (no sentinels).
Encoding encode(const ScorerModel& model, std::span<const int> word_ids, ForwardCache* cache = nullptr);

/// v(i,j) = [fwd(h_j) - fwd(h_i) ; bwd(h_i) - bwd(h_j)], fwd/bwd being the
/// first and second halves of each fencepost. Fencepost k holds the forward
/// half of the token left of boundary k and the backward half of the token
/// right of it, so the backward difference covers the paper-style (i+1, j+1)
/// token indices.
std::vector<double> span_vector(const Encoding& encoding, int i, int j);

SpanScoreChart score_spans(const ScorerModel& model, std::span<const int> word_ids, ForwardCache* cache = nullptr,
                           ScoreHeads heads = ScoreHeads::Both);

/// Accumulates into `grads` the gradient of sum(output_grad * chart) with
/// respect to every parameter.
void backward(const ScorerModel& model, const ForwardCache& cache, const SpanScoreChart& output_grad,
              ParameterSet& grads);

/// Layer norm without gain/bias; exposed for invariant tests.
void layer_norm(std::span<const double> in, std::span<double> out, double eps, double* inv_std = nullptr);

}  // namespace ospar
