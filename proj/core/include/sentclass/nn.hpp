#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentclass/corpus.hpp"
#include "sentclass/embeddings.hpp"
#include "sentclass/text.hpp"

namespace sentclass {

enum class Variant { word_cnn, pos_cnn, combined };

const char* variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::word_cnn;
  int word_dim = 100;
  int pos_dim = 20;
  std::vector<int> filter_widths{3, 5};
  int filters_per_width = 50;
  int merge_hidden = 64;  // combined variant only
  double dropout = 0.5;
  int max_len = 64;
  double learning_rate = 1e-3;
  int batch_size = 50;
  int epochs = 10;
  int vocab_min_count = 1;
  bool train_word_embeddings = true;  // non-static word branch
  uint64_t seed = 1;

  int max_filter_width() const;
  int pooled_per_branch() const;  // widths * filters_per_width
};

// Named parameter tensor with gradient and Adam state.
template <typename S>
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<S> value;
  std::vector<S> grad;
  std::vector<S> adam_m, adam_v;
  bool trainable = true;

  size_t size() const { return value.size(); }
  void resize(std::string tensor_name, std::vector<int> dims, bool train = true);
  void zero_grad();
};

// One convolution branch: an embedding matrix plus per-width kernel banks.
template <typename S>
struct Branch {
  Tensor<S> embed;                  // V x dim (row 0 = PAD, pinned to zero)
  std::vector<Tensor<S>> kernels;   // per width: filters x (width*dim)
  std::vector<Tensor<S>> biases;    // per width: filters
  int dim = 0;
};

enum class Mode { train, eval };

template <typename S>
struct ModelT {
  ModelConfig cfg;
  Vocabulary vocab;      // word vocabulary (word/combined variants)
  Vocabulary tag_vocab;  // tag vocabulary (pos/combined variants)
  std::optional<Branch<S>> word;
  std::optional<Branch<S>> pos;
  Tensor<S> merge_w, merge_b;  // combined only
  Tensor<S> out_w, out_b;      // 2 x head_input
  int64_t adam_step = 0;

  int head_input_size() const;
  std::vector<Tensor<S>*> tensors();
  std::vector<const Tensor<S>*> tensors() const;

  static ModelT init(ModelConfig cfg, Vocabulary vocab, Vocabulary tag_vocab,
                     const EmbeddingTable* pretrained);
};

using Model = ModelT<float>;

// relu convolution + max over valid positions only. pooled/argmax have
// pooled_per_branch() entries ordered (width asc, filter asc).
template <typename S>
void conv_max_pool(const Branch<S>& branch, const ModelConfig& cfg,
                   std::span<const int> indices, int true_length, std::span<S> pooled,
                   std::span<int> argmax);

template <typename S>
struct BatchResult {
  std::vector<std::array<double, 2>> probs;  // softmax rows (double precision)
  std::vector<std::array<S, 2>> logits;
  std::vector<int> predicted;
  double loss = 0;  // filled when labels were given
};

// Eval-mode forward never applies dropout; train mode draws inverted-dropout
// masks from dropout_rng.
template <typename S>
BatchResult<S> forward(const ModelT<S>& model, std::span<const EncodedSentence> batch,
                       Mode mode, std::mt19937_64* dropout_rng = nullptr);

// Mean over the batch of -log p(true class), p clamped to >= 1e-12.
double batch_loss(std::span<const std::array<double, 2>> probs, std::span<const int> labels);

// Analytic gradients of the clamped cross-entropy into Tensor::grad.
// dropout_rng == nullptr runs without dropout (used by grad checking).
// Returns the batch loss; *result_out (optional) receives the forward pass.
template <typename S>
double backward(ModelT<S>& model, std::span<const EncodedSentence> batch,
                std::span<const int> labels, std::mt19937_64* dropout_rng,
                BatchResult<S>* result_out = nullptr);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename S>
void adam_step(ModelT<S>& model, double lr, const AdamParams& hp = {});

template <typename S>
double backward_and_step(ModelT<S>& model, std::span<const EncodedSentence> batch,
                         std::span<const int> labels, double lr,
                         std::mt19937_64* dropout_rng, const AdamParams& hp = {});

// Central finite differences against the analytic gradients on up to
// samples_per_tensor randomly chosen entries of every tensor; returns the
// max relative error. Run with S = double.
template <typename S>
double grad_check(ModelT<S>& model, std::span<const EncodedSentence> batch,
                  std::span<const int> labels, double epsilon, int samples_per_tensor,
                  uint64_t seed);

struct EpochStats {
  double train_loss = 0;
  double train_accuracy = 0;
  double eval_accuracy = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double best_eval_accuracy = 0;
  int best_epoch = -1;  // 0-based
};

struct TrainResult {
  Model model;
  TrainReport report;
};

// Mini-batch training with per-epoch eval; returns the parameters from the
// best-eval epoch. Datasets must be tokenized (and tagged for pos variants).
TrainResult train_model(const ModelConfig& cfg, const LabeledDataset& train,
                        const LabeledDataset& eval, const EmbeddingTable* pretrained);

// Model body serialization (9 significant digits; exact float round trip).
void save_cnn(const Model& model, std::ostream& out);
Model load_cnn(std::istream& in);

// Encodes one tokenized example against the model vocabularies.
EncodedSentence encode_for_model(const ModelConfig& cfg, const Vocabulary& vocab,
                                 const Vocabulary& tag_vocab, const Example& example);

}  // namespace sentclass
