#include "sentclass/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <utility>

#include "sentclass/error.hpp"
#include "sentclass/rng.hpp"

namespace sentclass {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::word_cnn: return "word_cnn";
    case Variant::pos_cnn: return "pos_cnn";
    case Variant::combined: return "combined";
  }
  fail("unknown variant value");
}

Variant parse_variant(std::string_view name) {
  if (name == "word_cnn") return Variant::word_cnn;
  if (name == "pos_cnn") return Variant::pos_cnn;
  if (name == "combined") return Variant::combined;
  fail("unknown classifier variant '" + std::string(name) +
       "' (expected word_cnn, pos_cnn or combined)");
}

int ModelConfig::max_filter_width() const {
  if (filter_widths.empty()) fail("model config has no filter widths");
  return *std::max_element(filter_widths.begin(), filter_widths.end());
}

int ModelConfig::pooled_per_branch() const {
  return static_cast<int>(filter_widths.size()) * filters_per_width;
}

template <typename S>
void Tensor<S>::resize(std::string tensor_name, std::vector<int> dims, bool train) {
  name = std::move(tensor_name);
  shape = std::move(dims);
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) fail("tensor " + name + ": non-positive dimension");
    n *= static_cast<size_t>(d);
  }
  value.assign(n, S{0});
  grad.assign(n, S{0});
  adam_m.assign(n, S{0});
  adam_v.assign(n, S{0});
  trainable = train;
}

template <typename S>
void Tensor<S>::zero_grad() {
  std::fill(grad.begin(), grad.end(), S{0});
}

namespace {

void validate_config(const ModelConfig& cfg) {
  if (cfg.filter_widths.empty()) fail("model config: no filter widths");
  for (int w : cfg.filter_widths) {
    if (w < 1) fail("model config: filter width must be >= 1");
    if (w > cfg.max_len) fail("model config: filter width " + std::to_string(w) +
                              " exceeds max_len " + std::to_string(cfg.max_len));
  }
  if (cfg.filters_per_width < 1) fail("model config: filters per width must be >= 1");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) fail("model config: dropout must be in [0, 1)");
  if (cfg.max_len < 1) fail("model config: max_len must be >= 1");
  if (cfg.word_dim < 1 || cfg.pos_dim < 1) fail("model config: embedding dims must be >= 1");
  if (cfg.variant == Variant::combined && cfg.merge_hidden < 1) {
    fail("model config: merge hidden units must be >= 1");
  }
  if (cfg.batch_size < 1) fail("model config: batch size must be >= 1");
  if (cfg.vocab_min_count < 1) fail("model config: vocab min count must be >= 1");
}

}  // namespace

template <typename S>
int ModelT<S>::head_input_size() const {
  return cfg.variant == Variant::combined ? cfg.merge_hidden : cfg.pooled_per_branch();
}

template <typename S>
std::vector<Tensor<S>*> ModelT<S>::tensors() {
  std::vector<Tensor<S>*> out;
  auto add_branch = [&out](std::optional<Branch<S>>& b) {
    if (!b) return;
    out.push_back(&b->embed);
    for (auto& k : b->kernels) out.push_back(&k);
    for (auto& v : b->biases) out.push_back(&v);
  };
  add_branch(word);
  add_branch(pos);
  if (cfg.variant == Variant::combined) {
    out.push_back(&merge_w);
    out.push_back(&merge_b);
  }
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

template <typename S>
std::vector<const Tensor<S>*> ModelT<S>::tensors() const {
  auto mutable_list = const_cast<ModelT<S>*>(this)->tensors();
  return std::vector<const Tensor<S>*>(mutable_list.begin(), mutable_list.end());
}

template <typename S>
ModelT<S> ModelT<S>::init(ModelConfig cfg, Vocabulary vocab, Vocabulary tag_vocab,
                          const EmbeddingTable* pretrained) {
  std::sort(cfg.filter_widths.begin(), cfg.filter_widths.end());
  cfg.filter_widths.erase(std::unique(cfg.filter_widths.begin(), cfg.filter_widths.end()),
                          cfg.filter_widths.end());
  validate_config(cfg);

  ModelT m;
  m.cfg = cfg;
  m.vocab = std::move(vocab);
  m.tag_vocab = std::move(tag_vocab);

  auto rng = substream(cfg.seed, "nn.init");
  auto glorot = [&rng](Tensor<S>& t, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (S& x : t.value) x = static_cast<S>(uniform_range(rng, -limit, limit));
  };

  auto make_branch = [&](const Vocabulary& v, int dim, const EmbeddingTable* table,
                         uint64_t embed_seed, const std::string& prefix, bool embed_trainable) {
    Branch<S> b;
    b.dim = dim;
    EmbeddingMatrix rows = init_for_vocab(table, v, dim, embed_seed);
    b.embed.resize(prefix + ".embed", {v.size(), dim}, embed_trainable);
    for (size_t i = 0; i < rows.values.size(); ++i) b.embed.value[i] = static_cast<S>(rows.values[i]);
    for (int h : cfg.filter_widths) {
      Tensor<S> k, bias;
      k.resize(prefix + ".conv" + std::to_string(h) + ".w", {cfg.filters_per_width, h * dim});
      glorot(k, h * dim, cfg.filters_per_width);
      bias.resize(prefix + ".conv" + std::to_string(h) + ".b", {cfg.filters_per_width});
      b.kernels.push_back(std::move(k));
      b.biases.push_back(std::move(bias));
    }
    return b;
  };

  if (cfg.variant != Variant::pos_cnn) {
    m.word = make_branch(m.vocab, cfg.word_dim, pretrained, substream_seed(cfg.seed, "nn.word"),
                         "word", cfg.train_word_embeddings);
  }
  if (cfg.variant != Variant::word_cnn) {
    m.pos = make_branch(m.tag_vocab, cfg.pos_dim, nullptr, substream_seed(cfg.seed, "nn.pos"),
                        "pos", true);
  }
  if (cfg.variant == Variant::combined) {
    const int concat = 2 * cfg.pooled_per_branch();
    m.merge_w.resize("merge.w", {cfg.merge_hidden, concat});
    glorot(m.merge_w, concat, cfg.merge_hidden);
    m.merge_b.resize("merge.b", {cfg.merge_hidden});
  }
  const int head_in = m.head_input_size();
  m.out_w.resize("out.w", {2, head_in});
  glorot(m.out_w, head_in, 2);
  m.out_b.resize("out.b", {2});
  return m;
}

template <typename S>
void conv_max_pool(const Branch<S>& branch, const ModelConfig& cfg, std::span<const int> indices,
                   int true_length, std::span<S> pooled, std::span<int> argmax) {
  const int dim = branch.dim;
  const int n_filters = cfg.filters_per_width;
  if (pooled.size() != static_cast<size_t>(cfg.pooled_per_branch()) ||
      argmax.size() != pooled.size()) {
    fail("conv_max_pool: output span size mismatch");
  }
  if (true_length > static_cast<int>(indices.size())) fail("conv_max_pool: true_length exceeds encoding");
  const S* embed = branch.embed.value.data();
  for (size_t wi = 0; wi < cfg.filter_widths.size(); ++wi) {
    const int h = cfg.filter_widths[wi];
    if (true_length < h) {
      fail("conv_max_pool: sentence length " + std::to_string(true_length) +
           " shorter than filter width " + std::to_string(h));
    }
    const int span = h * dim;
    const Tensor<S>& kernels = branch.kernels[wi];
    const Tensor<S>& biases = branch.biases[wi];
    for (int f = 0; f < n_filters; ++f) {
      const S* k = kernels.value.data() + static_cast<size_t>(f) * span;
      S best = S{0};
      int best_t = 0;
      for (int t = 0; t + h <= true_length; ++t) {
        S z = biases.value[static_cast<size_t>(f)];
        for (int r = 0; r < h; ++r) {
          const S* e = embed + static_cast<size_t>(indices[static_cast<size_t>(t + r)]) * dim;
          const S* kr = k + static_cast<size_t>(r) * dim;
          for (int j = 0; j < dim; ++j) z += kr[j] * e[j];
        }
        const S a = z > S{0} ? z : S{0};
        if (t == 0 || a > best) {
          best = a;
          best_t = t;
        }
      }
      pooled[wi * static_cast<size_t>(n_filters) + f] = best;
      argmax[wi * static_cast<size_t>(n_filters) + f] = best_t;
    }
  }
}

namespace {

// Everything the backward pass needs from one example's forward pass.
template <typename S>
struct Trace {
  std::vector<S> pooled_word, pooled_pos;
  std::vector<int> argmax_word, argmax_pos;
  std::vector<S> concat;      // combined: input to the merge layer
  std::vector<S> merge_pre;   // combined: merge activations before relu
  std::vector<S> drop_scale;  // 0 or 1/keep per element; empty = dropout off
  std::vector<S> head_in;     // the vector the output layer saw
  std::array<S, 2> logits{};
  std::array<double, 2> probs{};
};

template <typename S>
void forward_one(const ModelT<S>& model, const EncodedSentence& enc, Mode mode,
                 std::mt19937_64* dropout_rng, Trace<S>& tr) {
  const ModelConfig& cfg = model.cfg;
  const size_t pooled_len = static_cast<size_t>(cfg.pooled_per_branch());
  if (model.word) {
    tr.pooled_word.resize(pooled_len);
    tr.argmax_word.resize(pooled_len);
    conv_max_pool(*model.word, cfg, enc.indices, enc.true_length, std::span<S>(tr.pooled_word),
                  std::span<int>(tr.argmax_word));
  }
  if (model.pos) {
    if (enc.pos_indices.empty()) {
      fail(std::string(variant_name(cfg.variant)) + " classifier needs POS-tagged input");
    }
    tr.pooled_pos.resize(pooled_len);
    tr.argmax_pos.resize(pooled_len);
    conv_max_pool(*model.pos, cfg, enc.pos_indices, enc.true_length, std::span<S>(tr.pooled_pos),
                  std::span<int>(tr.argmax_pos));
  }

  std::vector<S> head;
  if (cfg.variant == Variant::combined) {
    tr.concat.assign(tr.pooled_word.begin(), tr.pooled_word.end());
    tr.concat.insert(tr.concat.end(), tr.pooled_pos.begin(), tr.pooled_pos.end());
    const size_t concat_len = tr.concat.size();
    tr.merge_pre.resize(static_cast<size_t>(cfg.merge_hidden));
    head.resize(static_cast<size_t>(cfg.merge_hidden));
    for (int i = 0; i < cfg.merge_hidden; ++i) {
      S z = model.merge_b.value[static_cast<size_t>(i)];
      const S* w = model.merge_w.value.data() + static_cast<size_t>(i) * concat_len;
      for (size_t j = 0; j < concat_len; ++j) z += w[j] * tr.concat[j];
      tr.merge_pre[static_cast<size_t>(i)] = z;
      head[static_cast<size_t>(i)] = z > S{0} ? z : S{0};
    }
  } else {
    head = model.word ? tr.pooled_word : tr.pooled_pos;
  }

  tr.drop_scale.clear();
  if (mode == Mode::train && dropout_rng != nullptr && cfg.dropout > 0.0) {
    const double keep = 1.0 - cfg.dropout;
    tr.drop_scale.resize(head.size());
    for (size_t i = 0; i < head.size(); ++i) {
      const S scale = uniform_real(*dropout_rng) < keep ? static_cast<S>(1.0 / keep) : S{0};
      tr.drop_scale[i] = scale;
      head[i] *= scale;
    }
  }
  tr.head_in = std::move(head);

  for (int o = 0; o < 2; ++o) {
    S z = model.out_b.value[static_cast<size_t>(o)];
    const S* w = model.out_w.value.data() + static_cast<size_t>(o) * tr.head_in.size();
    for (size_t j = 0; j < tr.head_in.size(); ++j) z += w[j] * tr.head_in[j];
    tr.logits[static_cast<size_t>(o)] = z;
  }

  // softmax in double so row sums hold to 1e-9 even when S is float
  const double l0 = static_cast<double>(tr.logits[0]);
  const double l1 = static_cast<double>(tr.logits[1]);
  const double top = std::max(l0, l1);
  const double e0 = std::exp(l0 - top);
  const double e1 = std::exp(l1 - top);
  tr.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

template <typename S>
void conv_backward(Branch<S>& branch, const ModelConfig& cfg, std::span<const int> indices,
                   const std::vector<double>& d_pooled, const std::vector<S>& pooled,
                   const std::vector<int>& argmax) {
  const int dim = branch.dim;
  const int n_filters = cfg.filters_per_width;
  const S* embed = branch.embed.value.data();
  S* embed_grad = branch.embed.grad.data();
  for (size_t wi = 0; wi < cfg.filter_widths.size(); ++wi) {
    const int h = cfg.filter_widths[wi];
    const int span = h * dim;
    Tensor<S>& kernels = branch.kernels[wi];
    Tensor<S>& biases = branch.biases[wi];
    for (int f = 0; f < n_filters; ++f) {
      const size_t p = wi * static_cast<size_t>(n_filters) + f;
      const double g = d_pooled[p];
      if (g == 0.0 || !(pooled[p] > S{0})) continue;  // relu gate at the pooled maximum
      const int t = argmax[p];
      biases.grad[static_cast<size_t>(f)] += static_cast<S>(g);
      S* kg = kernels.grad.data() + static_cast<size_t>(f) * span;
      const S* kv = kernels.value.data() + static_cast<size_t>(f) * span;
      for (int r = 0; r < h; ++r) {
        const int row = indices[static_cast<size_t>(t + r)];
        const S* e = embed + static_cast<size_t>(row) * dim;
        for (int j = 0; j < dim; ++j) kg[r * dim + j] += static_cast<S>(g * static_cast<double>(e[j]));
        if (row == Vocabulary::kPad) continue;  // PAD row stays pinned to zero
        S* eg = embed_grad + static_cast<size_t>(row) * dim;
        for (int j = 0; j < dim; ++j) eg[j] += static_cast<S>(g * static_cast<double>(kv[r * dim + j]));
      }
    }
  }
}

int predicted_of(const std::array<double, 2>& probs) { return probs[1] > probs[0] ? 1 : 0; }

}  // namespace

template <typename S>
BatchResult<S> forward(const ModelT<S>& model, std::span<const EncodedSentence> batch, Mode mode,
                       std::mt19937_64* dropout_rng) {
  if (batch.empty()) fail("forward: empty batch");
  BatchResult<S> out;
  out.probs.reserve(batch.size());
  out.logits.reserve(batch.size());
  out.predicted.reserve(batch.size());
  Trace<S> tr;
  for (const EncodedSentence& enc : batch) {
    forward_one(model, enc, mode, dropout_rng, tr);
    out.probs.push_back(tr.probs);
    out.logits.push_back(tr.logits);
    out.predicted.push_back(predicted_of(tr.probs));
  }
  return out;
}

double batch_loss(std::span<const std::array<double, 2>> probs, std::span<const int> labels) {
  if (probs.empty()) fail("batch_loss: empty batch");
  if (probs.size() != labels.size()) fail("batch_loss: probabilities/labels size mismatch");
  double total = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const int y = labels[i];
    if (y != 0 && y != 1) fail("batch_loss: label out of range");
    total += -std::log(std::max(probs[i][static_cast<size_t>(y)], 1e-12));
  }
  return total / static_cast<double>(probs.size());
}

template <typename S>
double backward(ModelT<S>& model, std::span<const EncodedSentence> batch,
                std::span<const int> labels, std::mt19937_64* dropout_rng,
                BatchResult<S>* result_out) {
  if (batch.empty()) fail("backward: empty batch");
  if (labels.size() != batch.size()) fail("backward: labels do not match batch");
  for (Tensor<S>* t : model.tensors()) t->zero_grad();

  const ModelConfig& cfg = model.cfg;
  const size_t pooled_len = static_cast<size_t>(cfg.pooled_per_branch());
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  BatchResult<S> result;
  double total_loss = 0.0;
  Trace<S> tr;

  for (size_t i = 0; i < batch.size(); ++i) {
    forward_one(model, batch[i], Mode::train, dropout_rng, tr);
    const int y = labels[i];
    if (y != 0 && y != 1) fail("backward: label out of range");
    total_loss += -std::log(std::max(tr.probs[static_cast<size_t>(y)], 1e-12));
    if (result_out != nullptr) {
      result.probs.push_back(tr.probs);
      result.logits.push_back(tr.logits);
      result.predicted.push_back(predicted_of(tr.probs));
    }

    // Below the clamp the loss is flat, so the example contributes no gradient.
    std::array<double, 2> d_logit{0.0, 0.0};
    if (tr.probs[static_cast<size_t>(y)] >= 1e-12) {
      d_logit[0] = (tr.probs[0] - (y == 0 ? 1.0 : 0.0)) * inv_batch;
      d_logit[1] = (tr.probs[1] - (y == 1 ? 1.0 : 0.0)) * inv_batch;
    }

    const size_t head_len = tr.head_in.size();
    std::vector<double> d_head(head_len, 0.0);
    for (int o = 0; o < 2; ++o) {
      model.out_b.grad[static_cast<size_t>(o)] += static_cast<S>(d_logit[static_cast<size_t>(o)]);
      S* wg = model.out_w.grad.data() + static_cast<size_t>(o) * head_len;
      const S* wv = model.out_w.value.data() + static_cast<size_t>(o) * head_len;
      for (size_t j = 0; j < head_len; ++j) {
        wg[j] += static_cast<S>(d_logit[static_cast<size_t>(o)] * static_cast<double>(tr.head_in[j]));
        d_head[j] += d_logit[static_cast<size_t>(o)] * static_cast<double>(wv[j]);
      }
    }
    if (!tr.drop_scale.empty()) {
      for (size_t j = 0; j < head_len; ++j) d_head[j] *= static_cast<double>(tr.drop_scale[j]);
    }

    std::vector<double> d_pooled_word, d_pooled_pos;
    if (cfg.variant == Variant::combined) {
      const size_t concat_len = tr.concat.size();
      std::vector<double> d_concat(concat_len, 0.0);
      for (int m = 0; m < cfg.merge_hidden; ++m) {
        const double dm = tr.merge_pre[static_cast<size_t>(m)] > S{0} ? d_head[static_cast<size_t>(m)] : 0.0;
        if (dm == 0.0) continue;
        model.merge_b.grad[static_cast<size_t>(m)] += static_cast<S>(dm);
        S* wg = model.merge_w.grad.data() + static_cast<size_t>(m) * concat_len;
        const S* wv = model.merge_w.value.data() + static_cast<size_t>(m) * concat_len;
        for (size_t j = 0; j < concat_len; ++j) {
          wg[j] += static_cast<S>(dm * static_cast<double>(tr.concat[j]));
          d_concat[j] += dm * static_cast<double>(wv[j]);
        }
      }
      d_pooled_word.assign(d_concat.begin(), d_concat.begin() + static_cast<long>(pooled_len));
      d_pooled_pos.assign(d_concat.begin() + static_cast<long>(pooled_len), d_concat.end());
    } else if (model.word) {
      d_pooled_word = std::move(d_head);
    } else {
      d_pooled_pos = std::move(d_head);
    }

    if (model.word && !d_pooled_word.empty()) {
      conv_backward(*model.word, cfg, batch[i].indices, d_pooled_word, tr.pooled_word,
                    tr.argmax_word);
    }
    if (model.pos && !d_pooled_pos.empty()) {
      conv_backward(*model.pos, cfg, batch[i].pos_indices, d_pooled_pos, tr.pooled_pos,
                    tr.argmax_pos);
    }
  }

  total_loss *= inv_batch;
  if (result_out != nullptr) {
    result.loss = total_loss;
    *result_out = std::move(result);
  }
  return total_loss;
}

template <typename S>
void adam_step(ModelT<S>& model, double lr, const AdamParams& hp) {
  model.adam_step += 1;
  const double t = static_cast<double>(model.adam_step);
  const double bias1 = 1.0 - std::pow(hp.beta1, t);
  const double bias2 = 1.0 - std::pow(hp.beta2, t);
  for (Tensor<S>* tensor : model.tensors()) {
    if (!tensor->trainable) continue;
    for (size_t i = 0; i < tensor->size(); ++i) {
      const double g = static_cast<double>(tensor->grad[i]);
      const double m = hp.beta1 * static_cast<double>(tensor->adam_m[i]) + (1.0 - hp.beta1) * g;
      const double v = hp.beta2 * static_cast<double>(tensor->adam_v[i]) + (1.0 - hp.beta2) * g * g;
      tensor->adam_m[i] = static_cast<S>(m);
      tensor->adam_v[i] = static_cast<S>(v);
      const double step = lr * (m / bias1) / (std::sqrt(v / bias2) + hp.eps);
      tensor->value[i] = static_cast<S>(static_cast<double>(tensor->value[i]) - step);
    }
  }
}

template <typename S>
double backward_and_step(ModelT<S>& model, std::span<const EncodedSentence> batch,
                         std::span<const int> labels, double lr, std::mt19937_64* dropout_rng,
                         const AdamParams& hp) {
  const double loss = backward(model, batch, labels, dropout_rng);
  adam_step(model, lr, hp);
  return loss;
}

template <typename S>
double grad_check(ModelT<S>& model, std::span<const EncodedSentence> batch,
                  std::span<const int> labels, double epsilon, int samples_per_tensor,
                  uint64_t seed) {
  if (epsilon <= 0.0) fail("grad_check: epsilon must be positive");
  if (samples_per_tensor < 1) fail("grad_check: need at least one sample per tensor");
  backward(model, batch, labels, nullptr);  // analytic gradients, dropout off

  auto loss_now = [&]() {
    BatchResult<S> r = forward(model, batch, Mode::eval);
    return batch_loss(r.probs, labels);
  };

  auto rng = substream(seed, "gradcheck");
  double worst = 0.0;
  for (Tensor<S>* t : model.tensors()) {
    // Row 0 of an embedding tensor is the pinned PAD row: its gradient is
    // masked by design, so finite differences are not comparable there.
    size_t lo = 0;
    if ((model.word && t == &model.word->embed) || (model.pos && t == &model.pos->embed)) {
      lo = static_cast<size_t>(t->shape[1]);
    }
    if (t->size() <= lo) continue;
    for (int s = 0; s < samples_per_tensor; ++s) {
      const size_t i = lo + uniform_index(rng, t->size() - lo);
      const S saved = t->value[i];
      t->value[i] = static_cast<S>(static_cast<double>(saved) + epsilon);
      const double f_plus = loss_now();
      t->value[i] = static_cast<S>(static_cast<double>(saved) - epsilon);
      const double f_minus = loss_now();
      t->value[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
      const double analytic = static_cast<double>(t->grad[i]);
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

namespace {

double eval_accuracy_of(const Model& model, const std::vector<EncodedSentence>& encoded,
                        const std::vector<int>& labels, int batch_size) {
  if (encoded.empty()) return 0.0;
  int64_t correct = 0;
  for (size_t start = 0; start < encoded.size(); start += static_cast<size_t>(batch_size)) {
    const size_t count = std::min(encoded.size() - start, static_cast<size_t>(batch_size));
    BatchResult<float> r =
        forward(model, std::span<const EncodedSentence>(encoded.data() + start, count), Mode::eval);
    for (size_t k = 0; k < count; ++k) {
      if (r.predicted[k] == labels[start + k]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(encoded.size());
}

}  // namespace

TrainResult train_model(const ModelConfig& cfg, const LabeledDataset& train,
                        const LabeledDataset& eval, const EmbeddingTable* pretrained) {
  if (train.empty()) fail("train_model: empty training set");
  if (cfg.epochs < 1) fail("train_model: epochs must be >= 1");
  const bool needs_word = cfg.variant != Variant::pos_cnn;
  const bool needs_pos = cfg.variant != Variant::word_cnn;

  Vocabulary vocab;
  Vocabulary tag_vocab;
  if (needs_word) vocab = build_vocab(train, cfg.vocab_min_count);
  if (needs_pos) tag_vocab = build_tag_vocab(train);
  Model model =
      Model::init(cfg, std::move(vocab), std::move(tag_vocab), needs_word ? pretrained : nullptr);

  auto encode_all = [&model](const LabeledDataset& data, const char* which) {
    std::vector<EncodedSentence> out;
    out.reserve(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
      try {
        out.push_back(encode_for_model(model.cfg, model.vocab, model.tag_vocab, data.examples[i]));
      } catch (const Error& e) {
        fail(std::string(which) + " example " + std::to_string(i) + ": " + e.what());
      }
    }
    return out;
  };
  const std::vector<EncodedSentence> train_enc = encode_all(train, "train");
  const std::vector<EncodedSentence> eval_enc = encode_all(eval, "eval");
  std::vector<int> train_labels, eval_labels;
  for (const Example& ex : train.examples) train_labels.push_back(ex.label);
  for (const Example& ex : eval.examples) eval_labels.push_back(ex.label);

  TrainResult result;
  result.report.best_eval_accuracy = -1.0;  // first epoch always becomes the incumbent
  Model best = model;

  std::vector<size_t> order(train_enc.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto shuffle_rng = substream(cfg.seed, "nn.shuffle", static_cast<uint64_t>(epoch));
    shuffle_vec(order, shuffle_rng);
    auto dropout_rng = substream(cfg.seed, "nn.dropout", static_cast<uint64_t>(epoch));

    double loss_sum = 0.0;
    int64_t correct = 0;
    std::vector<EncodedSentence> batch;
    std::vector<int> batch_labels;
    BatchResult<float> seen;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      batch.clear();
      batch_labels.clear();
      for (size_t k = start; k < end; ++k) {
        batch.push_back(train_enc[order[k]]);
        batch_labels.push_back(train_labels[order[k]]);
      }
      const double loss = backward(model, batch, batch_labels, &dropout_rng, &seen);
      adam_step(model, cfg.learning_rate);
      loss_sum += loss * static_cast<double>(batch.size());
      for (size_t k = 0; k < batch.size(); ++k) {
        if (seen.predicted[k] == batch_labels[k]) ++correct;
      }
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(train_enc.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_enc.size());
    stats.eval_accuracy = eval_accuracy_of(model, eval_enc, eval_labels, cfg.batch_size);
    result.report.epochs.push_back(stats);
    if (stats.eval_accuracy > result.report.best_eval_accuracy) {
      result.report.best_eval_accuracy = stats.eval_accuracy;
      result.report.best_epoch = epoch;
      best = model;
    }
  }
  result.model = std::move(best);
  return result;
}

namespace {

void write_real(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

void write_vocab(std::ostream& out, const char* label, const Vocabulary& vocab) {
  out << label << ' ' << vocab.size() << "\n";
  for (int i = 0; i < vocab.size(); ++i) {
    const std::string& token = vocab.token(i);
    for (char c : token) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        fail("cnn save: vocabulary token contains whitespace: '" + token + "'");
      }
    }
    out << token << "\n";
  }
}

Vocabulary read_vocab(std::istream& in, const char* label, const std::string& path_hint) {
  std::string key;
  int count = 0;
  if (!(in >> key >> count) || key != label || count < 2) {
    fail("cnn load: expected " + std::string(label) + " section" + path_hint);
  }
  Vocabulary vocab;
  std::string token;
  for (int i = 0; i < count; ++i) {
    if (!(in >> token)) fail("cnn load: truncated " + std::string(label) + " section" + path_hint);
    if (i < 2) {
      if (token != vocab.token(i)) fail("cnn load: reserved token mismatch" + path_hint);
    } else {
      vocab.add(token);
    }
  }
  return vocab;
}

}  // namespace

void save_cnn(const Model& model, std::ostream& out) {
  const ModelConfig& cfg = model.cfg;
  out << "sentclass-cnn v1\n";
  out << "variant " << variant_name(cfg.variant) << "\n";
  out << "word_dim " << cfg.word_dim << "\n";
  out << "pos_dim " << cfg.pos_dim << "\n";
  out << "filter_widths " << cfg.filter_widths.size();
  for (int w : cfg.filter_widths) out << ' ' << w;
  out << "\n";
  out << "filters_per_width " << cfg.filters_per_width << "\n";
  out << "merge_hidden " << cfg.merge_hidden << "\n";
  out << "dropout ";
  write_real(out, cfg.dropout);
  out << "\n";
  out << "max_len " << cfg.max_len << "\n";
  out << "learning_rate ";
  write_real(out, cfg.learning_rate);
  out << "\n";
  out << "batch_size " << cfg.batch_size << "\n";
  out << "epochs " << cfg.epochs << "\n";
  out << "vocab_min_count " << cfg.vocab_min_count << "\n";
  out << "train_word_embeddings " << (cfg.train_word_embeddings ? 1 : 0) << "\n";
  out << "seed " << cfg.seed << "\n";
  write_vocab(out, "vocab", model.vocab);
  write_vocab(out, "tag_vocab", model.tag_vocab);
  for (const Tensor<float>* t : model.tensors()) {
    out << "tensor " << t->name << ' ' << t->shape.size();
    for (int d : t->shape) out << ' ' << d;
    out << ' ' << (t->trainable ? 1 : 0) << "\n";
    const size_t per_row = t->size() / static_cast<size_t>(t->shape[0]);
    char buf[64];
    for (size_t i = 0; i < t->size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(t->value[i]));
      out << buf << ((i + 1) % per_row == 0 ? '\n' : ' ');
    }
  }
  out << "end\n";
  if (!out) fail("cnn save: write failure");
}

Model load_cnn(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "sentclass-cnn v1") {
    fail("cnn load: not a recognized model file (bad or missing header)");
  }
  ModelConfig cfg;
  std::string key;
  // fixed key order, matching save_cnn
  auto expect_key = [&](const char* want) {
    if (!(in >> key) || key != want) fail("cnn load: expected key '" + std::string(want) + "'");
  };
  std::string variant_token;
  expect_key("variant");
  in >> variant_token;
  cfg.variant = parse_variant(variant_token);
  expect_key("word_dim");
  in >> cfg.word_dim;
  expect_key("pos_dim");
  in >> cfg.pos_dim;
  expect_key("filter_widths");
  size_t n_widths = 0;
  in >> n_widths;
  if (!in || n_widths == 0 || n_widths > 64) fail("cnn load: bad filter width list");
  cfg.filter_widths.assign(n_widths, 0);
  for (size_t i = 0; i < n_widths; ++i) in >> cfg.filter_widths[i];
  expect_key("filters_per_width");
  in >> cfg.filters_per_width;
  expect_key("merge_hidden");
  in >> cfg.merge_hidden;
  expect_key("dropout");
  in >> cfg.dropout;
  expect_key("max_len");
  in >> cfg.max_len;
  expect_key("learning_rate");
  in >> cfg.learning_rate;
  expect_key("batch_size");
  in >> cfg.batch_size;
  expect_key("epochs");
  in >> cfg.epochs;
  expect_key("vocab_min_count");
  in >> cfg.vocab_min_count;
  expect_key("train_word_embeddings");
  int twe = 1;
  in >> twe;
  cfg.train_word_embeddings = twe != 0;
  expect_key("seed");
  in >> cfg.seed;
  if (!in) fail("cnn load: malformed configuration section");

  Vocabulary vocab = read_vocab(in, "vocab", "");
  Vocabulary tag_vocab = read_vocab(in, "tag_vocab", "");
  Model model = Model::init(cfg, std::move(vocab), std::move(tag_vocab), nullptr);

  std::vector<Tensor<float>*> tensors = model.tensors();
  std::vector<bool> filled(tensors.size(), false);
  while (true) {
    if (!(in >> key)) fail("cnn load: truncated before 'end'");
    if (key == "end") break;
    if (key != "tensor") fail("cnn load: unexpected token '" + key + "'");
    std::string name;
    size_t ndims = 0;
    in >> name >> ndims;
    if (!in || ndims == 0 || ndims > 8) fail("cnn load: bad tensor header for '" + name + "'");
    std::vector<int> shape(ndims, 0);
    for (size_t i = 0; i < ndims; ++i) in >> shape[i];
    int trainable = 1;
    in >> trainable;
    if (!in) fail("cnn load: bad tensor header for '" + name + "'");

    size_t slot = tensors.size();
    for (size_t i = 0; i < tensors.size(); ++i) {
      if (tensors[i]->name == name) slot = i;
    }
    if (slot == tensors.size()) fail("cnn load: unknown tensor '" + name + "'");
    Tensor<float>* t = tensors[slot];
    if (filled[slot]) fail("cnn load: duplicate tensor '" + name + "'");
    if (t->shape != shape) fail("cnn load: shape mismatch for tensor '" + name + "'");
    t->trainable = trainable != 0;
    for (size_t i = 0; i < t->size(); ++i) {
      if (!(in >> t->value[i])) fail("cnn load: truncated values for tensor '" + name + "'");
    }
    filled[slot] = true;
  }
  for (size_t i = 0; i < tensors.size(); ++i) {
    if (!filled[i]) fail("cnn load: missing tensor '" + tensors[i]->name + "'");
  }
  return model;
}

EncodedSentence encode_for_model(const ModelConfig& cfg, const Vocabulary& vocab,
                                 const Vocabulary& tag_vocab, const Example& example) {
  const bool needs_pos = cfg.variant != Variant::word_cnn;
  if (needs_pos && example.pos_tags.empty() && !example.tokens.empty()) {
    fail(std::string(variant_name(cfg.variant)) + " classifier needs POS-tagged input");
  }
  return encode(example.tokens, needs_pos ? &example.pos_tags : nullptr, vocab,
                needs_pos ? &tag_vocab : nullptr, cfg.max_len, cfg.max_filter_width());
}

template struct Tensor<float>;
template struct Tensor<double>;
template struct ModelT<float>;
template struct ModelT<double>;

template void conv_max_pool<float>(const Branch<float>&, const ModelConfig&, std::span<const int>,
                                   int, std::span<float>, std::span<int>);
template void conv_max_pool<double>(const Branch<double>&, const ModelConfig&, std::span<const int>,
                                    int, std::span<double>, std::span<int>);
template BatchResult<float> forward<float>(const ModelT<float>&, std::span<const EncodedSentence>,
                                           Mode, std::mt19937_64*);
template BatchResult<double> forward<double>(const ModelT<double>&, std::span<const EncodedSentence>,
                                             Mode, std::mt19937_64*);
template double backward<float>(ModelT<float>&, std::span<const EncodedSentence>,
                                std::span<const int>, std::mt19937_64*, BatchResult<float>*);
template double backward<double>(ModelT<double>&, std::span<const EncodedSentence>,
                                 std::span<const int>, std::mt19937_64*, BatchResult<double>*);
template void adam_step<float>(ModelT<float>&, double, const AdamParams&);
template void adam_step<double>(ModelT<double>&, double, const AdamParams&);
template double backward_and_step<float>(ModelT<float>&, std::span<const EncodedSentence>,
                                         std::span<const int>, double, std::mt19937_64*,
                                         const AdamParams&);
template double backward_and_step<double>(ModelT<double>&, std::span<const EncodedSentence>,
                                          std::span<const int>, double, std::mt19937_64*,
                                          const AdamParams&);
template double grad_check<float>(ModelT<float>&, std::span<const EncodedSentence>,
                                  std::span<const int>, double, int, uint64_t);
template double grad_check<double>(ModelT<double>&, std::span<const EncodedSentence>,
                                   std::span<const int>, double, int, uint64_t);

}  // namespace sentclass
