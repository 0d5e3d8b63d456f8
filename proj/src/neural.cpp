#include "tagguard/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tagguard/error.hpp"
#include "tagguard/random.hpp"

#if defined(__SSE__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

namespace tagguard {

namespace {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Arr = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Col = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
Arr<S> sigmoid(const Arr<S>& z) {
  return (S(1) + (-z).exp()).inverse();
}

template <typename S>
struct Step {
  std::size_t active = 0;
  std::size_t offset = 0;  // first row of this step in the stacked buffers
  Arr<S> input, forget, candidate, output;
  Arr<S> c_prev, tanh_c;
};

/// Forward activations for one batch, rows in length-descending order.
/// Row-steps are stacked step-major: step t occupies rows
/// [offset_t, offset_t + active_t) of x and z.
template <typename S>
struct Pass {
  std::vector<std::size_t> order;  // sorted position -> caller position
  std::vector<Step<S>> steps;
  std::vector<std::int32_t> tokens;  // per stacked row
  Mat<S> x;                          // stacked inputs, rows x E
  Mat<S> h_prev;                     // stacked previous hidden states for t > 0
  Mat<S> hidden;                     // final hidden state per sorted row
  Mat<S> dense_pre;
  Mat<S> dense_out;
  Mat<S> log_probs;  // sorted rows x 2
};

std::vector<std::int32_t> compact(std::span<const std::int32_t> sequence,
                                  std::size_t vocabulary) {
  std::vector<std::int32_t> tokens;
  for (auto idx : sequence) {
    if (idx < 0 || static_cast<std::size_t>(idx) > vocabulary) {
      throw Error("sequence index " + std::to_string(idx) + " outside [0, " +
                  std::to_string(vocabulary) + "]");
    }
    if (idx != 0) tokens.push_back(idx);
  }
  return tokens;
}

template <typename S>
Pass<S> run_forward(const NeuralShape& shape, const BasicNeuralParameters<S>& p,
                    std::span<const std::vector<std::int32_t>> sequences) {
  const auto rows = sequences.size();
  const auto h = static_cast<Eigen::Index>(shape.hidden);
  const auto e = static_cast<Eigen::Index>(shape.embedding);

  std::vector<std::vector<std::int32_t>> tokens(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (sequences[r].size() != shape.sequence) {
      throw Error("sequence length " + std::to_string(sequences[r].size()) +
                  " differs from model length " + std::to_string(shape.sequence));
    }
    tokens[r] = compact(sequences[r], shape.vocabulary);
  }

  Pass<S> pass;
  pass.order.resize(rows);
  std::iota(pass.order.begin(), pass.order.end(), std::size_t{0});
  std::stable_sort(pass.order.begin(), pass.order.end(), [&](auto a, auto b) {
    return tokens[a].size() > tokens[b].size();
  });
  const std::size_t longest = rows ? tokens[pass.order.front()].size() : 0;

  std::size_t total = 0;
  pass.steps.resize(longest);
  for (std::size_t t = 0; t < longest; ++t) {
    auto& s = pass.steps[t];
    while (s.active < rows && tokens[pass.order[s.active]].size() > t) ++s.active;
    s.offset = total;
    for (std::size_t r = 0; r < s.active; ++r) pass.tokens.push_back(tokens[pass.order[r]][t]);
    total += s.active;
  }
  const std::size_t first = longest ? pass.steps[0].active : 0;
  pass.x.resize(static_cast<Eigen::Index>(total), e);
  for (std::size_t i = 0; i < total; ++i) {
    pass.x.row(static_cast<Eigen::Index>(i)) = p.embedding.row(pass.tokens[i]);
  }
  Mat<S> zx = pass.x * p.input_weights;
  zx.rowwise() += p.gate_bias.row(0);
  pass.h_prev.resize(static_cast<Eigen::Index>(total - first), h);

  Mat<S> hidden = Mat<S>::Zero(static_cast<Eigen::Index>(rows), h);
  Mat<S> cell = Mat<S>::Zero(static_cast<Eigen::Index>(rows), h);
  Mat<S> z;
  for (std::size_t t = 0; t < longest; ++t) {
    auto& s = pass.steps[t];
    const auto a = static_cast<Eigen::Index>(s.active);
    const auto off = static_cast<Eigen::Index>(s.offset);
    z = zx.middleRows(off, a);
    if (t > 0) {
      auto prev = pass.h_prev.middleRows(off - static_cast<Eigen::Index>(first), a);
      prev = hidden.topRows(a);
      z.noalias() += prev * p.recurrent_weights;
    }
    s.input = sigmoid<S>(z.middleCols(0, h).array());
    s.forget = sigmoid<S>(z.middleCols(h, h).array());
    s.candidate = z.middleCols(2 * h, h).array().tanh();
    s.output = sigmoid<S>(z.middleCols(3 * h, h).array());
    s.c_prev = cell.topRows(a).array();
    Arr<S> c = s.forget * s.c_prev + s.input * s.candidate;
    s.tanh_c = c.tanh();
    cell.topRows(a) = c.matrix();
    hidden.topRows(a) = (s.output * s.tanh_c).matrix();
  }

  pass.hidden = std::move(hidden);
  pass.dense_pre = pass.hidden * p.dense_weights;
  pass.dense_pre.rowwise() += p.dense_bias.row(0);
  pass.dense_out = pass.dense_pre.cwiseMax(S(0));
  Mat<S> logits = pass.dense_out * p.output_weights;
  logits.rowwise() += p.output_bias.row(0);
  Col<S> mx = logits.rowwise().maxCoeff();
  Mat<S> shifted = logits.colwise() - mx;
  Col<S> lse = shifted.array().exp().rowwise().sum().log().matrix();
  pass.log_probs = shifted.colwise() - lse;
  return pass;
}

template <typename S>
void backward(const NeuralShape& shape, const BasicNeuralParameters<S>& p, const Pass<S>& pass,
              const Mat<S>& d_logits, BasicNeuralParameters<S>& g) {
  const auto h = static_cast<Eigen::Index>(shape.hidden);
  if (g.embedding.rows() != p.embedding.rows() || g.embedding.cols() != p.embedding.cols()) {
    g = BasicNeuralParameters<S>::zeros(shape);
  } else {
    for (auto* t : g.tensors()) t->setZero();
  }

  g.output_weights.noalias() = pass.dense_out.transpose() * d_logits;
  g.output_bias = d_logits.colwise().sum();
  Mat<S> d_dense = d_logits * p.output_weights.transpose();
  d_dense.array() *= (pass.dense_pre.array() > S(0)).template cast<S>();
  g.dense_weights.noalias() = pass.hidden.transpose() * d_dense;
  g.dense_bias = d_dense.colwise().sum();
  if (pass.steps.empty()) return;

  // Rows that stopped early hold their gradient until their last step.
  Mat<S> d_hidden = d_dense * p.dense_weights.transpose();
  Mat<S> d_cell = Mat<S>::Zero(d_hidden.rows(), h);
  Mat<S> d_gates(pass.x.rows(), 4 * h);
  for (std::size_t t = pass.steps.size(); t-- > 0;) {
    const Step<S>& s = pass.steps[t];
    const auto a = static_cast<Eigen::Index>(s.active);
    auto dg = d_gates.middleRows(static_cast<Eigen::Index>(s.offset), a);
    Arr<S> dh = d_hidden.topRows(a).array();
    Arr<S> dc = d_cell.topRows(a).array() + dh * s.output * (S(1) - s.tanh_c.square());

    dg.middleCols(0, h) = (dc * s.candidate * s.input * (S(1) - s.input)).matrix();
    dg.middleCols(h, h) = (dc * s.c_prev * s.forget * (S(1) - s.forget)).matrix();
    dg.middleCols(2 * h, h) = (dc * s.input * (S(1) - s.candidate.square())).matrix();
    dg.middleCols(3 * h, h) = (dh * s.tanh_c * s.output * (S(1) - s.output)).matrix();

    d_cell.topRows(a) = (dc * s.forget).matrix();
    if (t > 0) d_hidden.topRows(a).noalias() = dg * p.recurrent_weights.transpose();
  }

  const auto first = static_cast<Eigen::Index>(pass.steps[0].active);
  g.input_weights.noalias() = pass.x.transpose() * d_gates;
  g.gate_bias = d_gates.colwise().sum();
  g.recurrent_weights.noalias() =
      pass.h_prev.transpose() * d_gates.bottomRows(d_gates.rows() - first);
  Mat<S> dx = d_gates * p.input_weights.transpose();
  for (Eigen::Index r = 0; r < dx.rows(); ++r) {
    g.embedding.row(pass.tokens[static_cast<std::size_t>(r)]) += dx.row(r);
  }
  g.embedding.row(0).setZero();
}

/// Mean cross-entropy of one batch; fills `gradient` when non-null.
template <typename S>
double loss_and_gradient(const NeuralShape& shape, const BasicNeuralParameters<S>& p,
                         std::span<const std::vector<std::int32_t>> sequences,
                         std::span<const int> labels, BasicNeuralParameters<S>* gradient) {
  if (sequences.size() != labels.size()) throw Error("loss: sequences and labels differ");
  if (sequences.empty()) throw Error("loss: empty batch");
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("loss: labels must be 0 or 1");
  }
  Pass<S> pass = run_forward(shape, p, sequences);
  double total = 0.0;
  for (std::size_t r = 0; r < pass.order.size(); ++r) {
    total -= static_cast<double>(
        pass.log_probs(static_cast<Eigen::Index>(r), labels[pass.order[r]]));
  }
  if (gradient) {
    const S inv = S(1) / static_cast<S>(sequences.size());
    Mat<S> d_logits = pass.log_probs.array().exp().matrix();
    for (std::size_t r = 0; r < pass.order.size(); ++r) {
      d_logits(static_cast<Eigen::Index>(r), labels[pass.order[r]]) -= S(1);
    }
    d_logits *= inv;
    backward(shape, p, pass, d_logits, *gradient);
  }
  return total / static_cast<double>(sequences.size());
}

/// Row i holds the class probabilities of sequences[i].
template <typename S>
Mat<S> probabilities(const NeuralShape& shape, const BasicNeuralParameters<S>& p,
                     std::span<const std::vector<std::int32_t>> sequences) {
  Pass<S> pass = run_forward(shape, p, sequences);
  Mat<S> out(static_cast<Eigen::Index>(sequences.size()), 2);
  for (std::size_t r = 0; r < pass.order.size(); ++r) {
    out.row(static_cast<Eigen::Index>(pass.order[r])) =
        pass.log_probs.row(static_cast<Eigen::Index>(r)).array().exp().matrix();
  }
  return out;
}

void check_shape(const NeuralShape& shape) {
  if (shape.vocabulary < 1 || shape.embedding < 1 || shape.hidden < 1 ||
      shape.dense < 1 || shape.sequence < 1) {
    throw Error("neural model dimensions must be positive");
  }
}

void check_parameters(const NeuralShape& shape, const NeuralParameters& p) {
  auto expect = NeuralParameters::zeros(shape);
  auto want = expect.tensors();
  auto have = p.tensors();
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i]->rows() != have[i]->rows() || want[i]->cols() != have[i]->cols()) {
      throw Error("neural parameter '" + std::string(NeuralParameters::kNames[i]) +
                  "' has the wrong shape");
    }
  }
}

using TrainParameters = BasicNeuralParameters<float>;

struct AdamState {
  TrainParameters m, v;
  std::size_t step = 0;
};

void adam_update(TrainParameters& params, const TrainParameters& grad, AdamState& state,
                 double lr) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999;
  constexpr float kEps = 1e-8f;
  ++state.step;
  const auto c1 = static_cast<float>(1.0 - std::pow(kBeta1, static_cast<double>(state.step)));
  const auto c2 = static_cast<float>(1.0 - std::pow(kBeta2, static_cast<double>(state.step)));
  const auto b1 = static_cast<float>(kBeta1), b2 = static_cast<float>(kBeta2);
  const auto rate = static_cast<float>(lr);
  auto p = params.tensors();
  auto gr = grad.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i]->array() = b1 * m[i]->array() + (1.0f - b1) * gr[i]->array();
    v[i]->array() = b2 * v[i]->array() + (1.0f - b2) * gr[i]->array().square();
    p[i]->array() -= rate * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + kEps);
  }
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const NeuralShape& shape, const TrainParameters& params,
                    std::span<const std::vector<std::int32_t>> xs, std::span<const int> ys) {
  constexpr std::size_t kChunk = 256;
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < xs.size(); start += kChunk) {
    std::size_t n = std::min(kChunk, xs.size() - start);
    Mat<float> probs = probabilities(shape, params, xs.subspan(start, n));
    for (std::size_t r = 0; r < n; ++r) {
      int y = ys[start + r];
      auto row = static_cast<Eigen::Index>(r);
      loss -= std::log(std::max(static_cast<double>(probs(row, y)), 1e-30));
      int predicted = probs(row, 1) > probs(row, 0) ? 1 : 0;
      if (predicted == y) ++correct;
    }
  }
  const double n = static_cast<double>(xs.size());
  return {loss / n, static_cast<double>(correct) / n};
}

// Single-precision training drifts into subnormal gradients late in a run,
// which are very slow on x86. Flushing them to zero is scoped to training.
class FlushDenormals {
 public:
#if defined(__SSE__)
  FlushDenormals() : ftz_(_MM_GET_FLUSH_ZERO_MODE()), daz_(_MM_GET_DENORMALS_ZERO_MODE()) {
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
  }
  ~FlushDenormals() {
    _MM_SET_FLUSH_ZERO_MODE(ftz_);
    _MM_SET_DENORMALS_ZERO_MODE(daz_);
  }

 private:
  unsigned ftz_;
  unsigned daz_;
#else
 public:
  FlushDenormals() = default;
#endif
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;
};

}  // namespace

NeuralModel::NeuralModel(const NeuralShape& shape, std::uint64_t seed)
    : shape_(shape), params_(NeuralParameters::zeros(shape)) {
  check_shape(shape_);
  Rng rng(seed);
  for (auto* t : params_.tensors()) {
    for (Eigen::Index j = 0; j < t->cols(); ++j) {
      for (Eigen::Index i = 0; i < t->rows(); ++i) (*t)(i, j) = rng.uniform(-0.05, 0.05);
    }
  }
  params_.embedding.row(0).setZero();
  const auto h = static_cast<Eigen::Index>(shape_.hidden);
  params_.gate_bias.setZero();
  params_.gate_bias.middleCols(h, h).setOnes();
  params_.dense_bias.setZero();
  params_.output_bias.setZero();
}

NeuralModel::NeuralModel(const NeuralShape& shape, NeuralParameters parameters)
    : shape_(shape), params_(std::move(parameters)) {
  check_shape(shape_);
  check_parameters(shape_, params_);
  if (!params_.embedding.row(0).isZero(0.0)) {
    throw Error("embedding padding row must be zero");
  }
}

std::array<double, 2> NeuralModel::forward(std::span<const std::int32_t> sequence) const {
  std::vector<std::vector<std::int32_t>> one{{sequence.begin(), sequence.end()}};
  Eigen::MatrixXd probs = forward_batch(one);
  return {probs(0, 0), probs(0, 1)};
}

Eigen::MatrixXd NeuralModel::forward_batch(
    std::span<const std::vector<std::int32_t>> sequences) const {
  return probabilities(shape_, params_, sequences);
}

double NeuralModel::loss(std::span<const std::vector<std::int32_t>> sequences,
                         std::span<const int> labels, NeuralParameters* gradient) const {
  return loss_and_gradient(shape_, params_, sequences, labels, gradient);
}

NeuralShape neural_shape(const TrainConfig& config, std::size_t vocabulary_size) {
  return NeuralShape{vocabulary_size, config.embedding_dim, config.hidden_dim,
                     config.dense_dim, config.sequence_length};
}

NeuralTrainResult nn_train(std::span<const LabelledSequence> data, const NeuralShape& shape,
                           const TrainConfig& config) {
  config.validate();
  FlushDenormals flush;
  if (!(config.validation_split > 0.0 && config.validation_split < 1.0)) {
    throw Error("validation split must lie in (0, 1)");
  }
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) {
    int y = data[i].label;
    if (y != 0 && y != 1) throw Error("nn_train: labels must be 0 or 1");
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) {
    throw Error("nn_train: both classes are required");
  }

  Rng rng(derive_seed(config.seed, "nn-split"));
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& members : by_class) {
    rng.shuffle(members);
    auto n_val = static_cast<std::size_t>(
        std::llround(config.validation_split * static_cast<double>(members.size())));
    n_val = std::max<std::size_t>(n_val, 1);
    if (n_val >= members.size()) {
      throw Error("nn_train: degenerate validation split (class has " +
                  std::to_string(members.size()) + " examples)");
    }
    val_idx.insert(val_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  auto gather = [&](const std::vector<std::size_t>& idx,
                    std::vector<std::vector<std::int32_t>>& xs, std::vector<int>& ys) {
    for (auto i : idx) {
      xs.push_back(data[i].sequence);
      ys.push_back(data[i].label);
    }
  };
  std::vector<std::vector<std::int32_t>> train_x, val_x;
  std::vector<int> train_y, val_y;
  gather(train_idx, train_x, train_y);
  gather(val_idx, val_x, val_y);

  NeuralModel initial(shape, derive_seed(config.seed, "nn-init"));
  NeuralTrainResult result{initial, 0.0, {}, 0};
  TrainParameters params = initial.parameters().cast<float>();
  result.initial_train_loss = evaluate(shape, params, train_x, train_y).loss;

  AdamState adam{TrainParameters::zeros(shape), TrainParameters::zeros(shape), 0};
  TrainParameters grad = TrainParameters::zeros(shape);
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng batch_rng(derive_seed(config.seed, "nn-batches"));

  double min_val_loss = std::numeric_limits<double>::infinity();
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_min = 0;
  std::vector<std::vector<std::int32_t>> bx;
  std::vector<int> by;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    batch_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t n = std::min(config.batch_size, order.size() - start);
      bx.clear();
      by.clear();
      for (std::size_t k = 0; k < n; ++k) {
        bx.push_back(train_x[order[start + k]]);
        by.push_back(train_y[order[start + k]]);
      }
      epoch_loss += loss_and_gradient(shape, params, bx, by, &grad) * static_cast<double>(n);
      adam_update(params, grad, adam, config.learning_rate);
    }

    Evaluation val = evaluate(shape, params, val_x, val_y);
    EpochRecord record{epoch_loss / static_cast<double>(order.size()), val.loss,
                       val.accuracy, false};
    if (val.loss < min_val_loss) {
      min_val_loss = val.loss;
      since_min = 0;
    } else {
      ++since_min;
    }
    bool eligible = val.loss <= min_val_loss * (1.0 + config.tolerance);
    bool better = val.accuracy > best_acc ||
                  (val.accuracy == best_acc && val.loss < best_loss);
    if (eligible && better) {
      best_acc = val.accuracy;
      best_loss = val.loss;
      result.model = NeuralModel(shape, params.cast<double>());
      result.best_epoch = epoch;
      record.checkpoint = true;
    }
    result.history.push_back(record);
    if (since_min >= config.patience) break;
  }
  return result;
}

NeuralClassifier::NeuralClassifier(std::shared_ptr<const Vocabulary> vocabulary,
                                   NeuralModel model)
    : vocabulary_(std::move(vocabulary)), model_(std::move(model)) {
  if (!vocabulary_) throw Error("neural classifier needs a vocabulary");
  if (vocabulary_->size() != model_.shape().vocabulary) {
    throw Error("neural model vocabulary size does not match");
  }
}

std::vector<std::int32_t> NeuralClassifier::encode(const Folksonomy& folksonomy) const {
  return encode_sequence(folksonomy, *vocabulary_, model_.shape().sequence);
}

Label NeuralClassifier::predict(const Folksonomy& folksonomy) const {
  auto probs = model_.forward(encode(folksonomy));
  return probs[1] > probs[0] ? Label::Bogus : Label::Legitimate;
}

std::vector<Label> NeuralClassifier::predict_all(
    std::span<const Folksonomy> folksonomies) const {
  constexpr std::size_t kChunk = 256;
  std::vector<Label> out;
  out.reserve(folksonomies.size());
  std::vector<std::vector<std::int32_t>> batch;
  for (std::size_t start = 0; start < folksonomies.size(); start += kChunk) {
    std::size_t n = std::min(kChunk, folksonomies.size() - start);
    batch.clear();
    for (std::size_t k = 0; k < n; ++k) batch.push_back(encode(folksonomies[start + k]));
    Eigen::MatrixXd probs = model_.forward_batch(batch);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      out.push_back(probs(r, 1) > probs(r, 0) ? Label::Bogus : Label::Legitimate);
    }
  }
  return out;
}

NeuralClassifier train_neural_classifier(std::span<const Folksonomy> training,
                                         std::shared_ptr<const Vocabulary> vocabulary,
                                         const TrainConfig& config,
                                         NeuralTrainResult* details) {
  require_both_classes(training);
  if (!vocabulary) throw Error("neural training needs a vocabulary");
  NeuralShape shape = neural_shape(config, vocabulary->size());
  std::vector<LabelledSequence> data;
  data.reserve(training.size());
  for (const auto& f : training) {
    data.push_back({encode_sequence(f, *vocabulary, shape.sequence),
                    f.label == Label::Bogus ? 1 : 0});
  }
  NeuralTrainResult result = nn_train(data, shape, config);
  NeuralClassifier classifier(std::move(vocabulary), result.model);
  if (details) *details = std::move(result);
  return classifier;
}

}  // namespace tagguard
