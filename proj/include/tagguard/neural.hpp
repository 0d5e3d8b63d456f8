#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tagguard/classifier.hpp"

namespace tagguard {

/// Trainable tensors of the embedding -> LSTM -> dense(ReLU) -> softmax
/// stack. Biases are stored as 1 x n row matrices. LSTM gate blocks are
/// laid out [input, forget, candidate, output] along the columns.
template <typename Scalar>
struct BasicNeuralParameters {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix embedding;          // (V + 1) x E, row 0 is padding
  Matrix input_weights;      // E x 4H
  Matrix recurrent_weights;  // H x 4H
  Matrix gate_bias;          // 1 x 4H
  Matrix dense_weights;      // H x D
  Matrix dense_bias;         // 1 x D
  Matrix output_weights;     // D x 2
  Matrix output_bias;        // 1 x 2

  static constexpr std::array<std::string_view, 8> kNames = {
      "embedding",     "input_weights", "recurrent_weights", "gate_bias",
      "dense_weights", "dense_bias",    "output_weights",    "output_bias"};

  std::array<Matrix*, 8> tensors() {
    return {&embedding,     &input_weights, &recurrent_weights, &gate_bias,
            &dense_weights, &dense_bias,    &output_weights,    &output_bias};
  }
  std::array<const Matrix*, 8> tensors() const {
    return {&embedding,     &input_weights, &recurrent_weights, &gate_bias,
            &dense_weights, &dense_bias,    &output_weights,    &output_bias};
  }

  /// All-zero tensors with the layout implied by `shape`.
  static BasicNeuralParameters zeros(const NeuralShape& s) {
    auto n = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
    BasicNeuralParameters p;
    p.embedding = Matrix::Zero(n(s.vocabulary + 1), n(s.embedding));
    p.input_weights = Matrix::Zero(n(s.embedding), 4 * n(s.hidden));
    p.recurrent_weights = Matrix::Zero(n(s.hidden), 4 * n(s.hidden));
    p.gate_bias = Matrix::Zero(1, 4 * n(s.hidden));
    p.dense_weights = Matrix::Zero(n(s.hidden), n(s.dense));
    p.dense_bias = Matrix::Zero(1, n(s.dense));
    p.output_weights = Matrix::Zero(n(s.dense), 2);
    p.output_bias = Matrix::Zero(1, 2);
    return p;
  }

  template <typename Other>
  BasicNeuralParameters<Other> cast() const {
    BasicNeuralParameters<Other> out;
    auto dst = out.tensors();
    auto src = tensors();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<Other>();
    return out;
  }

  bool operator==(const BasicNeuralParameters& other) const {
    auto a = tensors();
    auto b = other.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols()) return false;
      if (*a[i] != *b[i]) return false;
    }
    return true;
  }
};

using NeuralParameters = BasicNeuralParameters<double>;

/// Recurrent folksonomy classifier. Class 0 is legitimate, class 1 bogus.
///
/// Padding positions (index 0) are masked: the recurrent state is carried
/// through them unchanged, so an all-padding sequence reaches the dense
/// layer with a zero hidden state.
class NeuralModel {
 public:
  /// Seeded initialization: weights uniform in [-0.05, 0.05], forget-gate
  /// bias 1, other biases 0, padding row 0.
  NeuralModel(const NeuralShape& shape, std::uint64_t seed);
  NeuralModel(const NeuralShape& shape, NeuralParameters parameters);

  const NeuralShape& shape() const { return shape_; }
  const NeuralParameters& parameters() const { return params_; }
  NeuralParameters& mutable_parameters() { return params_; }

  /// (p_legit, p_bogus) for one sequence of length shape().sequence.
  std::array<double, 2> forward(std::span<const std::int32_t> sequence) const;

  /// Row i holds (p_legit, p_bogus) of sequences[i].
  Eigen::MatrixXd forward_batch(std::span<const std::vector<std::int32_t>> sequences) const;

  /// Mean categorical cross-entropy over the batch. When `gradient` is
  /// non-null it receives d(loss)/d(parameters); the padding row of the
  /// embedding gradient is always zero.
  double loss(std::span<const std::vector<std::int32_t>> sequences,
              std::span<const int> labels, NeuralParameters* gradient) const;

 private:
  NeuralShape shape_;
  NeuralParameters params_;
};

struct LabelledSequence {
  std::vector<std::int32_t> sequence;
  int label = 0;  // 0 legit, 1 bogus
};

struct EpochRecord {
  double train_loss = 0.0;  // mean minibatch loss over the epoch
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
  bool checkpoint = false;
};

struct NeuralTrainResult {
  NeuralModel model;
  /// Mean loss over the training split before the first update.
  double initial_train_loss = 0.0;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based
};

/// Mini-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on cross-entropy,
/// computed in single precision.
/// A stratified validation split is held out; the returned model is the
/// epoch with the best validation accuracy among epochs whose validation
/// loss stayed within `tolerance` of the running minimum.
NeuralTrainResult nn_train(std::span<const LabelledSequence> data, const NeuralShape& shape,
                           const TrainConfig& config);

NeuralShape neural_shape(const TrainConfig& config, std::size_t vocabulary_size);

class NeuralClassifier final : public Classifier {
 public:
  NeuralClassifier(std::shared_ptr<const Vocabulary> vocabulary, NeuralModel model);

  ClassifierKind kind() const override { return ClassifierKind::Neural; }
  Label predict(const Folksonomy& folksonomy) const override;
  std::vector<Label> predict_all(std::span<const Folksonomy> folksonomies) const override;
  std::uint64_t vocabulary_fingerprint() const override { return vocabulary_->fingerprint(); }

  std::vector<std::int32_t> encode(const Folksonomy& folksonomy) const;
  const NeuralModel& model() const { return model_; }
  const Vocabulary& vocabulary() const { return *vocabulary_; }
  const std::shared_ptr<const Vocabulary>& shared_vocabulary() const { return vocabulary_; }

 private:
  std::shared_ptr<const Vocabulary> vocabulary_;
  NeuralModel model_;
};

NeuralClassifier train_neural_classifier(std::span<const Folksonomy> training,
                                         std::shared_ptr<const Vocabulary> vocabulary,
                                         const TrainConfig& config,
                                         NeuralTrainResult* details = nullptr);

}  // namespace tagguard
