#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "tagguard/corpus.hpp"

namespace tagguard {

enum class ClassifierKind : std::uint8_t { None, NaiveBayes, Svm, Neural };

std::string_view to_string(ClassifierKind kind);
/// Accepts "none", "nb", "svm", "nn".
ClassifierKind parse_classifier_kind(std::string_view name);

/// Layer sizes of the recurrent model.
struct NeuralShape {
  std::size_t vocabulary = 0;  // V; the embedding has V + 1 rows
  std::size_t embedding = 25;
  std::size_t hidden = 200;
  std::size_t dense = 50;
  std::size_t sequence = 50;

  bool operator==(const NeuralShape&) const = default;
};

struct TrainConfig {
  std::uint64_t seed = 0;

  // Neural model.
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  /// Stop after this many epochs without a new minimum validation loss.
  std::size_t patience = 5;
  /// Checkpoints must keep validation loss within this fraction of the
  /// running minimum.
  double tolerance = 0.01;
  double validation_split = 0.1;
  std::size_t embedding_dim = 25;
  std::size_t hidden_dim = 200;
  std::size_t dense_dim = 50;
  std::size_t sequence_length = 50;

  // Linear SVM.
  double svm_c = 1.0;
  std::size_t svm_epochs = 100;

  // Naive Bayes.
  double nb_smoothing = 1.0;

  /// Throws ConfigError on non-positive or out-of-range values.
  void validate() const;
};

/// Common inference surface of the bogus/legitimate filters.
/// Implementations are immutable after training and safe to share.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ClassifierKind kind() const = 0;
  virtual Label predict(const Folksonomy& folksonomy) const = 0;
  /// Batch form; implementations may vectorize.
  virtual std::vector<Label> predict_all(std::span<const Folksonomy> folksonomies) const;
  /// Fingerprint of the vocabulary the model was trained against.
  virtual std::uint64_t vocabulary_fingerprint() const = 0;
};

/// Predicts the ground-truth label carried by each folksonomy.
class OracleClassifier final : public Classifier {
 public:
  explicit OracleClassifier(std::uint64_t fingerprint) : fingerprint_(fingerprint) {}
  ClassifierKind kind() const override { return ClassifierKind::None; }
  Label predict(const Folksonomy& f) const override { return f.label; }
  std::uint64_t vocabulary_fingerprint() const override { return fingerprint_; }

 private:
  std::uint64_t fingerprint_;
};

/// Predicts one label for everything.
class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(Label label, std::uint64_t fingerprint)
      : label_(label), fingerprint_(fingerprint) {}
  ClassifierKind kind() const override { return ClassifierKind::None; }
  Label predict(const Folksonomy&) const override { return label_; }
  std::uint64_t vocabulary_fingerprint() const override { return fingerprint_; }

 private:
  Label label_;
  std::uint64_t fingerprint_;
};

/// L_c and B_c: the corpus split by predicted label. Folksonomies keep
/// their ground-truth labels.
struct Partition {
  Corpus legitimate;
  Corpus bogus;
};

/// Throws when the model was trained against a different vocabulary.
Partition classify_corpus(const Classifier& model, const Corpus& corpus,
                          const Vocabulary& vocabulary);

/// Trains a classifier of the given kind on labelled folksonomies
/// (Legitimate or Bogus). Throws when either class is missing.
std::unique_ptr<Classifier> train_classifier(ClassifierKind kind,
                                             std::span<const Folksonomy> training,
                                             std::shared_ptr<const Vocabulary> vocabulary,
                                             const TrainConfig& config);

/// Throws unless both classes occur and no example is Unlabeled.
void require_both_classes(std::span<const Folksonomy> training);

}  // namespace tagguard
