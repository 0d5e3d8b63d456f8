#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tagguard/classifier.hpp"

namespace tagguard {

/// (dimension, value) pairs sorted by dimension.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

SparseVector to_sparse(std::span<const double> dense);

/// TF-IDF weighting over a fixed vocabulary. Dimension d holds vocabulary
/// index d + 1.
class TfidfVectorizer {
 public:
  TfidfVectorizer(std::shared_ptr<const Vocabulary> vocabulary, std::vector<double> idf,
                  std::size_t documents);

  /// idf(t) = ln(D / D_t) over the training folksonomies; tags never seen
  /// in training get ln(D + 1).
  static TfidfVectorizer fit(std::span<const Folksonomy> training,
                             std::shared_ptr<const Vocabulary> vocabulary);

  /// Component t = (|d_t| / |d|) * idf(t); out-of-vocabulary tags dropped.
  SparseVector transform(const Folksonomy& folksonomy) const;

  double idf(std::string_view tag) const;
  std::size_t dimension() const { return idf_.size(); }
  std::size_t documents() const { return documents_; }
  const std::vector<double>& idf_values() const { return idf_; }
  const Vocabulary& vocabulary() const { return *vocabulary_; }
  const std::shared_ptr<const Vocabulary>& shared_vocabulary() const { return vocabulary_; }

 private:
  std::shared_ptr<const Vocabulary> vocabulary_;
  std::vector<double> idf_;
  std::size_t documents_;
};

/// Linear decision function w·x + b. Positive means legitimate.
struct SvmModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double c = 1.0;

  double decision(const SparseVector& x) const;
};

/// Margin w·x + b for a dense input; throws on dimension mismatch.
double svm_decision(const SvmModel& model, std::span<const double> x);

/// Legitimate iff margin > 0; a zero margin is treated as bogus.
Label svm_label(double margin);

struct SvmTrainOptions {
  double c = 1.0;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
};

struct SvmTrainResult {
  SvmModel model;
  /// Objective at the zero model followed by one entry per accepted or
  /// rejected epoch; non-increasing.
  std::vector<double> objective_trace;
};

/// 0.5 ||w||^2 + C Σ max(0, 1 - y (w·x + b))^2 with y = +1 legit, -1 bogus.
double svm_objective(const SvmModel& model, std::span<const SparseVector> xs,
                     std::span<const int> ys);

/// Seeded stochastic gradient descent on the squared-hinge objective with a
/// fixed epoch budget. An epoch that raises the objective is rolled back and
/// the step size halved.
SvmTrainResult svm_train(std::span<const SparseVector> xs, std::span<const int> ys,
                         std::size_t dimension, const SvmTrainOptions& options);

/// TF-IDF vectorizer plus linear SVM.
class SvmClassifier final : public Classifier {
 public:
  SvmClassifier(TfidfVectorizer vectorizer, SvmModel model);

  ClassifierKind kind() const override { return ClassifierKind::Svm; }
  Label predict(const Folksonomy& folksonomy) const override;
  std::uint64_t vocabulary_fingerprint() const override {
    return vectorizer_.vocabulary().fingerprint();
  }

  double margin(const Folksonomy& folksonomy) const;
  const TfidfVectorizer& vectorizer() const { return vectorizer_; }
  const SvmModel& model() const { return model_; }

 private:
  TfidfVectorizer vectorizer_;
  SvmModel model_;
};

SvmClassifier train_svm_classifier(std::span<const Folksonomy> training,
                                   std::shared_ptr<const Vocabulary> vocabulary,
                                   const TrainConfig& config);

}  // namespace tagguard
