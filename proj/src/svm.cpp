#include "tagguard/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tagguard/error.hpp"
#include "tagguard/random.hpp"

namespace tagguard {

SparseVector to_sparse(std::span<const double> dense) {
  SparseVector out;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) out.emplace_back(static_cast<std::uint32_t>(i), dense[i]);
  }
  return out;
}

TfidfVectorizer::TfidfVectorizer(std::shared_ptr<const Vocabulary> vocabulary,
                                 std::vector<double> idf, std::size_t documents)
    : vocabulary_(std::move(vocabulary)), idf_(std::move(idf)), documents_(documents) {
  if (!vocabulary_) throw Error("vectorizer needs a vocabulary");
  if (idf_.size() != vocabulary_->size()) {
    throw Error("idf table does not match the vocabulary size");
  }
}

TfidfVectorizer TfidfVectorizer::fit(std::span<const Folksonomy> training,
                                     std::shared_ptr<const Vocabulary> vocabulary) {
  if (training.empty()) throw Error("tfidf_fit: empty training set");
  if (!vocabulary) throw Error("tfidf_fit: missing vocabulary");
  std::vector<std::size_t> doc_count(vocabulary->size(), 0);
  for (const auto& f : training) {
    for (const auto& t : f.tags) {
      if (auto idx = vocabulary->index(t)) ++doc_count[*idx - 1];
    }
  }
  const double d = static_cast<double>(training.size());
  std::vector<double> idf(vocabulary->size());
  for (std::size_t i = 0; i < idf.size(); ++i) {
    idf[i] = doc_count[i] == 0 ? std::log(d + 1.0)
                               : std::log(d / static_cast<double>(doc_count[i]));
  }
  return TfidfVectorizer(std::move(vocabulary), std::move(idf), training.size());
}

SparseVector TfidfVectorizer::transform(const Folksonomy& folksonomy) const {
  SparseVector out;
  if (folksonomy.tags.empty()) return out;
  const double tf = 1.0 / static_cast<double>(folksonomy.tags.size());
  for (const auto& t : folksonomy.tags) {
    if (auto idx = vocabulary_->index(t)) {
      out.emplace_back(static_cast<std::uint32_t>(*idx - 1), tf * idf_[*idx - 1]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double TfidfVectorizer::idf(std::string_view tag) const {
  auto idx = vocabulary_->index(tag);
  if (!idx) return std::log(static_cast<double>(documents_) + 1.0);
  return idf_[*idx - 1];
}

double SvmModel::decision(const SparseVector& x) const {
  double s = bias;
  for (const auto& [j, v] : x) s += weights[j] * v;
  return s;
}

double svm_decision(const SvmModel& model, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(model.weights.size())) {
    throw Error("svm_decision: input has dimension " + std::to_string(x.size()) +
                ", model expects " + std::to_string(model.weights.size()));
  }
  Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return model.weights.dot(v) + model.bias;
}

Label svm_label(double margin) {
  return margin > 0.0 ? Label::Legitimate : Label::Bogus;
}

double svm_objective(const SvmModel& model, std::span<const SparseVector> xs,
                     std::span<const int> ys) {
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double m = std::max(0.0, 1.0 - ys[i] * model.decision(xs[i]));
    loss += m * m;
  }
  return 0.5 * model.weights.squaredNorm() + model.c * loss;
}

SvmTrainResult svm_train(std::span<const SparseVector> xs, std::span<const int> ys,
                         std::size_t dimension, const SvmTrainOptions& options) {
  if (xs.size() != ys.size()) throw Error("svm_train: inputs and labels differ in length");
  if (!(options.c > 0.0)) throw Error("svm_train: C must be positive");
  bool pos = false, neg = false;
  for (int y : ys) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw Error("svm_train: labels must be +1 or -1");
  }
  if (!pos || !neg) throw Error("svm_train: both classes are required");
  for (const auto& x : xs) {
    for (const auto& [j, v] : x) {
      if (j >= dimension) throw Error("svm_train: feature index out of range");
    }
  }

  const double n = static_cast<double>(xs.size());
  const double c = options.c;
  double max_lipschitz = 0.0;
  for (const auto& x : xs) {
    double sq = 1.0;
    for (const auto& [j, v] : x) sq += v * v;
    max_lipschitz = std::max(max_lipschitz, 1.0 / n + 2.0 * c * sq);
  }
  double eta = 1.0 / max_lipschitz;

  SvmModel model{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension)), 0.0, c};
  SvmTrainResult result{model, {}};
  double best = svm_objective(model, xs, ys);
  result.objective_trace.push_back(best);

  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed);

  // w is held as scale * v so the per-sample shrink costs O(1).
  Eigen::VectorXd v;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    v = model.weights;
    double scale = 1.0;
    double bias = model.bias;
    rng.shuffle(order);
    const double shrink = 1.0 - eta / n;
    for (auto i : order) {
      double dot = 0.0;
      for (const auto& [j, x] : xs[i]) dot += v[j] * x;
      double slack = 1.0 - ys[i] * (scale * dot + bias);
      scale *= shrink;
      if (slack > 0.0) {
        double step = 2.0 * eta * c * slack * ys[i];
        for (const auto& [j, x] : xs[i]) v[j] += step * x / scale;
        bias += step;
      }
      if (scale < 1e-9) {
        v *= scale;
        scale = 1.0;
      }
    }
    SvmModel candidate{v * scale, bias, c};
    double objective = svm_objective(candidate, xs, ys);
    if (objective <= best) {
      model = std::move(candidate);
      best = objective;
    } else {
      eta *= 0.5;
    }
    result.objective_trace.push_back(best);
  }
  result.model = std::move(model);
  return result;
}

SvmClassifier::SvmClassifier(TfidfVectorizer vectorizer, SvmModel model)
    : vectorizer_(std::move(vectorizer)), model_(std::move(model)) {
  if (static_cast<std::size_t>(model_.weights.size()) != vectorizer_.dimension()) {
    throw Error("SVM weight dimension does not match the vectorizer");
  }
}

double SvmClassifier::margin(const Folksonomy& folksonomy) const {
  return model_.decision(vectorizer_.transform(folksonomy));
}

Label SvmClassifier::predict(const Folksonomy& folksonomy) const {
  return svm_label(margin(folksonomy));
}

SvmClassifier train_svm_classifier(std::span<const Folksonomy> training,
                                   std::shared_ptr<const Vocabulary> vocabulary,
                                   const TrainConfig& config) {
  require_both_classes(training);
  auto vectorizer = TfidfVectorizer::fit(training, std::move(vocabulary));
  std::vector<SparseVector> xs;
  std::vector<int> ys;
  xs.reserve(training.size());
  ys.reserve(training.size());
  for (const auto& f : training) {
    xs.push_back(vectorizer.transform(f));
    ys.push_back(f.label == Label::Legitimate ? 1 : -1);
  }
  auto result = svm_train(xs, ys, vectorizer.dimension(),
                          SvmTrainOptions{config.svm_c, config.svm_epochs, config.seed});
  return SvmClassifier(std::move(vectorizer), std::move(result.model));
}

}  // namespace tagguard
