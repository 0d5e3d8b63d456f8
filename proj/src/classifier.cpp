#include "tagguard/classifier.hpp"

#include <string>

#include "tagguard/error.hpp"
#include "tagguard/naive_bayes.hpp"
#include "tagguard/neural.hpp"
#include "tagguard/svm.hpp"

namespace tagguard {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::None: return "none";
    case ClassifierKind::NaiveBayes: return "nb";
    case ClassifierKind::Svm: return "svm";
    case ClassifierKind::Neural: return "nn";
  }
  return "unknown";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "none") return ClassifierKind::None;
  if (name == "nb") return ClassifierKind::NaiveBayes;
  if (name == "svm") return ClassifierKind::Svm;
  if (name == "nn") return ClassifierKind::Neural;
  throw ConfigError("unknown classifier '" + std::string(name) +
                    "' (expected none, nb, svm or nn)");
}

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  positive(batch_size, "batch_size");
  positive(max_epochs, "max_epochs");
  positive(patience, "patience");
  if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
  if (!(validation_split > 0.0 && validation_split < 1.0)) {
    throw ConfigError("validation_split must lie in (0, 1)");
  }
  positive(embedding_dim, "embedding_dim");
  positive(hidden_dim, "hidden_dim");
  positive(dense_dim, "dense_dim");
  positive(sequence_length, "sequence_length");
  if (!(svm_c > 0.0)) throw ConfigError("svm_c must be positive");
  positive(svm_epochs, "svm_epochs");
  if (!(nb_smoothing > 0.0)) throw ConfigError("nb_smoothing must be positive");
}

std::vector<Label> Classifier::predict_all(std::span<const Folksonomy> folksonomies) const {
  std::vector<Label> out;
  out.reserve(folksonomies.size());
  for (const auto& f : folksonomies) out.push_back(predict(f));
  return out;
}

Partition classify_corpus(const Classifier& model, const Corpus& corpus,
                          const Vocabulary& vocabulary) {
  if (model.vocabulary_fingerprint() != vocabulary.fingerprint()) {
    throw Error("model was trained against a different vocabulary");
  }
  auto labels = model.predict_all(corpus.folksonomies());
  std::vector<Folksonomy> legit, bogus;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (labels[i] == Label::Bogus ? bogus : legit).push_back(corpus[i]);
  }
  return {Corpus(std::move(legit)), Corpus(std::move(bogus))};
}

void require_both_classes(std::span<const Folksonomy> training) {
  bool legit = false, bogus = false;
  for (const auto& f : training) {
    if (f.label == Label::Legitimate) legit = true;
    else if (f.label == Label::Bogus) bogus = true;
    else throw Error("training data contains an unlabeled folksonomy");
  }
  if (!legit || !bogus) {
    throw Error("training data must contain both legitimate and bogus folksonomies");
  }
}

std::unique_ptr<Classifier> train_classifier(ClassifierKind kind,
                                             std::span<const Folksonomy> training,
                                             std::shared_ptr<const Vocabulary> vocabulary,
                                             const TrainConfig& config) {
  config.validate();
  if (!vocabulary) throw Error("training needs a vocabulary");
  switch (kind) {
    case ClassifierKind::None:
      require_both_classes(training);
      return std::make_unique<OracleClassifier>(vocabulary->fingerprint());
    case ClassifierKind::NaiveBayes:
      return std::make_unique<NaiveBayesModel>(
          nb_train(training, config.nb_smoothing, vocabulary->fingerprint()));
    case ClassifierKind::Svm:
      return std::make_unique<SvmClassifier>(
          train_svm_classifier(training, std::move(vocabulary), config));
    case ClassifierKind::Neural:
      return std::make_unique<NeuralClassifier>(
          train_neural_classifier(training, std::move(vocabulary), config));
  }
  throw Error("unsupported classifier kind");
}

}  // namespace tagguard
