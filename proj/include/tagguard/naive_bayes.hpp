#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "tagguard/classifier.hpp"

namespace tagguard {

/// Per-tag spamicity p_i = P(bogus | folksonomy contains tag i).
class NaiveBayesModel final : public Classifier {
 public:
  using SpamicityMap = std::map<std::string, double, std::less<>>;

  NaiveBayesModel(SpamicityMap spamicity, double default_spamicity,
                  std::uint64_t fingerprint);

  ClassifierKind kind() const override { return ClassifierKind::NaiveBayes; }
  Label predict(const Folksonomy& folksonomy) const override;
  std::uint64_t vocabulary_fingerprint() const override { return fingerprint_; }

  double spamicity(std::string_view tag) const;
  double default_spamicity() const { return default_spamicity_; }
  const SpamicityMap& table() const { return spamicity_; }

  /// Probability that the folksonomy is fake.
  double score(const Folksonomy& folksonomy) const;

 private:
  SpamicityMap spamicity_;
  double default_spamicity_;
  std::uint64_t fingerprint_;
};

/// Laplace-smoothed document counts: p_i = (b + α) / (b + l + 2α).
NaiveBayesModel nb_train(std::span<const Folksonomy> training, double smoothing,
                         std::uint64_t fingerprint = 0);

/// p = 1 / (1 + e^n), n = Σ [ln(1 - p_i) - ln p_i].
double nb_combine(std::span<const double> spamicities);

double nb_score(const NaiveBayesModel& model, const Folksonomy& folksonomy);

}  // namespace tagguard
