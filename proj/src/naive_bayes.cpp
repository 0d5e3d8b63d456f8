#include "tagguard/naive_bayes.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "tagguard/error.hpp"

namespace tagguard {

NaiveBayesModel::NaiveBayesModel(SpamicityMap spamicity, double default_spamicity,
                                 std::uint64_t fingerprint)
    : spamicity_(std::move(spamicity)),
      default_spamicity_(default_spamicity),
      fingerprint_(fingerprint) {
  auto inside = [](double p) { return p > 0.0 && p < 1.0; };
  if (!inside(default_spamicity_)) throw Error("default spamicity must lie in (0, 1)");
  for (const auto& [tag, p] : spamicity_) {
    if (!inside(p)) throw Error("spamicity of '" + tag + "' must lie in (0, 1)");
  }
}

double NaiveBayesModel::spamicity(std::string_view tag) const {
  auto it = spamicity_.find(tag);
  return it == spamicity_.end() ? default_spamicity_ : it->second;
}

double NaiveBayesModel::score(const Folksonomy& folksonomy) const {
  std::vector<double> p;
  p.reserve(folksonomy.tags.size());
  for (const auto& t : folksonomy.tags) p.push_back(spamicity(t));
  return nb_combine(p);
}

Label NaiveBayesModel::predict(const Folksonomy& folksonomy) const {
  return score(folksonomy) > 0.5 ? Label::Bogus : Label::Legitimate;
}

NaiveBayesModel nb_train(std::span<const Folksonomy> training, double smoothing,
                         std::uint64_t fingerprint) {
  if (!(smoothing > 0.0)) throw Error("smoothing constant must be positive");
  require_both_classes(training);

  std::map<std::string, std::pair<std::size_t, std::size_t>, std::less<>> counts;
  for (const auto& f : training) {
    for (const auto& t : f.tags) {
      auto& [bogus, legit] = counts[t];
      (f.label == Label::Bogus ? bogus : legit) += 1;
    }
  }
  NaiveBayesModel::SpamicityMap table;
  for (const auto& [tag, c] : counts) {
    double b = static_cast<double>(c.first);
    double l = static_cast<double>(c.second);
    table.emplace(tag, (b + smoothing) / (b + l + 2.0 * smoothing));
  }
  return NaiveBayesModel(std::move(table), 0.5, fingerprint);
}

double nb_combine(std::span<const double> spamicities) {
  double n = 0.0;
  for (double p : spamicities) n += std::log1p(-p) - std::log(p);
  return 1.0 / (1.0 + std::exp(n));
}

double nb_score(const NaiveBayesModel& model, const Folksonomy& folksonomy) {
  return model.score(folksonomy);
}

}  // namespace tagguard
