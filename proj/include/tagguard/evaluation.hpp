#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagguard/attacks.hpp"
#include "tagguard/classifier.hpp"
#include "tagguard/corpus.hpp"
#include "tagguard/recommender.hpp"

namespace tagguard {

/// 2PR / (P + R), 0 when P + R = 0.
double f_score(double precision, double recall);

/// Confusion counts indexed [truth][prediction].
struct ConfusionCounts {
  std::size_t legit_as_legit = 0;
  std::size_t legit_as_bogus = 0;
  std::size_t bogus_as_legit = 0;
  std::size_t bogus_as_bogus = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  double support = 0.0;  // share of true examples in this class
};

struct ClassificationMetrics {
  ClassMetrics legit;
  ClassMetrics bogus;
  /// Support-weighted mean of the per-class F values.
  double overall = 0.0;
};

/// Support-weighted mean w_l f_l + w_b f_b with weights normalized to 1.
double weighted_f(double f_legit, double f_bogus, double support_legit, double support_bogus);

ClassificationMetrics metrics_from_counts(const ConfusionCounts& counts);
ConfusionCounts confusion_counts(std::span<const Label> predicted, std::span<const Label> truth);
/// Throws on length mismatch or when truth lacks a class.
ClassificationMetrics confusion_metrics(std::span<const Label> predicted,
                                        std::span<const Label> truth);

/// Element-wise mean.
ClassificationMetrics average(std::span<const ClassificationMetrics> runs);

/// Impact of one attack on one set of top-k lists.
struct ImpactCounts {
  std::size_t affected_population = 0;
  std::optional<double> avg_bogus_rank;
  /// Users whose list ranks the bogus resource above the target; a missing
  /// target counts as ranked below everything. Absent without a target.
  std::optional<std::size_t> piggyback_dominance;
};

std::size_t affected_population(std::span<const TopKList> lists, std::string_view bogus);
std::optional<double> avg_bogus_rank(std::span<const TopKList> lists, std::string_view bogus);
std::size_t piggyback_dominance(std::span<const TopKList> lists, std::string_view bogus,
                                std::string_view target);
ImpactCounts measure_impact(std::span<const TopKList> lists, std::string_view bogus,
                            const std::optional<std::string>& target);

/// Top-k lists for every listed user that has a profile in `corpus`.
std::vector<TopKList> recommend_for(const Corpus& corpus, const EmbeddingTable& table,
                                    std::span<const std::string> users, std::size_t k);

/// Averages over repetitions. Rank and dominance average only the
/// repetitions where they are defined.
struct ImpactMetrics {
  double affected_population = 0.0;
  std::optional<double> avg_bogus_rank;
  std::optional<double> piggyback_dominance;
  double kl_size = 0.0;
  double kl_tag_rank = 0.0;
};

struct Delta {
  double ratio = 0.0;
  double population_reduction = 0.0;
  std::optional<double> rank_increase;
};

/// A filtering policy. An empty `train` means no filtering.
struct Countermeasure {
  using Trainer = std::function<std::unique_ptr<Classifier>(
      std::span<const Folksonomy>, std::shared_ptr<const Vocabulary>, const TrainConfig&)>;

  std::string name;
  Trainer train;
};

Countermeasure countermeasure(ClassifierKind kind);
/// Ground-truth filter.
Countermeasure oracle_countermeasure();
/// Labels every folksonomy the same way.
Countermeasure constant_countermeasure(Label label);

struct RunConfig {
  std::vector<AttackKind> attacks{AttackKind::Overload, AttackKind::Piggyback};
  std::vector<double> ratios{0.001, 0.005, 0.01, 0.05, 0.10};
  double training_ratio = 0.30;
  std::size_t folds = 10;
  std::size_t repetitions = 5;
  std::size_t k = 15;
  std::vector<ClassifierKind> classifiers{ClassifierKind::None, ClassifierKind::NaiveBayes,
                                          ClassifierKind::Svm, ClassifierKind::Neural};
  /// Users sampled per repetition; 0 keeps every user.
  std::size_t sample_users = 0;
  std::size_t embedding_dim = 50;
  std::uint64_t seed = 0;
  /// Worker threads for independent (repetition, attack) units.
  std::size_t threads = 1;
  /// Pools, sizes and resource names used for every generated batch. Its
  /// kind, ratio and seed are overridden per run.
  AttackSpec attack;
  TrainConfig train;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct FoldResult {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  ConfusionCounts counts;
};

struct PointResult {
  double ratio = 0.0;
  ImpactMetrics impact;
  Delta delta;
};

struct RunResult {
  std::string classifier;
  AttackKind attack = AttackKind::Overload;
  /// Absent for the unfiltered baseline.
  std::optional<ClassificationMetrics> classification;
  std::vector<FoldResult> folds;
  std::vector<PointResult> points;
};

struct EvaluationReport {
  RunConfig config;
  std::vector<RunResult> runs;
};

/// (population_without - population_with, rank_with - rank_without) per
/// ratio. Throws when the runs cover different attacks or ratios.
std::vector<Delta> improvement_vs_baseline(const RunResult& with, const RunResult& without);

/// Full protocol over an all-legitimate base corpus. Countermeasures
/// default to cfg.classifiers; the unfiltered baseline is always computed
/// and used for the deltas.
EvaluationReport run_pipeline(const Corpus& base, const RunConfig& cfg,
                              const EmbeddingTable* embeddings = nullptr);
EvaluationReport run_pipeline(const Corpus& base, const RunConfig& cfg,
                              std::span<const Countermeasure> countermeasures,
                              const EmbeddingTable* embeddings = nullptr);

/// Stratified assignment of examples to folds: examples of each label are
/// shuffled and dealt round-robin.
std::vector<std::size_t> stratified_folds(std::span<const Folksonomy> data, std::size_t folds,
                                          std::uint64_t seed);

}  // namespace tagguard
