#include "tagguard/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "tagguard/error.hpp"
#include "tagguard/random.hpp"

namespace tagguard {

double f_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double weighted_f(double f_legit, double f_bogus, double support_legit, double support_bogus) {
  const double total = support_legit + support_bogus;
  if (!(total > 0.0)) throw Error("weighted_f: supports must not both be zero");
  return (support_legit * f_legit + support_bogus * f_bogus) / total;
}

ConfusionCounts confusion_counts(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw Error("confusion_metrics: " + std::to_string(predicted.size()) + " predictions for " +
                std::to_string(truth.size()) + " labels");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == Label::Unlabeled || predicted[i] == Label::Unlabeled) {
      throw Error("confusion_metrics: unlabeled entry");
    }
    const bool t_bogus = truth[i] == Label::Bogus;
    const bool p_bogus = predicted[i] == Label::Bogus;
    if (t_bogus) {
      (p_bogus ? c.bogus_as_bogus : c.bogus_as_legit) += 1;
    } else {
      (p_bogus ? c.legit_as_bogus : c.legit_as_legit) += 1;
    }
  }
  return c;
}

ClassificationMetrics metrics_from_counts(const ConfusionCounts& c) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  const std::size_t legit_true = c.legit_as_legit + c.legit_as_bogus;
  const std::size_t bogus_true = c.bogus_as_legit + c.bogus_as_bogus;
  const std::size_t total = legit_true + bogus_true;
  if (legit_true == 0 || bogus_true == 0) {
    throw Error("classification metrics need both classes in the ground truth");
  }
  ClassificationMetrics m;
  m.legit.precision = ratio(c.legit_as_legit, c.legit_as_legit + c.bogus_as_legit);
  m.legit.recall = ratio(c.legit_as_legit, legit_true);
  m.legit.f = f_score(m.legit.precision, m.legit.recall);
  m.legit.support = ratio(legit_true, total);
  m.bogus.precision = ratio(c.bogus_as_bogus, c.bogus_as_bogus + c.legit_as_bogus);
  m.bogus.recall = ratio(c.bogus_as_bogus, bogus_true);
  m.bogus.f = f_score(m.bogus.precision, m.bogus.recall);
  m.bogus.support = ratio(bogus_true, total);
  m.overall = weighted_f(m.legit.f, m.bogus.f, m.legit.support, m.bogus.support);
  return m;
}

ClassificationMetrics confusion_metrics(std::span<const Label> predicted,
                                        std::span<const Label> truth) {
  return metrics_from_counts(confusion_counts(predicted, truth));
}

ClassificationMetrics average(std::span<const ClassificationMetrics> runs) {
  if (runs.empty()) throw Error("average: no metrics");
  ClassificationMetrics m;
  auto add = [](ClassMetrics& into, const ClassMetrics& x) {
    into.precision += x.precision;
    into.recall += x.recall;
    into.f += x.f;
    into.support += x.support;
  };
  for (const auto& r : runs) {
    add(m.legit, r.legit);
    add(m.bogus, r.bogus);
    m.overall += r.overall;
  }
  const double n = static_cast<double>(runs.size());
  for (auto* c : {&m.legit, &m.bogus}) {
    c->precision /= n;
    c->recall /= n;
    c->f /= n;
    c->support /= n;
  }
  m.overall /= n;
  return m;
}

std::size_t affected_population(std::span<const TopKList> lists, std::string_view bogus) {
  std::size_t n = 0;
  for (const auto& l : lists) {
    if (rank_of(bogus, l)) ++n;
  }
  return n;
}

std::optional<double> avg_bogus_rank(std::span<const TopKList> lists, std::string_view bogus) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& l : lists) {
    if (auto r = rank_of(bogus, l)) {
      sum += static_cast<double>(*r);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::size_t piggyback_dominance(std::span<const TopKList> lists, std::string_view bogus,
                                std::string_view target) {
  std::size_t n = 0;
  for (const auto& l : lists) {
    auto b = rank_of(bogus, l);
    if (!b) continue;
    auto t = rank_of(target, l);
    if (!t || *b < *t) ++n;
  }
  return n;
}

ImpactCounts measure_impact(std::span<const TopKList> lists, std::string_view bogus,
                            const std::optional<std::string>& target) {
  ImpactCounts out;
  out.affected_population = affected_population(lists, bogus);
  out.avg_bogus_rank = avg_bogus_rank(lists, bogus);
  if (target) out.piggyback_dominance = piggyback_dominance(lists, bogus, *target);
  return out;
}

std::vector<TopKList> recommend_for(const Corpus& corpus, const EmbeddingTable& table,
                                    std::span<const std::string> users, std::size_t k) {
  ResourceIndex index(resource_profiles(corpus, table));
  std::vector<TopKList> lists;
  lists.reserve(users.size());
  for (const auto& u : users) {
    if (auto p = user_vector(corpus, u, table)) lists.push_back(index.top_k(*p, k));
  }
  return lists;
}

Countermeasure countermeasure(ClassifierKind kind) {
  Countermeasure c{std::string(to_string(kind)), {}};
  if (kind != ClassifierKind::None) {
    c.train = [kind](std::span<const Folksonomy> training,
                     std::shared_ptr<const Vocabulary> vocabulary, const TrainConfig& cfg) {
      return train_classifier(kind, training, std::move(vocabulary), cfg);
    };
  }
  return c;
}

Countermeasure oracle_countermeasure() {
  return {"oracle", [](std::span<const Folksonomy>, std::shared_ptr<const Vocabulary> v,
                       const TrainConfig&) -> std::unique_ptr<Classifier> {
            return std::make_unique<OracleClassifier>(v->fingerprint());
          }};
}

Countermeasure constant_countermeasure(Label label) {
  return {"constant-" + std::string(to_string(label)),
          [label](std::span<const Folksonomy>, std::shared_ptr<const Vocabulary> v,
                  const TrainConfig&) -> std::unique_ptr<Classifier> {
            return std::make_unique<ConstantClassifier>(label, v->fingerprint());
          }};
}

void RunConfig::validate() const {
  if (attacks.empty()) throw ConfigError("at least one attack kind is required");
  if (ratios.empty()) throw ConfigError("at least one injection ratio is required");
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("injection ratios must lie in (0, 1]");
  }
  if (!(training_ratio > 0.0 && training_ratio <= 1.0)) {
    throw ConfigError("training_ratio must lie in (0, 1]");
  }
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  attack.validate();
  train.validate();
}

std::vector<std::size_t> stratified_folds(std::span<const Folksonomy> data, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw Error("stratified_folds: need at least 2 folds");
  std::vector<std::size_t> assignment(data.size(), 0);
  Rng rng(seed);
  // Bogus is dealt first so the smaller class spreads from fold 0, then
  // legitimate continues where it left off to balance fold sizes.
  std::size_t next = 0;
  for (Label label : {Label::Bogus, Label::Legitimate}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].label == label) members.push_back(i);
    }
    if (members.size() < folds) {
      throw Error("stratified_folds: class " + std::string(to_string(label)) + " has " +
                  std::to_string(members.size()) + " examples for " + std::to_string(folds) +
                  " folds");
    }
    rng.shuffle(members);
    for (auto i : members) assignment[i] = next++ % folds;
  }
  return assignment;
}

std::vector<Delta> improvement_vs_baseline(const RunResult& with, const RunResult& without) {
  if (with.attack != without.attack || with.points.size() != without.points.size()) {
    throw Error("improvement_vs_baseline: runs cover different configurations");
  }
  std::vector<Delta> out;
  for (std::size_t i = 0; i < with.points.size(); ++i) {
    const auto& a = with.points[i];
    const auto& b = without.points[i];
    if (a.ratio != b.ratio) throw Error("improvement_vs_baseline: ratio grids differ");
    Delta d{a.ratio, b.impact.affected_population - a.impact.affected_population, std::nullopt};
    if (a.impact.avg_bogus_rank && b.impact.avg_bogus_rank) {
      d.rank_increase = *a.impact.avg_bogus_rank - *b.impact.avg_bogus_rank;
    }
    out.push_back(d);
  }
  return out;
}

namespace {

/// Results of one (repetition, attack) unit.
struct UnitResult {
  // [countermeasure]
  std::vector<std::vector<FoldResult>> folds;
  // [countermeasure][ratio]; the unfiltered baseline is stored last.
  std::vector<std::vector<ImpactCounts>> impact;
  std::vector<double> kl_size;      // [ratio]
  std::vector<double> kl_tag_rank;  // [ratio]
};

std::vector<const Folksonomy*> select_predicted_legit(const Corpus& s,
                                                      std::span<const Label> labels) {
  std::vector<const Folksonomy*> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (labels[i] == Label::Legitimate) out.push_back(&s[i]);
  }
  return out;
}

Corpus materialize(std::span<const Folksonomy* const> members) {
  std::vector<Folksonomy> fs;
  fs.reserve(members.size());
  for (const auto* f : members) fs.push_back(*f);
  return Corpus(std::move(fs));
}

UnitResult run_unit(const Corpus& base, const RunConfig& cfg,
                    std::span<const Countermeasure> cms, const EmbeddingTable* embeddings,
                    std::size_t repetition, AttackKind kind) {
  const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(repetition));
  const std::string kind_name(to_string(kind));

  Corpus sampled = cfg.sample_users > 0
                       ? sample_users(base, cfg.sample_users, derive_seed(rep_seed, "users"))
                       : base;
  auto vocabulary = std::make_shared<const Vocabulary>(build_vocabulary(sampled));
  std::optional<EmbeddingTable> own_table;
  if (!embeddings) {
    own_table.emplace(deterministic_embeddings(*vocabulary, cfg.embedding_dim,
                                               derive_seed(cfg.seed, "embeddings")));
  }
  const EmbeddingTable& table = embeddings ? *embeddings : *own_table;
  std::vector<std::string> users;
  for (const auto& [u, _] : sampled.user_index()) users.push_back(u);

  UnitResult out;
  out.folds.resize(cms.size());
  out.impact.assign(cms.size() + 1, {});

  // Cross-validated training on L plus a disjoint training batch.
  AttackSpec train_spec = cfg.attack;
  train_spec.kind = kind;
  train_spec.injection_ratio = cfg.training_ratio;
  train_spec.seed = derive_seed(rep_seed, "training:" + kind_name);
  train_spec.user_prefix = cfg.attack.user_prefix + "train:";
  BogusBatch training_batch = generate_attack(sampled, train_spec);

  std::vector<Folksonomy> data = sampled.folksonomies();
  data.insert(data.end(), training_batch.folksonomies.begin(),
              training_batch.folksonomies.end());
  const auto fold_of =
      stratified_folds(data, cfg.folds, derive_seed(rep_seed, "folds:" + kind_name));

  // [countermeasure][fold]
  std::vector<std::vector<std::unique_ptr<Classifier>>> models(cms.size());
  // Out-of-fold predictions for the legitimate folksonomies of `sampled`.
  std::vector<std::vector<Label>> legit_predictions(cms.size());
  for (std::size_t c = 0; c < cms.size(); ++c) {
    if (!cms[c].train) continue;
    legit_predictions[c].assign(sampled.size(), Label::Legitimate);
    for (std::size_t f = 0; f < cfg.folds; ++f) {
      std::vector<Folksonomy> train_set, held;
      std::vector<std::size_t> held_pos;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (fold_of[i] == f) {
          held.push_back(data[i]);
          held_pos.push_back(i);
        } else {
          train_set.push_back(data[i]);
        }
      }
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(rep_seed, "model:" + kind_name + ":" + cms[c].name + ":" +
                                          std::to_string(f));
      auto model = cms[c].train(train_set, vocabulary, tc);
      if (model->vocabulary_fingerprint() != vocabulary->fingerprint()) {
        throw Error("countermeasure '" + cms[c].name + "' returned a model for another vocabulary");
      }
      auto predicted = model->predict_all(held);
      std::vector<Label> truth;
      truth.reserve(held.size());
      for (const auto& h : held) truth.push_back(h.label);
      out.folds[c].push_back({repetition, f, confusion_counts(predicted, truth)});
      for (std::size_t j = 0; j < held.size(); ++j) {
        if (held_pos[j] < sampled.size()) legit_predictions[c][held_pos[j]] = predicted[j];
      }
      models[c].push_back(std::move(model));
      spdlog::debug("rep {} {} {} fold {} done", repetition, kind_name, cms[c].name, f);
    }
  }

  const auto legit_sizes = size_histogram(sampled.folksonomies(), cfg.attack.max_size);
  const auto legit_ranks = bin_by_rank(tag_class_distribution(sampled.folksonomies(), *vocabulary));

  for (std::size_t r = 0; r < cfg.ratios.size(); ++r) {
    AttackSpec spec = cfg.attack;
    spec.kind = kind;
    spec.injection_ratio = cfg.ratios[r];
    spec.seed = derive_seed(rep_seed, "attack:" + kind_name + ":" + std::to_string(r));
    BogusBatch batch = generate_attack(sampled, spec);
    Corpus merged = inject(sampled, batch);

    out.kl_size.push_back(
        kl_divergence(legit_sizes, size_histogram(batch.folksonomies, cfg.attack.max_size)));
    out.kl_tag_rank.push_back(kl_divergence(
        legit_ranks, bin_by_rank(tag_class_distribution(batch.folksonomies, *vocabulary))));

    const ImpactCounts baseline = measure_impact(recommend_for(merged, table, users, cfg.k),
                                                 batch.bogus_resource, batch.target_resource);
    out.impact.back().push_back(baseline);

    for (std::size_t c = 0; c < cms.size(); ++c) {
      if (!cms[c].train) {
        out.impact[c].push_back(baseline);
        continue;
      }
      std::vector<Label> labels = legit_predictions[c];
      labels.resize(merged.size(), Label::Legitimate);
      for (std::size_t f = 0; f < cfg.folds; ++f) {
        std::vector<Folksonomy> group;
        for (std::size_t j = f; j < batch.size(); j += cfg.folds) {
          group.push_back(batch.folksonomies[j]);
        }
        auto predicted = models[c][f]->predict_all(group);
        for (std::size_t g = 0; g < predicted.size(); ++g) {
          labels[sampled.size() + f + g * cfg.folds] = predicted[g];
        }
      }
      Corpus filtered = materialize(select_predicted_legit(merged, labels));
      out.impact[c].push_back(measure_impact(recommend_for(filtered, table, users, cfg.k),
                                             batch.bogus_resource, batch.target_resource));
    }
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

ImpactMetrics average_impact(std::span<const UnitResult* const> units, std::size_t cm,
                             std::size_t ratio) {
  ImpactMetrics m;
  double rank_sum = 0.0, dominance_sum = 0.0;
  std::size_t rank_n = 0, dominance_n = 0;
  for (const auto* u : units) {
    const auto& x = u->impact[cm][ratio];
    m.affected_population += static_cast<double>(x.affected_population);
    if (x.avg_bogus_rank) {
      rank_sum += *x.avg_bogus_rank;
      ++rank_n;
    }
    if (x.piggyback_dominance) {
      dominance_sum += static_cast<double>(*x.piggyback_dominance);
      ++dominance_n;
    }
    m.kl_size += u->kl_size[ratio];
    m.kl_tag_rank += u->kl_tag_rank[ratio];
  }
  const double n = static_cast<double>(units.size());
  m.affected_population /= n;
  m.kl_size /= n;
  m.kl_tag_rank /= n;
  if (rank_n) m.avg_bogus_rank = rank_sum / static_cast<double>(rank_n);
  if (dominance_n) m.piggyback_dominance = dominance_sum / static_cast<double>(dominance_n);
  return m;
}

}  // namespace

EvaluationReport run_pipeline(const Corpus& base, const RunConfig& cfg,
                              const EmbeddingTable* embeddings) {
  std::vector<Countermeasure> cms;
  for (auto kind : cfg.classifiers) cms.push_back(countermeasure(kind));
  return run_pipeline(base, cfg, cms, embeddings);
}

EvaluationReport run_pipeline(const Corpus& base, const RunConfig& cfg,
                              std::span<const Countermeasure> cms,
                              const EmbeddingTable* embeddings) {
  cfg.validate();
  if (base.empty()) throw Error("run_pipeline: empty corpus");
  for (const auto& f : base) {
    if (f.label != Label::Legitimate) {
      throw Error("run_pipeline: base corpus must be all legitimate");
    }
  }
  if (embeddings && embeddings->dimension() == 0) throw Error("run_pipeline: empty embeddings");

  const std::size_t units = cfg.repetitions * cfg.attacks.size();
  std::vector<UnitResult> results(units);
  parallel_for(units, cfg.threads, [&](std::size_t i) {
    const std::size_t rep = i / cfg.attacks.size();
    const AttackKind kind = cfg.attacks[i % cfg.attacks.size()];
    spdlog::info("repetition {} attack {}", rep, to_string(kind));
    results[i] = run_unit(base, cfg, cms, embeddings, rep, kind);
  });

  EvaluationReport report{cfg, {}};
  for (std::size_t a = 0; a < cfg.attacks.size(); ++a) {
    std::vector<const UnitResult*> mine;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      mine.push_back(&results[rep * cfg.attacks.size() + a]);
    }
    RunResult baseline{"none", cfg.attacks[a], std::nullopt, {}, {}};
    for (std::size_t r = 0; r < cfg.ratios.size(); ++r) {
      baseline.points.push_back({cfg.ratios[r], average_impact(mine, cms.size(), r), {}});
    }
    for (std::size_t c = 0; c < cms.size(); ++c) {
      RunResult run{cms[c].name, cfg.attacks[a], std::nullopt, {}, {}};
      if (cms[c].train) {
        std::vector<ClassificationMetrics> per_fold;
        for (const auto* u : mine) {
          for (const auto& f : u->folds[c]) {
            run.folds.push_back(f);
            per_fold.push_back(metrics_from_counts(f.counts));
          }
        }
        run.classification = average(per_fold);
      }
      for (std::size_t r = 0; r < cfg.ratios.size(); ++r) {
        run.points.push_back({cfg.ratios[r], average_impact(mine, c, r), {}});
      }
      auto deltas = improvement_vs_baseline(run, baseline);
      for (std::size_t r = 0; r < deltas.size(); ++r) run.points[r].delta = deltas[r];
      report.runs.push_back(std::move(run));
    }
  }
  return report;
}

}  // namespace tagguard
