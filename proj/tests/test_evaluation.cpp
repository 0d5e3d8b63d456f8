#include <cmath>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tagguard/error.hpp"
#include "tagguard/evaluation.hpp"
#include "tagguard/synthetic.hpp"

using namespace tagguard;

namespace {

TopKList list_with(const std::string& user, std::vector<std::string> resources) {
  TopKList l{user, {}};
  double s = 1.0;
  for (auto& r : resources) {
    l.items.push_back({r, s});
    s -= 0.01;
  }
  return l;
}

// Places "bogus" at a 1-based rank, or leaves it out for rank 0.
TopKList list_ranking_bogus(const std::string& user, std::size_t rank) {
  std::vector<std::string> items;
  for (std::size_t i = 1; i <= 10; ++i) {
    items.push_back(i == rank ? "bogus" : "r" + std::to_string(i));
  }
  return list_with(user, items);
}

const Corpus& small_desk() {
  static const Corpus c = [] {
    DeskCorpusSpec s;
    s.users = 60;
    s.resources = 200;
    s.tags = 400;
    s.topics = 4;
    s.seed = 3;
    return generate_desk_corpus(s);
  }();
  return c;
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.ratios = {0.01, 0.1};
  cfg.folds = 3;
  cfg.repetitions = 2;
  cfg.classifiers = {ClassifierKind::None, ClassifierKind::NaiveBayes};
  cfg.embedding_dim = 10;
  cfg.seed = 17;
  return cfg;
}

const RunResult& find_run(const EvaluationReport& r, const std::string& name, AttackKind a) {
  for (const auto& run : r.runs) {
    if (run.classifier == name && run.attack == a) return run;
  }
  throw Error("run not found: " + name);
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("f-score") {
  CHECK(f_score(1.0, 1.0) == 1.0);
  CHECK(f_score(0.5, 1.0) == doctest::Approx(0.6667).epsilon(1e-4));
  CHECK(f_score(0.0, 0.0) == 0.0);
}

TEST_CASE("support-weighted overall F matches the reference values") {
  CHECK(std::abs(weighted_f(0.9665, 0.8958, 0.7692, 0.2308) - 0.9501) <= 0.001);
  CHECK(weighted_f(0.9665, 0.8958, 0.7692, 0.2308) == doctest::Approx(0.9502).epsilon(1e-4));
  CHECK(std::abs(weighted_f(0.97888, 0.9319, 0.7692, 0.2308) - 0.9680) <= 0.002);
  // Weights are normalized, so raw counts work too.
  CHECK(weighted_f(0.9665, 0.8958, 1.0, 0.3) ==
        doctest::Approx(weighted_f(0.9665, 0.8958, 1.0 / 1.3, 0.3 / 1.3)));
}

TEST_CASE("confusion metrics") {
  std::vector<Label> truth{Label::Legitimate, Label::Legitimate, Label::Legitimate,
                           Label::Bogus, Label::Bogus};
  auto perfect = confusion_metrics(truth, truth);
  CHECK(perfect.legit.f == 1.0);
  CHECK(perfect.bogus.f == 1.0);
  CHECK(perfect.overall == 1.0);

  std::vector<Label> pred{Label::Legitimate, Label::Legitimate, Label::Bogus, Label::Bogus,
                          Label::Legitimate};
  auto m = confusion_metrics(pred, truth);
  CHECK(m.bogus.precision == doctest::Approx(0.5));
  CHECK(m.bogus.recall == doctest::Approx(0.5));
  CHECK(m.legit.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.legit.recall == doctest::Approx(2.0 / 3.0));
  CHECK(m.legit.support == doctest::Approx(0.6));
  CHECK(m.overall == doctest::Approx(0.6 * (2.0 / 3.0) + 0.4 * 0.5));

  auto counts = confusion_counts(pred, truth);
  CHECK(counts == ConfusionCounts{2, 1, 1, 1});
  auto again = metrics_from_counts(counts);
  CHECK(again.overall == m.overall);

  std::vector<Label> short_pred{Label::Legitimate};
  CHECK_THROWS_AS(confusion_metrics(short_pred, truth), Error);
  std::vector<Label> one_class(5, Label::Legitimate);
  CHECK_THROWS_AS(confusion_metrics(one_class, one_class), Error);
}

TEST_CASE("all-legitimate predictor scores zero on the bogus class") {
  std::vector<Label> truth(100, Label::Legitimate);
  for (std::size_t i = 0; i < 10; ++i) truth[i] = Label::Bogus;
  std::vector<Label> pred(100, Label::Legitimate);
  auto m = confusion_metrics(pred, truth);
  CHECK(m.bogus.recall == 0.0);
  CHECK(m.bogus.f == 0.0);
  CHECK(m.legit.recall == 1.0);
}

TEST_CASE("averaging metrics") {
  ClassificationMetrics a, b;
  a.overall = 0.8;
  b.overall = 0.6;
  a.bogus.f = 1.0;
  std::vector<ClassificationMetrics> runs{a, b};
  auto m = average(runs);
  CHECK(m.overall == doctest::Approx(0.7));
  CHECK(m.bogus.f == doctest::Approx(0.5));
}

TEST_CASE("impact metrics on a hand-built fixture") {
  std::vector<TopKList> lists{list_ranking_bogus("u1", 2), list_ranking_bogus("u2", 7),
                              list_ranking_bogus("u3", 0), list_ranking_bogus("u4", 1),
                              list_ranking_bogus("u5", 0)};
  CHECK(affected_population(lists, "bogus") == 3);
  CHECK(*avg_bogus_rank(lists, "bogus") == doctest::Approx(3.3333).epsilon(1e-4));
  CHECK(affected_population(lists, "nothing") == 0);
  CHECK_FALSE(avg_bogus_rank(lists, "nothing").has_value());

  std::vector<TopKList> all_first;
  for (int i = 0; i < 10; ++i) all_first.push_back(list_ranking_bogus("u" + std::to_string(i), 1));
  CHECK(affected_population(all_first, "bogus") == 10);
  CHECK(*avg_bogus_rank(all_first, "bogus") == 1.0);
}

TEST_CASE("piggyback dominance") {
  std::vector<TopKList> lists{
      list_with("u1", {"bogus", "target"}),  // dominated
      list_with("u2", {"target", "bogus"}),  // not
      list_with("u3", {"bogus", "x"}),       // target absent: dominated
      list_with("u4", {"target", "x"}),      // bogus absent
  };
  CHECK(piggyback_dominance(lists, "bogus", "target") == 2);
  auto with = measure_impact(lists, "bogus", std::string("target"));
  CHECK(with.affected_population == 3);
  CHECK(*with.piggyback_dominance == 2);
  auto without = measure_impact(lists, "bogus", std::nullopt);
  CHECK_FALSE(without.piggyback_dominance.has_value());
}

TEST_CASE("improvement over the baseline") {
  RunResult base{"none", AttackKind::Overload, std::nullopt, {}, {}};
  RunResult with{"nb", AttackKind::Overload, std::nullopt, {}, {}};
  PointResult p;
  p.ratio = 0.1;
  p.impact.affected_population = 30.0;
  p.impact.avg_bogus_rank = 4.0;
  base.points.push_back(p);
  auto same = improvement_vs_baseline(base, base);
  REQUIRE(same.size() == 1);
  CHECK(same[0].population_reduction == 0.0);
  CHECK(*same[0].rank_increase == 0.0);

  p.impact.affected_population = 5.0;
  p.impact.avg_bogus_rank = 9.0;
  with.points.push_back(p);
  auto d = improvement_vs_baseline(with, base);
  CHECK(d[0].ratio == 0.1);
  CHECK(d[0].population_reduction == 25.0);
  CHECK(*d[0].rank_increase == 5.0);

  with.points[0].impact.avg_bogus_rank.reset();
  CHECK_FALSE(improvement_vs_baseline(with, base)[0].rank_increase.has_value());

  RunResult other = with;
  other.attack = AttackKind::Piggyback;
  CHECK_THROWS_AS(improvement_vs_baseline(other, base), Error);
  other = with;
  other.points[0].ratio = 0.2;
  CHECK_THROWS_AS(improvement_vs_baseline(other, base), Error);
}

TEST_CASE("stratified folds hold both classes") {
  std::vector<Folksonomy> data;
  for (int i = 0; i < 47; ++i) data.push_back({"u", "r", {"a"}, Label::Legitimate});
  for (int i = 0; i < 13; ++i) data.push_back({"f", "b", {"a"}, Label::Bogus});
  auto folds = stratified_folds(data, 10, 5);
  REQUIRE(folds.size() == data.size());
  std::vector<std::size_t> legit(10, 0), bogus(10, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    REQUIRE(folds[i] < 10);
    (data[i].label == Label::Bogus ? bogus : legit)[folds[i]]++;
  }
  for (std::size_t f = 0; f < 10; ++f) {
    CHECK(legit[f] >= 4);
    CHECK(legit[f] <= 5);
    CHECK(bogus[f] >= 1);
    CHECK(bogus[f] <= 2);
  }
  CHECK(stratified_folds(data, 10, 5) == folds);
}

TEST_CASE("run configuration validation") {
  RunConfig ok = small_config();
  CHECK_NOTHROW(ok.validate());
  auto bad = ok;
  bad.ratios = {0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.folds = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.attacks.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("without an attack nobody is affected") {
  const auto& c = small_desk();
  auto table = deterministic_embeddings(build_vocabulary(c), 10, 1);
  std::vector<std::string> users;
  for (const auto& [u, _] : c.user_index()) users.push_back(u);
  auto lists = recommend_for(c, table, users, 15);
  CHECK(lists.size() == users.size());
  CHECK(affected_population(lists, "bogus:resource") == 0);
}

TEST_CASE("pipeline invariants") {
  const auto& c = small_desk();
  auto cfg = small_config();
  std::vector<Countermeasure> cms{countermeasure(ClassifierKind::None), oracle_countermeasure(),
                                  constant_countermeasure(Label::Legitimate),
                                  countermeasure(ClassifierKind::NaiveBayes)};
  auto report = run_pipeline(c, cfg, cms);
  for (AttackKind a : cfg.attacks) {
    const auto& base = find_run(report, "none", a);
    const auto& oracle = find_run(report, "oracle", a);
    const auto& constant = find_run(report, "constant-legitimate", a);
    const auto& nb = find_run(report, "nb", a);
    CHECK_FALSE(base.classification.has_value());
    REQUIRE(base.points.size() == cfg.ratios.size());

    for (std::size_t i = 0; i < cfg.ratios.size(); ++i) {
      CHECK(oracle.points[i].impact.affected_population == 0.0);
      CHECK(oracle.points[i].delta.population_reduction ==
            base.points[i].impact.affected_population);
      CHECK(constant.points[i].impact.affected_population ==
            base.points[i].impact.affected_population);
      CHECK(constant.points[i].impact.avg_bogus_rank == base.points[i].impact.avg_bogus_rank);
      CHECK(constant.points[i].impact.piggyback_dominance ==
            base.points[i].impact.piggyback_dominance);
      CHECK(constant.points[i].delta.population_reduction == 0.0);
    }
    CHECK(oracle.classification->overall == 1.0);
    CHECK(constant.classification->bogus.f == 0.0);

    CHECK(nb.folds.size() == cfg.folds * cfg.repetitions);
    std::vector<ClassificationMetrics> per_fold;
    for (const auto& f : nb.folds) per_fold.push_back(metrics_from_counts(f.counts));
    CHECK(average(per_fold).overall == doctest::Approx(nb.classification->overall));
    CHECK(nb.classification->overall > 0.5);
  }
}

TEST_CASE("pipeline is deterministic") {
  const auto& c = small_desk();
  auto cfg = small_config();
  cfg.attacks = {AttackKind::Piggyback};
  auto a = run_pipeline(c, cfg);
  auto b = run_pipeline(c, cfg);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t r = 0; r < a.runs.size(); ++r) {
    CHECK(a.runs[r].classifier == b.runs[r].classifier);
    for (std::size_t i = 0; i < a.runs[r].points.size(); ++i) {
      const auto& x = a.runs[r].points[i].impact;
      const auto& y = b.runs[r].points[i].impact;
      CHECK(x.affected_population == y.affected_population);
      CHECK(x.avg_bogus_rank == y.avg_bogus_rank);
      CHECK(x.kl_size == y.kl_size);
    }
    for (std::size_t i = 0; i < a.runs[r].folds.size(); ++i) {
      CHECK(a.runs[r].folds[i].counts == b.runs[r].folds[i].counts);
    }
  }
  cfg.threads = 2;
  auto threaded = run_pipeline(c, cfg);
  for (std::size_t r = 0; r < a.runs.size(); ++r) {
    for (std::size_t i = 0; i < a.runs[r].points.size(); ++i) {
      CHECK(threaded.runs[r].points[i].impact.affected_population ==
            a.runs[r].points[i].impact.affected_population);
    }
  }
}

}  // TEST_SUITE
