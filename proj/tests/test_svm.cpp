#include <cmath>
#include <memory>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tagguard/error.hpp"
#include "tagguard/random.hpp"
#include "tagguard/svm.hpp"

using namespace tagguard;

namespace {

// Points on both sides of the line x + 2y = 1 at distance >= 0.5.
void separable_set(std::uint64_t seed, std::vector<SparseVector>& xs, std::vector<int>& ys) {
  Rng rng(seed);
  const double norm = std::sqrt(5.0);
  while (xs.size() < 20) {
    double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
    double signed_distance = (a + 2.0 * b - 1.0) / norm;
    if (std::abs(signed_distance) < 0.5) continue;
    int y = signed_distance > 0 ? 1 : -1;
    // Keep the classes balanced.
    int have = 0;
    for (int v : ys) have += v == y;
    if (have == 10) continue;
    xs.push_back({{0u, a}, {1u, b}});
    ys.push_back(y);
  }
}

std::size_t correct(const SvmModel& m, const std::vector<SparseVector>& xs,
                    const std::vector<int>& ys) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) n += (m.decision(xs[i]) > 0) == (ys[i] > 0);
  return n;
}

std::vector<Folksonomy> docs(std::vector<std::vector<std::string>> tags) {
  std::vector<Folksonomy> out;
  int n = 0;
  for (auto& t : tags) out.push_back({"u" + std::to_string(n++), "r", t, Label::Legitimate});
  return out;
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("idf is ln(D / D_t)") {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> t{"common"};
    if (i < 10) t.push_back("rare");
    rows.push_back(t);
  }
  auto training = docs(rows);
  Corpus c(training);
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(c));
  auto vz = TfidfVectorizer::fit(training, vocab);
  CHECK(vz.documents() == 100);
  CHECK(vz.idf("rare") == doctest::Approx(std::log(10.0)));
  CHECK(vz.idf("rare") == doctest::Approx(2.3026).epsilon(1e-4));
  CHECK(vz.idf("common") == 0.0);
  CHECK(vz.idf("absent") == doctest::Approx(std::log(101.0)));
  for (double v : vz.idf_values()) CHECK(v >= 0.0);
}

TEST_CASE("tf-idf components use |d_t| / |d|") {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> t{"common", "f" + std::to_string(i % 4)};
    if (i < 10) t.push_back("rare");
    rows.push_back(t);
  }
  auto training = docs(rows);
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(Corpus(training)));
  auto vz = TfidfVectorizer::fit(training, vocab);
  Folksonomy five{"x", "r", {"rare", "common", "f0", "f1", "unknown"}, Label::Unlabeled};
  auto v = vz.transform(five);
  CHECK(v.size() <= five.tags.size());
  const auto rare = static_cast<std::uint32_t>(*vocab->index("rare") - 1);
  const auto common = static_cast<std::uint32_t>(*vocab->index("common") - 1);
  for (const auto& [j, x] : v) {
    if (j == rare) CHECK(x == doctest::Approx(0.2 * std::log(10.0)));
    if (j == rare) CHECK(x == doctest::Approx(0.4605).epsilon(1e-3));
    if (j == common) CHECK(x == 0.0);
  }
  CHECK(vz.transform(Folksonomy{"x", "r", {}, Label::Unlabeled}).empty());
}

TEST_CASE("decision function and labels") {
  SvmModel m{Eigen::Vector2d(1.0, 0.0), -1.0, 1.0};
  std::vector<double> x{3.0, 5.0};
  CHECK(svm_decision(m, x) == doctest::Approx(2.0));
  CHECK(svm_label(svm_decision(m, x)) == Label::Legitimate);
  std::vector<double> on{1.0, 7.0};
  CHECK(svm_decision(m, on) == 0.0);
  CHECK(svm_label(0.0) == Label::Bogus);
  std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(svm_decision(m, wrong), Error);

  SvmModel neg{-m.weights, -m.bias, 1.0};
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> p{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    CHECK(svm_decision(neg, p) == doctest::Approx(-svm_decision(m, p)));
  }
}

TEST_CASE("separable pair in one dimension") {
  std::vector<SparseVector> xs{{{0u, -1.0}}, {{0u, 1.0}}};
  std::vector<int> ys{-1, 1};
  auto r = svm_train(xs, ys, 1, SvmTrainOptions{1.0, 200, 3});
  CHECK(correct(r.model, xs, ys) == 2);
}

TEST_CASE("separable 2-D set reaches full training accuracy") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<SparseVector> xs;
    std::vector<int> ys;
    separable_set(seed, xs, ys);
    auto r = svm_train(xs, ys, 2, SvmTrainOptions{10.0, 1000, seed});
    CHECK(correct(r.model, xs, ys) == xs.size());
    SvmModel zero{Eigen::VectorXd::Zero(2), 0.0, 10.0};
    CHECK(svm_objective(r.model, xs, ys) <= svm_objective(zero, xs, ys));
  }
}

TEST_CASE("objective trace never increases") {
  std::vector<SparseVector> xs;
  std::vector<int> ys;
  separable_set(9, xs, ys);
  // Flip two labels so the problem is not separable.
  ys[0] = -ys[0];
  ys[1] = -ys[1];
  auto r = svm_train(xs, ys, 2, SvmTrainOptions{1.0, 300, 4});
  REQUIRE(r.objective_trace.size() == 301);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
    CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-6);
  }
  CHECK(svm_objective(r.model, xs, ys) == doctest::Approx(r.objective_trace.back()));
}

TEST_CASE("duplicating the data at half the penalty keeps the boundary") {
  std::vector<SparseVector> xs;
  std::vector<int> ys;
  separable_set(4, xs, ys);
  ys[3] = -ys[3];
  auto once = svm_train(xs, ys, 2, SvmTrainOptions{2.0, 2000, 1});
  auto dx = xs;
  auto dy = ys;
  dx.insert(dx.end(), xs.begin(), xs.end());
  dy.insert(dy.end(), ys.begin(), ys.end());
  auto twice = svm_train(dx, dy, 2, SvmTrainOptions{1.0, 2000, 1});
  // Same objective function, so the same minimizer.
  Eigen::VectorXd a = once.model.weights.normalized();
  Eigen::VectorXd b = twice.model.weights.normalized();
  CHECK((a - b).norm() < 1e-3);
}

TEST_CASE("invalid training input") {
  std::vector<SparseVector> xs{{{0u, 1.0}}, {{0u, 2.0}}};
  std::vector<int> same{1, 1};
  CHECK_THROWS_AS(svm_train(xs, same, 1, {}), Error);
  std::vector<int> bad{1, 0};
  CHECK_THROWS_AS(svm_train(xs, bad, 1, {}), Error);
  std::vector<int> ok{1, -1};
  CHECK_THROWS_AS(svm_train(xs, ok, 0, {}), Error);
  CHECK_THROWS_AS(svm_train(xs, ok, 1, SvmTrainOptions{0.0, 10, 0}), Error);
}

TEST_CASE("svm classifier on the worked example") {
  auto c = tagguard::testing::example_corpus();
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(c));
  auto rows = c.folksonomies();
  for (auto& f : tagguard::testing::example_piggyback_rows()) rows.push_back(f);
  TrainConfig cfg;
  cfg.svm_epochs = 500;
  auto svm = train_svm_classifier(rows, vocab, cfg);
  for (const auto& f : rows) CHECK(svm.predict(f) == svm_label(svm.margin(f)));
  CHECK(svm.vocabulary_fingerprint() == vocab->fingerprint());
  auto again = train_svm_classifier(rows, vocab, cfg);
  CHECK(again.model().weights == svm.model().weights);
  CHECK(again.model().bias == svm.model().bias);
}

}  // TEST_SUITE
