#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tagguard/attacks.hpp"
#include "tagguard/error.hpp"
#include "tagguard/synthetic.hpp"

using namespace tagguard;
using tagguard::testing::example_corpus;
using tagguard::testing::random_corpus;

namespace {

AttackSpec example_spec(AttackKind kind) {
  AttackSpec s;
  s.kind = kind;
  s.injection_ratio = 1.0;
  s.popular_tag_pool = 2;
  s.popular_resource_pool = 3;
  s.seed = 4;
  return s;
}

const Corpus& desk() {
  static const Corpus c = generate_desk_corpus();
  return c;
}

}  // namespace

TEST_SUITE("attacks") {

TEST_CASE("batch size is round(ratio * legit), at least one") {
  CHECK(attack_batch_size(1000, 0.10) == 100);
  CHECK(attack_batch_size(1000, 0.001) == 1);
  CHECK(attack_batch_size(10, 0.001) == 1);
  CHECK(attack_batch_size(73000, 0.3) == 21900);
  CHECK(attack_batch_size(10, 0.25) == 3);  // 2.5 rounds away from zero
}

TEST_CASE("attack spec validation") {
  AttackSpec s;
  s.injection_ratio = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.injection_ratio = 1.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.injection_ratio = 1.0;
  s.max_size = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.max_size = 5;
  s.popular_tag_pool = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(parse_attack_kind("focused"), ConfigError);
  CHECK(parse_attack_kind("piggyback") == AttackKind::Piggyback);
}

TEST_CASE("overload pool on the example prefers tags of popular resources") {
  auto pool = overload_tag_pool(example_corpus(), example_spec(AttackKind::Overload));
  CHECK(pool == std::vector<std::string>{"car", "dog"});
}

TEST_CASE("overload pool backfills by global frequency") {
  Corpus c({{"a", "big", {"x"}, Label::Legitimate},
            {"b", "big", {"x", "y"}, Label::Legitimate},
            {"c", "small", {"p"}, Label::Legitimate},
            {"d", "small2", {"p"}, Label::Legitimate},
            {"e", "small3", {"p", "q"}, Label::Legitimate}});
  AttackSpec s;
  s.popular_tag_pool = 3;
  s.popular_resource_pool = 1;
  // {x, y} come from the top resource; p is the most frequent backfill.
  CHECK(overload_tag_pool(c, s) == std::vector<std::string>{"x", "y", "p"});
}

TEST_CASE("overload batches stay inside the pool and size bounds") {
  AttackSpec s;
  s.kind = AttackKind::Overload;
  s.injection_ratio = 0.5;
  s.seed = 8;
  const auto& c = desk();
  auto batch = generate_overload(c, s);
  auto pool = overload_tag_pool(c, s);
  std::set<std::string> allowed(pool.begin(), pool.end());
  CHECK(pool.size() == s.popular_tag_pool);
  CHECK(batch.size() == attack_batch_size(c.size(), 0.5));
  std::set<std::string> users;
  for (const auto& f : batch.folksonomies) {
    CHECK(f.label == Label::Bogus);
    CHECK(f.resource == s.bogus_resource);
    CHECK(!f.tags.empty());
    CHECK(f.tags.size() <= s.max_size);
    std::set<std::string> unique(f.tags.begin(), f.tags.end());
    CHECK(unique.size() == f.tags.size());
    for (const auto& t : f.tags) CHECK(allowed.count(t) == 1);
    CHECK_FALSE(c.has_user(f.user));
    users.insert(f.user);
  }
  CHECK(users.size() == batch.size());
}

TEST_CASE("generation is deterministic for a fixed seed") {
  for (auto kind : {AttackKind::Overload, AttackKind::Piggyback}) {
    AttackSpec s;
    s.kind = kind;
    s.injection_ratio = 0.05;
    s.seed = 21;
    auto a = generate_attack(desk(), s);
    auto b = generate_attack(desk(), s);
    CHECK(a.folksonomies == b.folksonomies);
    s.seed = 22;
    CHECK(generate_attack(desk(), s).folksonomies != a.folksonomies);
  }
}

TEST_CASE("overload rejects corpora that are too small") {
  AttackSpec s;
  s.popular_tag_pool = 6;
  s.popular_resource_pool = 3;
  CHECK_THROWS_AS(generate_overload(example_corpus(), s), Error);
  s.popular_tag_pool = 2;
  s.popular_resource_pool = 4;
  CHECK_THROWS_AS(generate_overload(example_corpus(), s), Error);
}

TEST_CASE("a bogus resource that already exists is rejected") {
  auto s = example_spec(AttackKind::Overload);
  s.bogus_resource = "res2";
  CHECK_THROWS_AS(generate_attack(example_corpus(), s), Error);
}

TEST_CASE("piggyback on the example replicates the target's tags") {
  auto s = example_spec(AttackKind::Piggyback);
  s.max_size = 2;
  auto batch = generate_piggyback(example_corpus(), s);
  REQUIRE(batch.target_resource == "res1");
  // Tags on res1 ranked by use on res1: food twice, the rest once.
  CHECK(batch.tag_pool.front() == "food");
  std::set<std::string> target{"food", "power", "dog", "car", "web"};
  CHECK(std::set<std::string>(batch.tag_pool.begin(), batch.tag_pool.end()) == target);
  for (const auto& f : batch.folksonomies) {
    for (const auto& t : f.tags) CHECK(target.count(t) == 1);
  }
}

TEST_CASE("piggyback folksonomies up to the target's tag count stay on target tags") {
  AttackSpec s;
  s.kind = AttackKind::Piggyback;
  s.injection_ratio = 0.3;
  s.seed = 3;
  const auto& c = desk();
  auto batch = generate_piggyback(c, s);
  const auto target = *batch.target_resource;
  CHECK(target == top_annotated_resources(c, 1).front());
  std::set<std::string> on_target;
  for (auto i : c.resource_index().at(target)) {
    on_target.insert(c[i].tags.begin(), c[i].tags.end());
  }
  for (const auto& f : batch.folksonomies) {
    REQUIRE(f.tags.size() <= on_target.size());
    for (const auto& t : f.tags) CHECK(on_target.count(t) == 1);
  }
}

TEST_CASE("piggyback folksonomies larger than the target take every target tag first") {
  Corpus c({{"u1", "big", {"a", "b", "c", "d"}, Label::Legitimate},
            {"u2", "big", {"a", "b", "c", "e"}, Label::Legitimate},
            {"u3", "small", {"z"}, Label::Legitimate}});
  AttackSpec s;
  s.kind = AttackKind::Piggyback;
  s.injection_ratio = 1.0;
  s.popular_resource_pool = 2;
  s.target_resource = "small";
  std::size_t exceeding = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    s.seed = seed;
    for (const auto& f : generate_piggyback(c, s).folksonomies) {
      CHECK(std::find(f.tags.begin(), f.tags.end(), "z") != f.tags.end());
      if (f.tags.size() > 1) ++exceeding;
    }
  }
  CHECK(exceeding > 0);
}

TEST_CASE("piggyback honours an explicit target and rejects unknown ones") {
  auto s = example_spec(AttackKind::Piggyback);
  s.target_resource = "res2";
  auto batch = generate_piggyback(example_corpus(), s);
  CHECK(batch.target_resource == "res2");
  s.target_resource = "missing";
  CHECK_THROWS_AS(generate_piggyback(example_corpus(), s), Error);
}

TEST_CASE("inject merges and preserves labels") {
  auto c = example_corpus();
  BogusBatch empty;
  CHECK(inject(c, empty) == c);

  BogusBatch b;
  b.bogus_resource = "bogus1";
  b.folksonomies = tagguard::testing::example_overload_rows();
  auto merged = inject(c, b);
  CHECK(merged.size() == c.size() + b.size());
  CHECK(merged.with_label(Label::Legitimate) == c);
  CHECK(merged.with_label(Label::Bogus) == b.to_corpus());

  BogusBatch clash;
  clash.folksonomies = {{"alice", "bogus1", {"car"}, Label::Bogus}};
  CHECK_THROWS_AS(inject(c, clash), Error);
}

TEST_CASE("fake users skip names already in the host") {
  auto rows = example_corpus().folksonomies();
  rows.push_back({"fake:0", "res9", {"car"}, Label::Legitimate});
  Corpus host(rows);
  AttackSpec s = example_spec(AttackKind::Overload);
  auto batch = generate_overload(host, s);
  for (const auto& f : batch.folksonomies) CHECK(f.user != "fake:0");
}

TEST_CASE("tag class distribution") {
  Vocabulary v({"car", "dog"});
  std::vector<Folksonomy> one{{"u", "r", {"car", "dog"}, Label::Legitimate}};
  CHECK(tag_class_distribution(one, v) == std::vector<double>{0.5, 0.5});
  std::vector<Folksonomy> none;
  CHECK_THROWS_AS(tag_class_distribution(none, v), Error);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = random_corpus(seed, 6, 10, 20, 5);
    REQUIRE(c.size() <= 50);
    auto vocab = build_vocabulary(c);
    auto p = tag_class_distribution(c.folksonomies(), vocab);
    double total = 0.0;
    for (double x : p) total += x;
    CHECK(std::abs(total - 1.0) < 1e-12);
    std::vector<double> counts(vocab.size(), 0.0);
    double n = 0.0;
    for (const auto& f : c) {
      for (const auto& t : f.tags) {
        for (std::size_t i = 1; i <= vocab.size(); ++i) {
          if (vocab.tag(i) == t) counts[i - 1] += 1.0;
        }
        n += 1.0;
      }
    }
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(counts[i] / n));
  }
}

TEST_CASE("rank binning uses powers of two") {
  std::vector<double> p(10, 0.1);
  auto bins = bin_by_rank(p);
  // ranks 1 | 2-3 | 4-7 | 8-10
  REQUIRE(bins.size() == 4);
  CHECK(bins[0] == doctest::Approx(0.1));
  CHECK(bins[1] == doctest::Approx(0.2));
  CHECK(bins[2] == doctest::Approx(0.4));
  CHECK(bins[3] == doctest::Approx(0.3));
}

TEST_CASE("size histogram") {
  std::vector<Folksonomy> fs{{"a", "r", {"x"}, Label::Bogus},
                             {"b", "r", {"x", "y", "z"}, Label::Bogus},
                             {"c", "r", {"x", "y", "z", "w"}, Label::Bogus}};
  auto h = size_histogram(fs, 3);
  CHECK(h == std::vector<double>{1.0 / 3.0, 0.0, 2.0 / 3.0});
}

TEST_CASE("kl divergence") {
  std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  CHECK(kl_divergence(p, q) ==
        doctest::Approx(0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1)).epsilon(1e-9));
  CHECK(kl_divergence(p, q) == doctest::Approx(0.5108).epsilon(1e-4));
  CHECK(kl_divergence(p, p) == doctest::Approx(0.0));
  std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(kl_divergence(p, shorter), Error);
  std::vector<double> unnormalized{0.5, 0.6};
  CHECK_THROWS_AS(kl_divergence(p, unnormalized), Error);
}

TEST_CASE("kl divergence is non-negative and zero only on equal inputs") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng.index(8);
    std::vector<double> p(n), q(n);
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.index(3) == 0 ? 0.0 : rng.uniform();
      q[i] = rng.index(3) == 0 ? 0.0 : rng.uniform();
      sp += p[i];
      sq += q[i];
    }
    if (sp == 0.0 || sq == 0.0) continue;
    for (auto& x : p) x /= sp;
    for (auto& x : q) x /= sq;
    CHECK(kl_divergence(p, q) >= 0.0);
    CHECK(std::abs(kl_divergence(p, p)) < 1e-9);
  }
}

}  // TEST_SUITE
