#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tagguard/error.hpp"
#include "tagguard/random.hpp"
#include "tagguard/recommender.hpp"

using namespace tagguard;

namespace {

EmbeddingTable parse_table(const std::string& text) {
  std::istringstream in(text);
  return load_embeddings(in);
}

std::vector<ProfileVector> random_profiles(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<ProfileVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    char name[16];
    std::snprintf(name, sizeof name, "r%03zu", i);
    out.push_back({name, v, 1});
  }
  return out;
}

// Brute force: score everything, full sort, cut at k.
std::vector<Recommendation> brute_top_k(const ProfileVector& u,
                                        const std::vector<ProfileVector>& rs, std::size_t k) {
  std::vector<Recommendation> all;
  for (const auto& r : rs) all.push_back({r.owner, cosine(u.vector, r.vector)});
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.resource < b.resource;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace

TEST_SUITE("recommender") {

TEST_CASE("embedding text format") {
  auto t = parse_table("car 0.1 0.2\ndog 0.3 0.4\n");
  CHECK(t.dimension() == 2);
  CHECK(t.size() == 2);
  auto v = t.find("dog");
  REQUIRE(v.has_value());
  CHECK((*v)[1] == doctest::Approx(0.4));
  CHECK_FALSE(t.find("cat").has_value());
}

TEST_CASE("embedding format errors carry line numbers") {
  try {
    parse_table("car 0.1 0.2\ndog 0.3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_table("car 0.1 abc\n"), ParseError);
  CHECK_THROWS_AS(parse_table("car 0.1\ncar 0.2\n"), Error);
  CHECK_THROWS_AS(parse_table("car nan\n"), Error);
  CHECK_THROWS_AS(parse_table(""), Error);
}

TEST_CASE("deterministic vectors") {
  auto a = deterministic_vector("car", 50, 3);
  CHECK(a == deterministic_vector("car", 50, 3));
  CHECK(a.size() == 50);
  for (double x : a) {
    CHECK(x >= -1.0);
    CHECK(x <= 1.0);
  }
  std::vector<std::string> tags;
  for (int i = 0; i < 100; ++i) tags.push_back("tag" + std::to_string(i));
  Vocabulary v(tags);
  auto t1 = deterministic_embeddings(v, 8, 1);
  auto t2 = deterministic_embeddings(v, 8, 2);
  bool differs = false;
  for (const auto& t : tags) {
    auto x = *t1.find(t), y = *t2.find(t);
    differs = differs || !std::equal(x.begin(), x.end(), y.begin());
  }
  CHECK(differs);
  // A tag's vector does not depend on the rest of the vocabulary.
  Vocabulary small({"tag7"});
  auto small_table = deterministic_embeddings(small, 8, 1);
  auto alone = *small_table.find("tag7");
  auto within = *t1.find("tag7");
  CHECK(std::equal(alone.begin(), alone.end(), within.begin()));
}

TEST_CASE("folksonomy and profile vectors are means") {
  EmbeddingTable t(2);
  std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
  t.add("a", a);
  t.add("b", b);
  Folksonomy ab{"u", "r", {"a", "b"}, Label::Legitimate};
  CHECK(*folksonomy_vector(ab, t) == std::vector<double>{0.5, 0.5});
  Folksonomy only_a{"u", "r2", {"a", "zzz"}, Label::Legitimate};
  CHECK(*folksonomy_vector(only_a, t) == a);
  Folksonomy none{"u", "r3", {"zzz"}, Label::Legitimate};
  CHECK_FALSE(folksonomy_vector(none, t).has_value());

  Folksonomy fa{"u", "r1", {"a"}, Label::Legitimate};
  Folksonomy fb{"u", "r2", {"b"}, Label::Legitimate};
  std::vector<const Folksonomy*> one{&fa};
  auto p1 = profile_vector("u", one, t);
  CHECK(p1->vector == a);
  CHECK(p1->support == 1);
  std::vector<const Folksonomy*> two{&fa, &fb, &none};
  auto p2 = profile_vector("u", two, t);
  CHECK(p2->vector == std::vector<double>{0.5, 0.5});
  CHECK(p2->support == 2);
  std::vector<const Folksonomy*> empty{&none};
  CHECK_FALSE(profile_vector("u", empty, t).has_value());
}

TEST_CASE("cold-start owners get no profile") {
  EmbeddingTable t(2);
  std::vector<double> a{1.0, 0.0};
  t.add("a", a);
  Corpus c({{"u1", "r1", {"a"}, Label::Legitimate}, {"u2", "r2", {"zzz"}, Label::Legitimate}});
  auto users = user_profiles(c, t);
  REQUIRE(users.size() == 1);
  CHECK(users[0].owner == "u1");
  auto resources = resource_profiles(c, t);
  REQUIRE(resources.size() == 1);
  CHECK(resources[0].owner == "r1");
  CHECK_FALSE(user_vector(c, "u2", t).has_value());
  CHECK_FALSE(resource_vector(c, "missing", t).has_value());
}

TEST_CASE("cosine") {
  std::vector<double> x{1.0, 0.0}, y{0.0, 1.0}, xy{1.0, 1.0}, zero{0.0, 0.0};
  CHECK(cosine(x, y) == 0.0);
  CHECK(cosine(x, xy) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(cosine(x, zero) == 0.0);
  std::vector<double> three{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(cosine(x, three), Error);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = rng.uniform(-2, 2);
    for (auto& v : b) v = rng.uniform(-2, 2);
    CHECK(std::abs(cosine(a, b) - cosine(b, a)) < 1e-12);
    CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(a, b) <= 1.0);
    CHECK(cosine(a, b) >= -1.0);
  }
}

TEST_CASE("top-k basics") {
  std::vector<ProfileVector> rs{{"a", {1.0, 0.0}, 1}, {"b", {0.0, 1.0}, 1}, {"c", {1.0, 1.0}, 1}};
  ProfileVector u{"u", {1.0, 0.0}, 1};
  auto list = top_k(u, rs, 15);
  REQUIRE(list.items.size() == 3);
  CHECK(list.user == "u");
  CHECK(list.items[0].resource == "a");
  CHECK(list.items[0].similarity == doctest::Approx(1.0));
  CHECK(rank_of("a", list) == 1u);
  CHECK(rank_of("b", list) == 3u);
  CHECK_FALSE(rank_of("zzz", list).has_value());
  CHECK_THROWS_AS(top_k(u, rs, 0), Error);
}

TEST_CASE("ties break by resource id") {
  std::vector<ProfileVector> rs{{"z", {1.0, 0.0}, 1}, {"m", {2.0, 0.0}, 1}, {"a", {3.0, 0.0}, 1}};
  ProfileVector u{"u", {1.0, 0.0}, 1};
  auto list = top_k(u, rs, 2);
  REQUIRE(list.items.size() == 2);
  CHECK(list.items[0].resource == "a");
  CHECK(list.items[1].resource == "m");
}

TEST_CASE("top-k matches a brute-force sort") {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 1 + rng.index(100);
    auto rs = random_profiles(rng, n, 6);
    auto u = random_profiles(rng, 1, 6)[0];
    std::size_t k = 1 + rng.index(20);
    auto list = top_k(u, rs, k);
    CHECK(list.items == brute_top_k(u, rs, k));
    ResourceIndex index(rs);
    CHECK(index.top_k(u, k).items == list.items);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.items.size(); ++i) {
      CHECK(seen.insert(list.items[i].resource).second);
      CHECK(rank_of(list.items[i].resource, list) == i + 1);
      CHECK(i + 1 <= k);
    }
  }
}

TEST_CASE("reordering resources leaves lists unchanged") {
  Rng rng(2);
  auto rs = random_profiles(rng, 60, 5);
  auto u = random_profiles(rng, 1, 5)[0];
  auto before = top_k(u, rs, 15).items;
  for (int i = 0; i < 5; ++i) {
    rng.shuffle(rs);
    CHECK(top_k(u, rs, 15).items == before);
  }
}

TEST_CASE("scaling the embeddings keeps every ranking") {
  auto c = tagguard::testing::random_corpus(5, 15, 40, 30, 6);
  auto v = build_vocabulary(c);
  auto base = deterministic_embeddings(v, 10, 1);
  EmbeddingTable scaled(10);
  for (const auto& t : base.tags()) {
    auto x = *base.find(t);
    std::vector<double> y(x.begin(), x.end());
    for (auto& e : y) e *= 3.5;
    scaled.add(t, y);
  }
  ResourceIndex a(resource_profiles(c, base)), b(resource_profiles(c, scaled));
  for (const auto& u : user_profiles(c, base)) {
    auto us = *user_vector(c, u.owner, scaled);
    auto la = a.top_k(u, 15), lb = b.top_k(us, 15);
    REQUIRE(la.items.size() == lb.items.size());
    for (std::size_t i = 0; i < la.items.size(); ++i) {
      CHECK(la.items[i].resource == lb.items[i].resource);
    }
  }
}

}  // TEST_SUITE
