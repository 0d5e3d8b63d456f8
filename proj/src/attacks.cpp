#include "tagguard/attacks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "tagguard/error.hpp"
#include "tagguard/random.hpp"

namespace tagguard {

namespace {

Corpus legitimate_part(const Corpus& corpus) {
  return corpus.with_label(Label::Legitimate);
}

std::size_t draw_size(Rng& rng, const SizeDistribution& sizes,
                      std::size_t upper) {
  std::size_t s = rng.weighted_index(sizes.probabilities());
  return std::clamp<std::size_t>(s, 1, upper);
}

/// Fresh user names in order, skipping any the host already uses.
std::vector<std::string> fresh_users(const Corpus& host, const std::string& prefix,
                                     std::size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t n = 0; out.size() < count; ++n) {
    std::string name = prefix + std::to_string(n);
    if (!host.has_user(name)) out.push_back(std::move(name));
  }
  return out;
}

void check_bogus_resource(const Corpus& corpus, const AttackSpec& spec) {
  if (corpus.has_resource(spec.bogus_resource)) {
    throw Error("bogus resource '" + spec.bogus_resource +
                "' already exists in the corpus");
  }
}

std::set<std::string, std::less<>> tags_on_resources(
    const Corpus& corpus, const std::vector<std::string>& resources) {
  std::set<std::string, std::less<>> tags;
  for (const auto& r : resources) {
    for (auto i : corpus.resource_index().find(r)->second) {
      tags.insert(corpus[i].tags.begin(), corpus[i].tags.end());
    }
  }
  return tags;
}

std::vector<std::string> top_resources_for(const Corpus& legit,
                                           const AttackSpec& spec) {
  if (legit.resource_count() < spec.popular_resource_pool) {
    throw Error("corpus has " + std::to_string(legit.resource_count()) +
                " resources, fewer than the popular resource pool of " +
                std::to_string(spec.popular_resource_pool));
  }
  return top_annotated_resources(legit, spec.popular_resource_pool);
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  return kind == AttackKind::Overload ? "overload" : "piggyback";
}

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "overload") return AttackKind::Overload;
  if (name == "piggyback") return AttackKind::Piggyback;
  throw ConfigError("unknown attack kind '" + std::string(name) + "'");
}

void AttackSpec::validate() const {
  if (!(injection_ratio > 0.0 && injection_ratio <= 1.0)) {
    throw ConfigError("injection ratio must lie in (0, 1]");
  }
  if (max_size < 1) throw ConfigError("max_size must be at least 1");
  if (popular_tag_pool < 1 || popular_resource_pool < 1) {
    throw ConfigError("pool sizes must be at least 1");
  }
  if (bogus_resource.empty()) throw ConfigError("bogus resource must be named");
  if (user_prefix.empty()) throw ConfigError("fake user prefix must be non-empty");
}

std::size_t attack_batch_size(std::size_t legitimate_count, double ratio) {
  auto n = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(legitimate_count)));
  return std::max<std::size_t>(n, 1);
}

std::vector<std::string> overload_tag_pool(const Corpus& corpus,
                                           const AttackSpec& spec) {
  Corpus legit = legitimate_part(corpus);
  if (legit.distinct_tag_count() < spec.popular_tag_pool) {
    throw Error("corpus has " + std::to_string(legit.distinct_tag_count()) +
                " distinct tags, fewer than the popular tag pool of " +
                std::to_string(spec.popular_tag_pool));
  }
  auto ranked = rank_tags(legit.tag_frequencies());
  auto allowed = tags_on_resources(legit, top_resources_for(legit, spec));

  std::vector<std::string> pool;
  pool.reserve(spec.popular_tag_pool);
  for (const auto& t : ranked) {
    if (pool.size() == spec.popular_tag_pool) break;
    if (allowed.count(t)) pool.push_back(t);
  }
  // Backfill by global frequency when the popular resources are too sparse.
  for (const auto& t : ranked) {
    if (pool.size() == spec.popular_tag_pool) break;
    if (!allowed.count(t)) pool.push_back(t);
  }
  return pool;
}

BogusBatch generate_overload(const Corpus& corpus, const AttackSpec& spec) {
  spec.validate();
  if (spec.kind != AttackKind::Overload) {
    throw Error("generate_overload called with a non-overload spec");
  }
  check_bogus_resource(corpus, spec);
  Corpus legit = legitimate_part(corpus);
  auto pool = overload_tag_pool(corpus, spec);
  auto sizes = folksonomy_size_distribution(legit);
  std::size_t count = attack_batch_size(legit.size(), spec.injection_ratio);
  auto users = fresh_users(corpus, spec.user_prefix, count);

  Rng rng(spec.seed);
  const std::size_t upper = std::min(spec.max_size, pool.size());
  BogusBatch batch{AttackKind::Overload, spec.bogus_resource, std::nullopt, pool, {}};
  batch.folksonomies.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t size = draw_size(rng, sizes, upper);
    std::vector<std::string> tags;
    tags.reserve(size);
    for (auto p : rng.sample_without_replacement(pool.size(), size)) {
      tags.push_back(pool[p]);
    }
    batch.folksonomies.push_back(
        Folksonomy{users[i], spec.bogus_resource, std::move(tags), Label::Bogus});
  }
  return batch;
}

BogusBatch generate_piggyback(const Corpus& corpus, const AttackSpec& spec) {
  spec.validate();
  if (spec.kind != AttackKind::Piggyback) {
    throw Error("generate_piggyback called with a non-piggyback spec");
  }
  check_bogus_resource(corpus, spec);
  Corpus legit = legitimate_part(corpus);
  if (legit.empty()) throw Error("piggyback attack needs legitimate folksonomies");
  auto top = top_resources_for(legit, spec);

  std::string target = spec.target_resource.value_or(top.front());
  auto target_it = legit.resource_index().find(target);
  if (target_it == legit.resource_index().end()) {
    throw Error("target resource '" + target + "' does not exist");
  }

  // Target tags ranked by how often they annotate the target.
  FrequencyMap on_target;
  for (auto i : target_it->second) {
    for (const auto& t : legit[i].tags) ++on_target[t];
  }
  std::vector<std::string> target_tags = rank_tags(on_target);
  std::vector<double> target_weights;
  for (const auto& t : target_tags) {
    target_weights.push_back(static_cast<double>(on_target.find(t)->second));
  }

  auto wider = tags_on_resources(legit, top);
  std::vector<std::string> rest;
  for (const auto& t : rank_tags(legit.tag_frequencies())) {
    if (wider.count(t) && !on_target.count(t)) rest.push_back(t);
  }

  std::vector<std::string> pool = target_tags;
  pool.insert(pool.end(), rest.begin(), rest.end());
  if (pool.empty()) throw Error("piggyback tag pool is empty");

  auto sizes = folksonomy_size_distribution(legit);
  std::size_t count = attack_batch_size(legit.size(), spec.injection_ratio);
  auto users = fresh_users(corpus, spec.user_prefix, count);

  Rng rng(spec.seed);
  const std::size_t upper = std::min(spec.max_size, pool.size());
  BogusBatch batch{AttackKind::Piggyback, spec.bogus_resource, target, pool, {}};
  batch.folksonomies.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t size = draw_size(rng, sizes, upper);
    std::vector<std::string> tags;
    tags.reserve(size);
    if (size <= target_tags.size()) {
      // Replicate the target's annotations, favouring its frequent tags.
      std::vector<double> w = target_weights;
      for (std::size_t k = 0; k < size; ++k) {
        std::size_t j = rng.weighted_index(w);
        tags.push_back(target_tags[j]);
        w[j] = 0.0;
      }
    } else {
      std::vector<std::size_t> order(target_tags.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order);
      for (auto j : order) tags.push_back(target_tags[j]);
      for (auto p : rng.sample_without_replacement(rest.size(),
                                                   size - target_tags.size())) {
        tags.push_back(rest[p]);
      }
    }
    batch.folksonomies.push_back(
        Folksonomy{users[i], spec.bogus_resource, std::move(tags), Label::Bogus});
  }
  return batch;
}

BogusBatch generate_attack(const Corpus& corpus, const AttackSpec& spec) {
  return spec.kind == AttackKind::Overload ? generate_overload(corpus, spec)
                                           : generate_piggyback(corpus, spec);
}

Corpus inject(const Corpus& corpus, const BogusBatch& batch) {
  std::vector<Folksonomy> merged = corpus.folksonomies();
  merged.reserve(corpus.size() + batch.size());
  for (const auto& f : batch.folksonomies) {
    if (corpus.has_user(f.user)) {
      throw Error("fake user '" + f.user + "' collides with an existing user");
    }
    merged.push_back(f);
  }
  return Corpus(std::move(merged));
}

std::vector<double> tag_class_distribution(std::span<const Folksonomy> folksonomies,
                                           const Vocabulary& vocabulary) {
  std::vector<double> counts(vocabulary.size(), 0.0);
  double total = 0.0;
  for (const auto& f : folksonomies) {
    for (const auto& t : f.tags) {
      if (auto idx = vocabulary.index(t)) {
        counts[*idx - 1] += 1.0;
        total += 1.0;
      }
    }
  }
  if (total == 0.0) throw Error("tag class distribution needs at least one assignment");
  for (auto& c : counts) c /= total;
  return counts;
}

std::vector<double> bin_by_rank(std::span<const double> distribution) {
  std::vector<double> bins;
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    std::size_t rank = i + 1;
    std::size_t bin = static_cast<std::size_t>(std::bit_width(rank)) - 1;
    if (bins.size() <= bin) bins.resize(bin + 1, 0.0);
    bins[bin] += distribution[i];
  }
  return bins;
}

std::vector<double> size_histogram(std::span<const Folksonomy> folksonomies,
                                   std::size_t max_size) {
  if (max_size == 0) throw Error("size histogram needs at least one bucket");
  if (folksonomies.empty()) throw Error("size histogram of an empty set");
  std::vector<double> hist(max_size, 0.0);
  for (const auto& f : folksonomies) {
    hist[std::clamp<std::size_t>(f.tags.size(), 1, max_size) - 1] += 1.0;
  }
  for (auto& h : hist) h /= static_cast<double>(folksonomies.size());
  return hist;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  constexpr double kEpsilon = 1e-10;
  if (p.size() != q.size()) {
    throw Error("kl_divergence: length mismatch (" + std::to_string(p.size()) +
                " vs " + std::to_string(q.size()) + ")");
  }
  if (p.empty()) throw Error("kl_divergence: empty distributions");
  double sp = std::accumulate(p.begin(), p.end(), 0.0);
  double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
    throw Error("kl_divergence: inputs must sum to 1");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw Error("kl_divergence: negative mass");
  }
  const double np = sp + kEpsilon * static_cast<double>(p.size());
  const double nq = sq + kEpsilon * static_cast<double>(q.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double pi = (p[i] + kEpsilon) / np;
    double qi = (q[i] + kEpsilon) / nq;
    d += pi * std::log(pi / qi);
  }
  return std::max(d, 0.0);
}

}  // namespace tagguard
