#include "tagguard/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "tagguard/error.hpp"
#include "tagguard/random.hpp"

namespace tagguard {

namespace {

/// Weighted draws by binary search over a cumulative table.
class Sampler {
 public:
  Sampler() = default;
  Sampler(std::vector<std::size_t> items, const std::vector<double>& weight_of) {
    items_ = std::move(items);
    double total = 0.0;
    for (auto i : items_) {
      total += weight_of[i];
      cumulative_.push_back(total);
    }
  }

  bool empty() const { return items_.empty(); }

  std::size_t draw(Rng& rng) const {
    double x = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    auto pos = static_cast<std::size_t>(it - cumulative_.begin());
    return items_[std::min(pos, items_.size() - 1)];
  }

 private:
  std::vector<std::size_t> items_;
  std::vector<double> cumulative_;
};

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

std::vector<double> zipf(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), -exponent);
  return w;
}

}  // namespace

void DeskCorpusSpec::validate() const {
  if (users == 0 || resources == 0 || tags == 0 || topics == 0) {
    throw ConfigError("desk corpus sizes must be positive");
  }
  if (general_tags >= tags) throw ConfigError("general_tags must be below the tag count");
  if (tags - general_tags < topics) throw ConfigError("every topic needs at least one tag");
  if (resources < topics) throw ConfigError("every topic needs at least one resource");
  if (!(folksonomies_per_user >= 1.0)) throw ConfigError("folksonomies_per_user must be >= 1");
  if (!(size_stop > 0.0 && size_stop <= 1.0)) throw ConfigError("size_stop must lie in (0, 1]");
}

Corpus generate_desk_corpus(const DeskCorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  const auto tag_weight = zipf(spec.tags, spec.tag_exponent);
  std::vector<std::string> tag_names;
  for (std::size_t t = 0; t < spec.tags; ++t) tag_names.push_back(numbered("tag", t, 4));

  // Topic t holds every tag whose rank is congruent to t, plus the general tags.
  std::vector<std::vector<std::size_t>> topic_tags(spec.topics);
  std::vector<std::size_t> all_tags;
  for (std::size_t t = 0; t < spec.tags; ++t) {
    all_tags.push_back(t);
    if (t < spec.general_tags) {
      for (auto& members : topic_tags) members.push_back(t);
    } else {
      topic_tags[(t - spec.general_tags) % spec.topics].push_back(t);
    }
  }
  std::vector<Sampler> topic_sampler, core_sampler;
  for (auto& members : topic_tags) topic_sampler.emplace_back(members, tag_weight);
  // Core tags describe the resource itself: topic-specific and drawn with a
  // flatter law than everyday tagging.
  std::vector<double> core_weight(spec.tags);
  for (std::size_t t = 0; t < spec.tags; ++t) core_weight[t] = std::sqrt(tag_weight[t]);
  for (auto& members : topic_tags) {
    std::vector<std::size_t> specific;
    for (auto t : members) {
      if (t >= spec.general_tags) specific.push_back(t);
    }
    core_sampler.emplace_back(std::move(specific), core_weight);
  }
  Sampler global_sampler(all_tags, tag_weight);

  // Popularity ranks are shuffled against resource ids.
  std::vector<std::size_t> popularity_rank(spec.resources);
  for (std::size_t r = 0; r < spec.resources; ++r) popularity_rank[r] = r;
  rng.shuffle(popularity_rank);
  const auto rank_weight = zipf(spec.resources, spec.resource_exponent);
  std::vector<double> resource_weight(spec.resources);
  std::vector<std::vector<std::size_t>> topic_resources(spec.topics);
  std::vector<std::vector<std::size_t>> core_tags(spec.resources);
  std::vector<std::size_t> all_resources;
  for (std::size_t r = 0; r < spec.resources; ++r) {
    resource_weight[r] = rank_weight[popularity_rank[r]];
    const std::size_t topic = r % spec.topics;
    topic_resources[topic].push_back(r);
    all_resources.push_back(r);
    const std::size_t want = 2 + rng.index(5);
    std::set<std::size_t> core;
    for (std::size_t attempt = 0; core.size() < want && attempt < 50; ++attempt) {
      core.insert(core_sampler[topic].draw(rng));
    }
    core_tags[r].assign(core.begin(), core.end());
  }
  std::vector<Sampler> resource_sampler;
  for (auto& members : topic_resources) resource_sampler.emplace_back(members, resource_weight);
  Sampler global_resources(all_resources, resource_weight);

  std::vector<Folksonomy> out;
  for (std::size_t u = 0; u < spec.users; ++u) {
    const std::string user = numbered("user", u, 4);
    const std::size_t primary = rng.index(spec.topics);
    const std::size_t secondary = rng.index(spec.topics);
    const double mean_extra = spec.folksonomies_per_user - 1.0;
    const auto count = std::min<std::size_t>(
        spec.resources,
        1 + static_cast<std::size_t>(std::floor(-std::log(1.0 - rng.uniform()) * mean_extra)));

    std::set<std::size_t> annotated;
    for (std::size_t attempt = 0; annotated.size() < count && attempt < 20 * count; ++attempt) {
      const double pick = rng.uniform();
      std::size_t r = pick < 0.75   ? resource_sampler[primary].draw(rng)
                      : pick < 0.9 ? resource_sampler[secondary].draw(rng)
                                   : global_resources.draw(rng);
      if (!annotated.insert(r).second) continue;

      std::size_t size = 1;
      while (size < 60 && rng.uniform() >= spec.size_stop) ++size;

      const std::size_t topic = r % spec.topics;
      std::vector<std::string> tags;
      std::set<std::size_t> used;
      for (std::size_t tries = 0; used.size() < size && tries < 10 * size; ++tries) {
        const double source = rng.uniform();
        std::size_t t = source < 0.5   ? core_tags[r][rng.index(core_tags[r].size())]
                        : source < 0.85 ? topic_sampler[source < 0.7 ? topic : primary].draw(rng)
                                        : global_sampler.draw(rng);
        if (used.insert(t).second) tags.push_back(tag_names[t]);
      }
      out.push_back({user, numbered("res", r, 5), std::move(tags), Label::Legitimate});
    }
  }
  return Corpus(std::move(out));
}

}  // namespace tagguard
