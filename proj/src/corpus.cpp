#include "tagguard/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "tagguard/error.hpp"
#include "tagguard/random.hpp"

namespace tagguard {

namespace {

bool valid_identifier(std::string_view s) {
  return !s.empty() && s.find_first_of("\t\r\n") == std::string_view::npos;
}

bool valid_tag(std::string_view s) {
  return !s.empty() && s.find_first_of(",\t\r\n") == std::string_view::npos;
}

void append_unique(std::vector<std::string>& tags, std::string tag) {
  if (std::find(tags.begin(), tags.end(), tag) == tags.end()) {
    tags.push_back(std::move(tag));
  }
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Legitimate:
      return "legitimate";
    case Label::Bogus:
      return "bogus";
    case Label::Unlabeled:
      return "unlabeled";
  }
  return "unknown";
}

Corpus::Corpus(std::vector<Folksonomy> folksonomies)
    : folksonomies_(std::move(folksonomies)) {
  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (std::size_t i = 0; i < folksonomies_.size(); ++i) {
    Folksonomy& f = folksonomies_[i];
    if (!valid_identifier(f.user) || !valid_identifier(f.resource)) {
      throw Error("folksonomy " + std::to_string(i) +
                  ": user and resource must be non-empty and tab-free");
    }
    std::vector<std::string> unique;
    unique.reserve(f.tags.size());
    for (auto& t : f.tags) {
      if (!valid_tag(t)) {
        throw Error("folksonomy " + std::to_string(i) + ": invalid tag '" + t +
                    "'");
      }
      append_unique(unique, std::move(t));
    }
    if (unique.empty()) {
      throw Error("folksonomy " + std::to_string(i) + " (" + f.user + ", " +
                  f.resource + ") has no tags");
    }
    f.tags = std::move(unique);
    if (!seen.emplace(f.user, f.resource).second) {
      throw Error("duplicate folksonomy for user '" + f.user +
                  "' and resource '" + f.resource + "'");
    }
    users_[f.user].push_back(i);
    resources_[f.resource].push_back(i);
    for (const auto& t : f.tags) ++tag_frequency_[t];
  }
}

std::size_t Corpus::assignment_count() const {
  std::size_t n = 0;
  for (const auto& f : folksonomies_) n += f.tags.size();
  return n;
}

bool Corpus::has_user(std::string_view user) const {
  return users_.find(user) != users_.end();
}

bool Corpus::has_resource(std::string_view resource) const {
  return resources_.find(resource) != resources_.end();
}

Corpus Corpus::with_label(Label label) const {
  std::vector<Folksonomy> out;
  for (const auto& f : folksonomies_) {
    if (f.label == label) out.push_back(f);
  }
  return Corpus(std::move(out));
}

Corpus parse_dataset(std::istream& in, Label label) {
  std::vector<Folksonomy> folksonomies;
  std::map<std::pair<std::string, std::string>, std::size_t> position;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      throw ParseError(line_no, "expected 3 tab-separated fields, found " +
                                    std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError(line_no, "empty user or resource");
    }
    std::vector<std::string> tags;
    std::stringstream tag_stream(fields[2]);
    std::string tag;
    while (std::getline(tag_stream, tag, ',')) {
      if (!tag.empty()) append_unique(tags, std::move(tag));
    }
    if (tags.empty()) throw ParseError(line_no, "empty tag list");

    auto key = std::make_pair(fields[0], fields[1]);
    auto it = position.find(key);
    if (it != position.end()) {
      for (auto& t : tags) append_unique(folksonomies[it->second].tags, t);
      continue;
    }
    position.emplace(std::move(key), folksonomies.size());
    folksonomies.push_back(Folksonomy{std::move(fields[0]),
                                      std::move(fields[1]), std::move(tags),
                                      label});
  }
  if (folksonomies.empty()) throw ParseError(line_no, "dataset is empty");
  return Corpus(std::move(folksonomies));
}

Corpus parse_dataset_file(const std::filesystem::path& path, Label label) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  try {
    return parse_dataset(in, label);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

void write_dataset(std::ostream& out, const Corpus& corpus) {
  for (const auto& f : corpus) {
    out << f.user << '\t' << f.resource << '\t';
    for (std::size_t i = 0; i < f.tags.size(); ++i) {
      if (i) out << ',';
      out << f.tags[i];
    }
    out << '\n';
  }
}

std::string format_dataset(const Corpus& corpus) {
  std::ostringstream out;
  write_dataset(out, corpus);
  return out.str();
}

Vocabulary::Vocabulary(std::vector<std::string> tags_by_rank)
    : tags_(std::move(tags_by_rank)) {
  std::uint64_t h = fnv1a("tagguard-vocabulary");
  lookup_.reserve(tags_.size());
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (!lookup_.emplace(tags_[i], i + 1).second) {
      throw Error("vocabulary contains duplicate tag '" + tags_[i] + "'");
    }
    h = fnv1a(tags_[i], h);
    h = fnv1a(std::string_view("\0", 1), h);
  }
  fingerprint_ = h;
}

std::optional<std::size_t> Vocabulary::index(std::string_view tag) const {
  auto it = lookup_.find(tag);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::tag(std::size_t index) const {
  if (index == 0 || index > tags_.size()) {
    throw Error("vocabulary index " + std::to_string(index) + " out of range");
  }
  return tags_[index - 1];
}

std::vector<std::string> rank_tags(const FrequencyMap& frequencies) {
  std::vector<const FrequencyMap::value_type*> entries;
  entries.reserve(frequencies.size());
  for (const auto& e : frequencies) entries.push_back(&e);
  // The map is already in lexicographic order, so a stable sort on count
  // keeps the tie-break.
  std::stable_sort(entries.begin(), entries.end(),
                   [](auto* a, auto* b) { return a->second > b->second; });
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (auto* e : entries) out.push_back(e->first);
  return out;
}

Vocabulary build_vocabulary(const Corpus& corpus) {
  if (corpus.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  return Vocabulary(rank_tags(corpus.tag_frequencies()));
}

FrequencyMap tag_frequencies(const Corpus& corpus) {
  return corpus.tag_frequencies();
}

std::vector<std::string> top_popular_tags(const Corpus& corpus, std::size_t n) {
  if (n > corpus.distinct_tag_count()) {
    throw Error("requested " + std::to_string(n) + " popular tags but corpus has " +
                std::to_string(corpus.distinct_tag_count()));
  }
  auto ranked = rank_tags(corpus.tag_frequencies());
  ranked.resize(n);
  return ranked;
}

std::vector<std::string> top_annotated_resources(const Corpus& corpus,
                                                 std::size_t n) {
  if (n > corpus.resource_count()) {
    throw Error("requested " + std::to_string(n) + " resources but corpus has " +
                std::to_string(corpus.resource_count()));
  }
  std::vector<std::pair<std::string, std::size_t>> totals;
  totals.reserve(corpus.resource_count());
  for (const auto& [resource, positions] : corpus.resource_index()) {
    std::size_t sum = 0;
    for (auto i : positions) sum += corpus[i].tags.size();
    totals.emplace_back(resource, sum);
  }
  std::stable_sort(totals.begin(), totals.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(totals[i].first);
  return out;
}

Corpus sample_users(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  if (n > corpus.user_count()) {
    throw Error("cannot sample " + std::to_string(n) + " users from " +
                std::to_string(corpus.user_count()));
  }
  std::vector<const std::string*> users;
  users.reserve(corpus.user_count());
  for (const auto& entry : corpus.user_index()) users.push_back(&entry.first);
  Rng rng(seed);
  auto picks = rng.sample_without_replacement(users.size(), n);

  std::vector<std::size_t> positions;
  for (auto p : picks) {
    const auto& own = corpus.user_index().find(*users[p])->second;
    positions.insert(positions.end(), own.begin(), own.end());
  }
  std::sort(positions.begin(), positions.end());
  std::vector<Folksonomy> out;
  out.reserve(positions.size());
  for (auto i : positions) out.push_back(corpus[i]);
  return Corpus(std::move(out));
}

SizeDistribution::SizeDistribution(std::vector<double> probabilities)
    : probabilities_(std::move(probabilities)) {
  if (probabilities_.size() < 2) throw Error("size distribution has no buckets");
  probabilities_[0] = 0.0;
}

double SizeDistribution::probability(std::size_t size) const {
  return size < probabilities_.size() ? probabilities_[size] : 0.0;
}

SizeDistribution folksonomy_size_distribution(const Corpus& corpus) {
  std::vector<double> counts(kMaxFolksonomySize + 1, 0.0);
  std::size_t total = 0;
  for (const auto& f : corpus) {
    if (f.label != Label::Legitimate) continue;
    counts[std::min(f.tags.size(), kMaxFolksonomySize)] += 1.0;
    ++total;
  }
  if (total == 0) throw Error("size distribution needs legitimate folksonomies");
  for (auto& c : counts) c /= static_cast<double>(total);
  return SizeDistribution(std::move(counts));
}

std::vector<std::int32_t> encode_sequence(const Folksonomy& folksonomy,
                                          const Vocabulary& vocabulary,
                                          std::size_t length) {
  if (length == 0) throw Error("sequence length must be positive");
  std::vector<std::int32_t> out(length, 0);
  std::size_t pos = 0;
  for (const auto& t : folksonomy.tags) {
    if (pos == length) break;
    if (auto idx = vocabulary.index(t)) out[pos++] = static_cast<std::int32_t>(*idx);
  }
  return out;
}

}  // namespace tagguard
