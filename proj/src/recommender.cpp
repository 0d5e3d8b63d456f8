#include "tagguard/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "tagguard/error.hpp"
#include "tagguard/random.hpp"

namespace tagguard {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double similarity(double d, double na, double nb) {
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return std::clamp(d / (na * nb), -1.0, 1.0);
}

/// Best k of `similarities`, ordered by similarity desc then owner id asc.
TopKList select(const std::string& user, std::span<const ProfileVector> resources,
                const std::vector<double>& similarities, std::size_t k) {
  if (k == 0) throw Error("top_k: k must be at least 1");
  std::vector<std::size_t> order(resources.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t n = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (similarities[a] != similarities[b]) {
                        return similarities[a] > similarities[b];
                      }
                      return resources[a].owner < resources[b].owner;
                    });
  TopKList out{user, {}};
  out.items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.items.push_back({resources[order[i]].owner, similarities[order[i]]});
  }
  return out;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw Error("embedding dimension must be positive");
}

void EmbeddingTable::add(std::string tag, std::span<const double> vector) {
  if (vector.size() != dimension_) {
    throw Error("embedding for '" + tag + "' has " + std::to_string(vector.size()) +
                " components, expected " + std::to_string(dimension_));
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw Error("embedding for '" + tag + "' is not finite");
  }
  if (lookup_.contains(tag)) throw Error("duplicate embedding for '" + tag + "'");
  lookup_.emplace(tag, tags_.size());
  tags_.push_back(std::move(tag));
  values_.insert(values_.end(), vector.begin(), vector.end());
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view tag) const {
  auto it = lookup_.find(tag);
  if (it == lookup_.end()) return std::nullopt;
  return std::span<const double>(values_.data() + it->second * dimension_, dimension_);
}

EmbeddingTable load_embeddings(std::istream& in) {
  std::optional<EmbeddingTable> table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string tag;
    if (!(fields >> tag)) continue;
    values.clear();
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) throw ParseError(line_no, "non-numeric component '" + token + "'");
      values.push_back(v);
    }
    if (values.empty()) throw ParseError(line_no, "tag '" + tag + "' has no components");
    if (!table) table.emplace(values.size());
    if (values.size() != table->dimension()) {
      throw ParseError(line_no, "expected " + std::to_string(table->dimension()) +
                                    " components, found " + std::to_string(values.size()));
    }
    try {
      table->add(tag, values);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!table) throw Error("embedding file is empty");
  return std::move(*table);
}

EmbeddingTable load_embeddings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file " + path.string());
  return load_embeddings(in);
}

std::vector<double> deterministic_vector(std::string_view tag, std::size_t dimension,
                                         std::uint64_t seed) {
  Rng rng(mix64(fnv1a(tag) ^ mix64(seed)));
  std::vector<double> v(dimension);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

EmbeddingTable deterministic_embeddings(const Vocabulary& vocabulary, std::size_t dimension,
                                        std::uint64_t seed) {
  EmbeddingTable table(dimension);
  for (const auto& tag : vocabulary.tags()) {
    table.add(tag, deterministic_vector(tag, dimension, seed));
  }
  return table;
}

std::optional<std::vector<double>> folksonomy_vector(const Folksonomy& folksonomy,
                                                     const EmbeddingTable& table) {
  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t found = 0;
  for (const auto& t : folksonomy.tags) {
    if (auto v = table.find(t)) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
      ++found;
    }
  }
  if (found == 0) return std::nullopt;
  for (auto& x : sum) x /= static_cast<double>(found);
  return sum;
}

std::optional<ProfileVector> profile_vector(std::string owner,
                                            std::span<const Folksonomy* const> folksonomies,
                                            const EmbeddingTable& table) {
  ProfileVector out{std::move(owner), std::vector<double>(table.dimension(), 0.0), 0};
  for (const auto* f : folksonomies) {
    if (auto v = folksonomy_vector(*f, table)) {
      for (std::size_t i = 0; i < v->size(); ++i) out.vector[i] += (*v)[i];
      ++out.support;
    }
  }
  if (out.support == 0) return std::nullopt;
  for (auto& x : out.vector) x /= static_cast<double>(out.support);
  return out;
}

namespace {

std::optional<ProfileVector> indexed_profile(const Corpus& corpus, const Corpus::Index& index,
                                             std::string_view owner,
                                             const EmbeddingTable& table) {
  auto it = index.find(owner);
  if (it == index.end()) return std::nullopt;
  std::vector<const Folksonomy*> members;
  members.reserve(it->second.size());
  for (auto pos : it->second) members.push_back(&corpus[pos]);
  return profile_vector(std::string(owner), members, table);
}

std::vector<ProfileVector> all_profiles(const Corpus& corpus, const Corpus::Index& index,
                                        const EmbeddingTable& table) {
  std::vector<ProfileVector> out;
  for (const auto& [owner, positions] : index) {
    if (auto p = indexed_profile(corpus, index, owner, table)) out.push_back(std::move(*p));
  }
  return out;
}

}  // namespace

std::optional<ProfileVector> user_vector(const Corpus& corpus, std::string_view user,
                                         const EmbeddingTable& table) {
  return indexed_profile(corpus, corpus.user_index(), user, table);
}

std::optional<ProfileVector> resource_vector(const Corpus& corpus, std::string_view resource,
                                             const EmbeddingTable& table) {
  return indexed_profile(corpus, corpus.resource_index(), resource, table);
}

std::vector<ProfileVector> user_profiles(const Corpus& corpus, const EmbeddingTable& table) {
  return all_profiles(corpus, corpus.user_index(), table);
}

std::vector<ProfileVector> resource_profiles(const Corpus& corpus,
                                             const EmbeddingTable& table) {
  return all_profiles(corpus, corpus.resource_index(), table);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  return similarity(dot(a, b), norm(a), norm(b));
}

TopKList top_k(const ProfileVector& user, std::span<const ProfileVector> resources,
               std::size_t k) {
  std::vector<double> sims;
  sims.reserve(resources.size());
  for (const auto& r : resources) sims.push_back(cosine(user.vector, r.vector));
  return select(user.owner, resources, sims, k);
}

ResourceIndex::ResourceIndex(std::vector<ProfileVector> resources)
    : resources_(std::move(resources)) {
  norms_.reserve(resources_.size());
  for (const auto& r : resources_) norms_.push_back(norm(r.vector));
}

TopKList ResourceIndex::top_k(const ProfileVector& user, std::size_t k) const {
  const double nu = norm(user.vector);
  std::vector<double> sims;
  sims.reserve(resources_.size());
  for (std::size_t i = 0; i < resources_.size(); ++i) {
    const auto& r = resources_[i];
    if (r.vector.size() != user.vector.size()) throw Error("top_k: dimension mismatch");
    sims.push_back(similarity(dot(user.vector, r.vector), nu, norms_[i]));
  }
  return select(user.owner, resources_, sims, k);
}

std::optional<std::size_t> rank_of(std::string_view resource, const TopKList& list) {
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    if (list.items[i].resource == resource) return i + 1;
  }
  return std::nullopt;
}

}  // namespace tagguard
