#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tagguard/corpus.hpp"

namespace tagguard {

/// Fixed-dimension tag vectors.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension);

  /// Throws on a repeated tag, wrong length, or non-finite component.
  void add(std::string tag, std::span<const double> vector);

  std::optional<std::span<const double>> find(std::string_view tag) const;
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return tags_.size(); }
  const std::vector<std::string>& tags() const { return tags_; }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::size_t dimension_;
  std::vector<std::string> tags_;
  std::vector<double> values_;  // row-major, one row per tag
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> lookup_;
};

/// Text format: `tag v1 v2 ... vd` per line, whitespace separated.
EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings_file(const std::filesystem::path& path);

/// Components uniform in [-1, 1] from an mt19937_64 seeded with
/// FNV-1a(tag) mixed with `seed`. Independent of every other tag.
std::vector<double> deterministic_vector(std::string_view tag, std::size_t dimension,
                                         std::uint64_t seed);
EmbeddingTable deterministic_embeddings(const Vocabulary& vocabulary, std::size_t dimension,
                                        std::uint64_t seed);

/// Mean of the in-table tag vectors; absent when no tag is in the table.
std::optional<std::vector<double>> folksonomy_vector(const Folksonomy& folksonomy,
                                                     const EmbeddingTable& table);

struct ProfileVector {
  std::string owner;
  std::vector<double> vector;
  std::size_t support = 0;  // folksonomies that contributed a vector
};

/// Mean of the folksonomy vectors that exist; absent when none do.
std::optional<ProfileVector> profile_vector(std::string owner,
                                            std::span<const Folksonomy* const> folksonomies,
                                            const EmbeddingTable& table);
std::optional<ProfileVector> user_vector(const Corpus& corpus, std::string_view user,
                                         const EmbeddingTable& table);
std::optional<ProfileVector> resource_vector(const Corpus& corpus, std::string_view resource,
                                             const EmbeddingTable& table);

/// Profiles of every user (resource) that has one, ordered by id.
std::vector<ProfileVector> user_profiles(const Corpus& corpus, const EmbeddingTable& table);
std::vector<ProfileVector> resource_profiles(const Corpus& corpus,
                                             const EmbeddingTable& table);

/// a·b / (|a| |b|), or 0 when either norm is below 1e-12.
double cosine(std::span<const double> a, std::span<const double> b);

struct Recommendation {
  std::string resource;
  double similarity = 0.0;

  bool operator==(const Recommendation&) const = default;
};

struct TopKList {
  std::string user;
  std::vector<Recommendation> items;  // similarity desc, resource id asc
};

/// The k most similar resources. Resources the user already annotated stay
/// eligible.
TopKList top_k(const ProfileVector& user, std::span<const ProfileVector> resources,
               std::size_t k);

/// Resource profiles with cached norms for repeated top-k queries. Produces
/// the same lists as top_k.
class ResourceIndex {
 public:
  explicit ResourceIndex(std::vector<ProfileVector> resources);

  TopKList top_k(const ProfileVector& user, std::size_t k) const;
  std::size_t size() const { return resources_.size(); }

 private:
  std::vector<ProfileVector> resources_;
  std::vector<double> norms_;
};

/// 1-based position of the resource, absent when not listed.
std::optional<std::size_t> rank_of(std::string_view resource, const TopKList& list);

}  // namespace tagguard
