#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tagguard {

/// Upper bound on folksonomy size used by the size distribution and by
/// generated attack profiles.
inline constexpr std::size_t kMaxFolksonomySize = 50;

enum class Label : std::uint8_t { Legitimate, Bogus, Unlabeled };

std::string_view to_string(Label label);

/// One user's tag set on one resource.
struct Folksonomy {
  std::string user;
  std::string resource;
  std::vector<std::string> tags;  // ordered, no duplicates
  Label label = Label::Legitimate;

  bool operator==(const Folksonomy&) const = default;
};

/// tag -> number of folksonomies containing it. Ordered for deterministic
/// iteration.
using FrequencyMap = std::map<std::string, std::size_t, std::less<>>;

/// Immutable annotation dataset with derived indices.
///
/// Construction collapses duplicate tags inside each folksonomy and rejects
/// empty tag lists, repeated (user, resource) pairs, and identifiers that
/// cannot be written back to the dataset format.
class Corpus {
 public:
  using Index = std::map<std::string, std::vector<std::size_t>, std::less<>>;

  Corpus() = default;
  explicit Corpus(std::vector<Folksonomy> folksonomies);

  const std::vector<Folksonomy>& folksonomies() const { return folksonomies_; }
  std::size_t size() const { return folksonomies_.size(); }
  bool empty() const { return folksonomies_.empty(); }
  const Folksonomy& operator[](std::size_t i) const { return folksonomies_[i]; }
  auto begin() const { return folksonomies_.begin(); }
  auto end() const { return folksonomies_.end(); }

  /// user -> positions of that user's folksonomies
  const Index& user_index() const { return users_; }
  /// resource -> positions of folksonomies annotating it
  const Index& resource_index() const { return resources_; }
  const FrequencyMap& tag_frequencies() const { return tag_frequency_; }

  std::size_t user_count() const { return users_.size(); }
  std::size_t resource_count() const { return resources_.size(); }
  std::size_t distinct_tag_count() const { return tag_frequency_.size(); }
  /// Total number of (user, tag, resource) assignments.
  std::size_t assignment_count() const;

  bool has_user(std::string_view user) const;
  bool has_resource(std::string_view resource) const;

  /// Folksonomies carrying the given label, order preserved.
  Corpus with_label(Label label) const;

  /// Content equality (ordered folksonomy lists).
  bool operator==(const Corpus& other) const {
    return folksonomies_ == other.folksonomies_;
  }

 private:
  std::vector<Folksonomy> folksonomies_;
  Index users_;
  Index resources_;
  FrequencyMap tag_frequency_;
};

/// Parses `user<TAB>resource<TAB>tag1,tag2,...` lines. `#` lines and blank
/// lines are skipped; repeated (user, resource) lines merge their tags.
/// Every folksonomy is labelled `label`.
Corpus parse_dataset(std::istream& in, Label label = Label::Legitimate);
Corpus parse_dataset_file(const std::filesystem::path& path,
                          Label label = Label::Legitimate);

/// Inverse of parse_dataset (labels are not written).
void write_dataset(std::ostream& out, const Corpus& corpus);
std::string format_dataset(const Corpus& corpus);

/// Tag -> integer index by descending corpus frequency, ties broken
/// lexicographically. Index 0 is padding; tags occupy 1..size().
class Vocabulary {
 public:
  Vocabulary() = default;
  /// `tags_by_rank[i]` receives index i + 1.
  explicit Vocabulary(std::vector<std::string> tags_by_rank);

  std::size_t size() const { return tags_.size(); }
  std::optional<std::size_t> index(std::string_view tag) const;
  /// Tag for an index in 1..size().
  const std::string& tag(std::size_t index) const;
  const std::vector<std::string>& tags() const { return tags_; }

  /// FNV-1a over the rank-ordered tag list; used to reject models trained
  /// against a different vocabulary.
  std::uint64_t fingerprint() const { return fingerprint_; }

  bool operator==(const Vocabulary& other) const { return tags_ == other.tags_; }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>>
      lookup_;
  std::uint64_t fingerprint_ = 0;
};

/// Frequency-ranked tags: count descending, then tag ascending.
std::vector<std::string> rank_tags(const FrequencyMap& frequencies);

Vocabulary build_vocabulary(const Corpus& corpus);

FrequencyMap tag_frequencies(const Corpus& corpus);

std::vector<std::string> top_popular_tags(const Corpus& corpus, std::size_t n);

/// Resources ordered by total tag-assignment count (descending), ties by id.
std::vector<std::string> top_annotated_resources(const Corpus& corpus,
                                                 std::size_t n);

/// Folksonomies of n users drawn uniformly without replacement.
Corpus sample_users(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Empirical distribution of legitimate folksonomy sizes; sizes above
/// kMaxFolksonomySize fall into the last bucket.
class SizeDistribution {
 public:
  /// `probabilities[s]` is P(size = s); entry 0 is unused and zero.
  explicit SizeDistribution(std::vector<double> probabilities);

  double probability(std::size_t size) const;
  std::size_t max_size() const { return probabilities_.size() - 1; }
  const std::vector<double>& probabilities() const { return probabilities_; }

 private:
  std::vector<double> probabilities_;
};

SizeDistribution folksonomy_size_distribution(const Corpus& corpus);

/// Vocabulary indices of the folksonomy's tags in order, out-of-vocabulary
/// tags dropped, truncated to `length` and right-padded with 0.
std::vector<std::int32_t> encode_sequence(const Folksonomy& folksonomy,
                                          const Vocabulary& vocabulary,
                                          std::size_t length);

}  // namespace tagguard
