#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagguard/corpus.hpp"

namespace tagguard {

enum class AttackKind : std::uint8_t { Overload, Piggyback };

std::string_view to_string(AttackKind kind);
/// Accepts "overload" or "piggyback"; throws ConfigError otherwise.
AttackKind parse_attack_kind(std::string_view name);

/// Parameters of one synthetic attack generation.
struct AttackSpec {
  AttackKind kind = AttackKind::Overload;
  /// Bogus folksonomy count as a fraction of the legitimate count, in (0, 1].
  double injection_ratio = 0.01;
  std::size_t popular_tag_pool = 75;
  std::size_t popular_resource_pool = 100;
  std::size_t max_size = kMaxFolksonomySize;
  /// Must not already exist in the host corpus.
  std::string bogus_resource = "bogus:resource";
  /// Piggyback only; defaults to the most-annotated resource.
  std::optional<std::string> target_resource;
  /// Fake users are named prefix + counter, skipping host collisions.
  std::string user_prefix = "fake:";
  std::uint64_t seed = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Generated attack profiles: one fake user per folksonomy, all annotating
/// the bogus resource.
struct BogusBatch {
  AttackKind kind = AttackKind::Overload;
  std::string bogus_resource;
  std::optional<std::string> target_resource;
  /// Tags the generator was allowed to draw from, in priority order.
  std::vector<std::string> tag_pool;
  std::vector<Folksonomy> folksonomies;

  std::size_t size() const { return folksonomies.size(); }
  Corpus to_corpus() const { return Corpus(folksonomies); }
};

/// round(ratio * legitimate_count), at least 1.
std::size_t attack_batch_size(std::size_t legitimate_count, double ratio);

/// Overload pool: the most frequent legitimate tags that occur on the
/// most-annotated resources, backfilled by global frequency.
std::vector<std::string> overload_tag_pool(const Corpus& corpus,
                                           const AttackSpec& spec);

BogusBatch generate_overload(const Corpus& corpus, const AttackSpec& spec);
BogusBatch generate_piggyback(const Corpus& corpus, const AttackSpec& spec);
/// Dispatches on spec.kind.
BogusBatch generate_attack(const Corpus& corpus, const AttackSpec& spec);

/// S = L ∪ B. Throws if any fake user already exists in the corpus.
Corpus inject(const Corpus& corpus, const BogusBatch& batch);

/// Share of tag assignments per vocabulary entry; element i belongs to
/// vocabulary index i + 1. Tags outside the vocabulary are ignored.
std::vector<double> tag_class_distribution(std::span<const Folksonomy> folksonomies,
                                           const Vocabulary& vocabulary);

/// Collapses a per-vocabulary-index distribution into log2 rank bins:
/// bin b holds ranks [2^b, 2^(b+1)).
std::vector<double> bin_by_rank(std::span<const double> distribution);

/// Normalized histogram of folksonomy sizes; element s - 1 holds size s for
/// s in 1..max_size, larger sizes clamped into the last bucket.
std::vector<double> size_histogram(std::span<const Folksonomy> folksonomies,
                                   std::size_t max_size = kMaxFolksonomySize);

/// D_KL(p || q) = Σ p ln(p / q) in nats, after adding 1e-10 to every bin
/// and renormalizing both inputs.
double kl_divergence(std::span<const double> p, std::span<const double> q);

}  // namespace tagguard
