#pragma once

#include <cstddef>
#include <cstdint>

#include "tagguard/corpus.hpp"

namespace tagguard {

/// Parameters of the synthetic topical corpus used for desk-scale runs.
///
/// Tags follow a Zipf law over their global rank. Every tag and resource
/// belongs to one topic; users favour one primary and one secondary topic,
/// and each resource carries a few core tags its annotators tend to reuse.
struct DeskCorpusSpec {
  std::size_t users = 300;
  std::size_t resources = 1200;
  std::size_t tags = 3000;
  std::size_t topics = 10;
  /// Tags of rank below this are shared by all topics.
  std::size_t general_tags = 10;
  double folksonomies_per_user = 10.0;
  /// Mean folksonomy size is 1 / size_stop.
  double size_stop = 0.27;
  double tag_exponent = 1.0;
  double resource_exponent = 0.9;
  std::uint64_t seed = 7;

  void validate() const;
};

Corpus generate_desk_corpus(const DeskCorpusSpec& spec = {});

}  // namespace tagguard
