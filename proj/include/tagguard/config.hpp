#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "tagguard/attacks.hpp"
#include "tagguard/classifier.hpp"
#include "tagguard/evaluation.hpp"

namespace tagguard {

/// Settings read from an INI file with sections [data], [attack], [train]
/// and [run]. Relative paths resolve against the config file's directory.
struct CliConfig {
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> embeddings;
  /// Pre-generated bogus batch used by `train` and `recommend`.
  std::optional<std::filesystem::path> bogus;
  /// Trained model used by `recommend` to filter the corpus.
  std::optional<std::filesystem::path> model;

  AttackSpec attack;
  ClassifierKind classifier = ClassifierKind::NaiveBayes;
  TrainConfig train;
  /// run.attack and run.train mirror `attack` and `train`.
  RunConfig run;
};

/// Throws ConfigError naming the offending key for unknown keys, bad
/// values, or invalid combinations.
CliConfig parse_config(std::istream& in,
                       const std::filesystem::path& base_dir = std::filesystem::path());
CliConfig load_config(const std::filesystem::path& path);

}  // namespace tagguard
