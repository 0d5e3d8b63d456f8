#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "tagguard/classifier.hpp"
#include "tagguard/corpus.hpp"

namespace tagguard {

/// Current on-disk model format version.
inline constexpr int kModelFormatVersion = 1;

struct LoadedModel {
  std::shared_ptr<const Vocabulary> vocabulary;
  std::unique_ptr<Classifier> classifier;
};

/// JSON container {format, version, kind, vocabulary_fingerprint,
/// vocabulary, model}. Throws for classifiers without a serial form.
std::string serialize_model(const Classifier& classifier, const Vocabulary& vocabulary);
void save_model(const Classifier& classifier, const Vocabulary& vocabulary, std::ostream& out);

/// Throws on unknown kinds or versions, malformed content, or a stored
/// fingerprint that does not match the stored vocabulary.
LoadedModel parse_model(const std::string& text);
LoadedModel load_model(std::istream& in);
LoadedModel load_model_file(const std::filesystem::path& path);

}  // namespace tagguard
