#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "tagguard/corpus.hpp"
#include "tagguard/random.hpp"

namespace tagguard::testing {

// Resource-tag matrix of the worked Overload/Piggyback example, legitimate
// rows only.
inline Corpus example_corpus() {
  return Corpus({
      {"alice", "res1", {"food"}, Label::Legitimate},
      {"bob", "res1", {"food", "power"}, Label::Legitimate},
      {"david", "res1", {"dog", "car", "web"}, Label::Legitimate},
      {"bob", "res2", {"car"}, Label::Legitimate},
      {"david", "res2", {"dog", "food"}, Label::Legitimate},
      {"alice", "res3", {"power", "web"}, Label::Legitimate},
      {"clark", "res3", {"dog", "car"}, Label::Legitimate},
  });
}

// Bogus rows of the same example.
inline std::vector<Folksonomy> example_overload_rows() {
  return {{"fakeA", "bogus1", {"dog", "car"}, Label::Bogus},
          {"fakeB", "bogus1", {"food", "car"}, Label::Bogus}};
}

inline std::vector<Folksonomy> example_piggyback_rows() {
  return {{"fakeC", "bogus2", {"dog", "food", "car"}, Label::Bogus},
          {"fakeD", "bogus2", {"food", "car"}, Label::Bogus}};
}

// Small random corpus with distinct (user, resource) pairs.
inline Corpus random_corpus(std::uint64_t seed, std::size_t users, std::size_t resources,
                            std::size_t tags, std::size_t per_user) {
  Rng rng(seed);
  std::vector<Folksonomy> out;
  for (std::size_t u = 0; u < users; ++u) {
    auto picks = rng.sample_without_replacement(resources, std::min(per_user, resources));
    for (auto r : picks) {
      std::size_t size = 1 + rng.index(std::min<std::size_t>(tags, 6));
      std::vector<std::string> ts;
      for (auto t : rng.sample_without_replacement(tags, size)) {
        ts.push_back("t" + std::to_string(t));
      }
      out.push_back({"u" + std::to_string(u), "r" + std::to_string(r), ts, Label::Legitimate});
    }
  }
  return Corpus(std::move(out));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (stem + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace tagguard::testing
