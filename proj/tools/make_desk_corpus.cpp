// Writes the synthetic desk-scale corpus in dataset format.
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tagguard/commands.hpp"
#include "tagguard/synthetic.hpp"

int main(int argc, char** argv) {
  tagguard::DeskCorpusSpec spec;
  std::string out;
  CLI::App app{"Generate the synthetic desk corpus"};
  app.add_option("--out", out, "Output file (stdout when omitted)");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--users", spec.users, "Number of users");
  app.add_option("--resources", spec.resources, "Number of resources");
  app.add_option("--tags", spec.tags, "Number of distinct tags");
  app.add_option("--topics", spec.topics, "Number of topics");
  CLI11_PARSE(app, argc, argv);
  try {
    std::string text = tagguard::format_dataset(tagguard::generate_desk_corpus(spec));
    if (out.empty()) {
      std::cout << text;
    } else {
      tagguard::write_file_atomic(out, text);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
