// Command-line front end. Exit codes: 0 success, 1 runtime or data error,
// 2 usage or configuration error.
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tagguard/commands.hpp"
#include "tagguard/config.hpp"
#include "tagguard/error.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

}  // namespace

int main(int argc, char** argv) {
  tagguard::configure_logging();

  CLI::App app{"tagguard: profile-injection attacks and countermeasures for tag recommenders"};
  app.require_subcommand(1);

  std::string dataset;
  std::string stats_out;
  auto* stats = app.add_subcommand("stats", "Print dataset statistics as JSON");
  stats->add_option("dataset", dataset, "Dataset file (user<TAB>resource<TAB>tags)")->required();
  stats->add_option("--out", stats_out, "Write the JSON here instead of stdout");

  std::string config_path, out_dir = ".";
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "INI configuration file")->required();
    cmd->add_option("--out", out_dir, "Output directory");
  };

  auto* attack = app.add_subcommand("attack-gen", "Generate a bogus folksonomy batch");
  add_common(attack);

  std::string classifier;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "Train a countermeasure classifier");
  add_common(train);
  auto* classifier_opt = train->add_option("--classifier", classifier, "nb, svm or nn");
  auto* seed_opt = train->add_option("--seed", seed, "Training seed");

  std::vector<std::string> users;
  auto* recommend = app.add_subcommand("recommend", "Compute top-k recommendation lists");
  add_common(recommend);
  recommend->add_option("--user", users, "Restrict to these users");

  auto* evaluate = app.add_subcommand("evaluate", "Run the full evaluation protocol");
  add_common(evaluate);

  std::string report_in;
  auto* report = app.add_subcommand("report", "Regenerate CSV tables from report.json");
  report->add_option("report", report_in, "report.json")->required();
  report->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (stats->parsed()) {
      std::string json = tagguard::cmd_stats(dataset);
      if (stats_out.empty()) {
        std::cout << json;
      } else {
        tagguard::write_file_atomic(stats_out, json);
      }
      return 0;
    }
    if (report->parsed()) {
      tagguard::cmd_report(report_in, out_dir);
      return 0;
    }

    tagguard::CliConfig config = tagguard::load_config(config_path);
    if (attack->parsed()) {
      tagguard::cmd_attack_gen(config, out_dir);
    } else if (train->parsed()) {
      if (*classifier_opt) config.classifier = tagguard::parse_classifier_kind(classifier);
      if (*seed_opt) config.train.seed = seed;
      tagguard::cmd_train(config, out_dir);
    } else if (recommend->parsed()) {
      tagguard::cmd_recommend(config, out_dir, users);
    } else if (evaluate->parsed()) {
      tagguard::cmd_evaluate(config, out_dir);
    }
    return 0;
  } catch (const tagguard::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
