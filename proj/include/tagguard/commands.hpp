#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tagguard/config.hpp"
#include "tagguard/evaluation.hpp"

namespace tagguard {

/// Reads TAGGUARD_LOG_LEVEL (trace, debug, info, warn, error, off).
void configure_logging();

/// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// {folksonomies, users, resources, unique_tags, assignments, size_histogram}
std::string cmd_stats(const std::filesystem::path& dataset);

/// bogus.tsv, bogus.json and manifest.json in `out_dir`.
void cmd_attack_gen(const CliConfig& config, const std::filesystem::path& out_dir);

/// Trains config.classifier on the dataset plus a bogus batch (read from
/// data.bogus or generated at run.training_ratio). Writes model.json,
/// train.json and manifest.json.
void cmd_train(const CliConfig& config, const std::filesystem::path& out_dir);

/// Top-k lists for the corpus (plus data.bogus, filtered by data.model when
/// set). Every legitimate user when `users` is empty. Writes
/// recommendations.json and manifest.json.
void cmd_recommend(const CliConfig& config, const std::filesystem::path& out_dir,
                   const std::vector<std::string>& users);

/// Runs the evaluation protocol; writes report.json, the CSV tables and
/// manifest.json.
void cmd_evaluate(const CliConfig& config, const std::filesystem::path& out_dir);

/// Regenerates the CSV tables from a report.json.
void cmd_report(const std::filesystem::path& report, const std::filesystem::path& out_dir);

std::string report_to_json(const EvaluationReport& report);

/// CSV file name -> content: classification_f.csv, population.csv,
/// rank.csv, deltas.csv.
std::vector<std::pair<std::string, std::string>> report_tables(const std::string& report_json);

}  // namespace tagguard
