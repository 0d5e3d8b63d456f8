#include "tagguard/commands.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "tagguard/error.hpp"
#include "tagguard/model_io.hpp"
#include "tagguard/random.hpp"
#include "tagguard/recommender.hpp"

namespace tagguard {

using nlohmann::json;
namespace fs = std::filesystem;

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("TAGGUARD_LOG_LEVEL")) {
    auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to off; only accept "off" when spelled out.
    if (parsed != spdlog::level::off || std::string(level) == "off") spdlog::set_level(parsed);
  }
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, 16);
  std::string s(buf, end);
  return std::string(16 - s.size(), '0') + s;
}

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string path_string(const std::optional<fs::path>& p) { return p ? p->string() : ""; }

json attack_json(const AttackSpec& a) {
  return {{"kind", std::string(to_string(a.kind))},
          {"ratio", a.injection_ratio},
          {"tag_pool", a.popular_tag_pool},
          {"resource_pool", a.popular_resource_pool},
          {"max_size", a.max_size},
          {"bogus_resource", a.bogus_resource},
          {"target_resource", a.target_resource ? json(*a.target_resource) : json(nullptr)},
          {"user_prefix", a.user_prefix},
          {"seed", a.seed}};
}

json train_json(const TrainConfig& t) {
  return {{"seed", t.seed},
          {"learning_rate", t.learning_rate},
          {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"tolerance", t.tolerance},
          {"validation_split", t.validation_split},
          {"embedding_dim", t.embedding_dim},
          {"hidden_dim", t.hidden_dim},
          {"dense_dim", t.dense_dim},
          {"sequence_length", t.sequence_length},
          {"svm_c", t.svm_c},
          {"svm_epochs", t.svm_epochs},
          {"nb_smoothing", t.nb_smoothing}};
}

json run_json(const RunConfig& r) {
  json attacks = json::array(), classifiers = json::array();
  for (auto a : r.attacks) attacks.push_back(std::string(to_string(a)));
  for (auto c : r.classifiers) classifiers.push_back(std::string(to_string(c)));
  return {{"attacks", attacks},
          {"ratios", r.ratios},
          {"training_ratio", r.training_ratio},
          {"folds", r.folds},
          {"repetitions", r.repetitions},
          {"k", r.k},
          {"classifiers", classifiers},
          {"sample_users", r.sample_users},
          {"embedding_dim", r.embedding_dim},
          {"seed", r.seed},
          {"threads", r.threads},
          {"attack", attack_json(r.attack)},
          {"train", train_json(r.train)}};
}

json config_json(const CliConfig& c) {
  return {{"data",
           {{"dataset", path_string(c.dataset)},
            {"embeddings", path_string(c.embeddings)},
            {"bogus", path_string(c.bogus)},
            {"model", path_string(c.model)}}},
          {"classifier", std::string(to_string(c.classifier))},
          {"attack", attack_json(c.attack)},
          {"train", train_json(c.train)},
          {"run", run_json(c.run)}};
}

/// Writes every artifact atomically, then a manifest hashing them.
void publish(const fs::path& out_dir, const std::string& command, const CliConfig& config,
             const json& seeds, const std::vector<std::pair<std::string, std::string>>& files) {
  fs::create_directories(out_dir);
  json hashes = json::object();
  for (const auto& [name, content] : files) {
    write_file_atomic(out_dir / name, content);
    hashes[name] = "fnv1a64:" + hex64(fnv1a(content));
  }
  json manifest = {{"command", command},
                   {"config", config_json(config)},
                   {"seeds", seeds},
                   {"artifacts", hashes}};
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

Corpus load_dataset(const CliConfig& config) {
  if (!config.dataset) throw ConfigError("config key 'data.dataset' is required");
  return parse_dataset_file(*config.dataset);
}

EmbeddingTable embeddings_for(const CliConfig& config, const Vocabulary& vocabulary) {
  if (config.embeddings) return load_embeddings_file(*config.embeddings);
  return deterministic_embeddings(vocabulary, config.run.embedding_dim,
                                  derive_seed(config.run.seed, "embeddings"));
}

json metrics_json(const ClassificationMetrics& m) {
  auto cls = [](const ClassMetrics& c) {
    return json{{"precision", c.precision}, {"recall", c.recall}, {"f", c.f}, {"support", c.support}};
  };
  return {{"legit", cls(m.legit)}, {"bogus", cls(m.bogus)}, {"overall", m.overall}};
}

}  // namespace

std::string cmd_stats(const fs::path& dataset) {
  Corpus corpus = parse_dataset_file(dataset);
  std::vector<std::size_t> counts(kMaxFolksonomySize, 0);
  for (const auto& f : corpus) ++counts[std::min(f.tags.size(), kMaxFolksonomySize) - 1];
  json sizes = json::array();
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (counts[s]) sizes.push_back({{"size", s + 1}, {"count", counts[s]}});
  }
  json out = {{"folksonomies", corpus.size()},
              {"users", corpus.user_count()},
              {"resources", corpus.resource_count()},
              {"unique_tags", corpus.distinct_tag_count()},
              {"assignments", corpus.assignment_count()},
              {"size_histogram", sizes}};
  return out.dump(2) + "\n";
}

void cmd_attack_gen(const CliConfig& config, const fs::path& out_dir) {
  Corpus corpus = load_dataset(config);
  BogusBatch batch = generate_attack(corpus, config.attack);
  json sidecar = {{"kind", std::string(to_string(batch.kind))},
                  {"ratio", config.attack.injection_ratio},
                  {"seed", config.attack.seed},
                  {"count", batch.size()},
                  {"legitimate_count", corpus.size()},
                  {"tag_pool_size", batch.tag_pool.size()},
                  {"popular_tag_pool", config.attack.popular_tag_pool},
                  {"popular_resource_pool", config.attack.popular_resource_pool},
                  {"max_size", config.attack.max_size},
                  {"bogus_resource", batch.bogus_resource},
                  {"target_resource",
                   batch.target_resource ? json(*batch.target_resource) : json(nullptr)}};
  publish(out_dir, "attack-gen", config, {{"attack", config.attack.seed}},
          {{"bogus.tsv", format_dataset(batch.to_corpus())}, {"bogus.json", sidecar.dump(2) + "\n"}});
}

void cmd_train(const CliConfig& config, const fs::path& out_dir) {
  if (config.classifier == ClassifierKind::None) {
    throw ConfigError("config key 'train.classifier' must be nb, svm or nn for training");
  }
  Corpus corpus = load_dataset(config);
  std::vector<Folksonomy> bogus;
  if (config.bogus) {
    bogus = parse_dataset_file(*config.bogus, Label::Bogus).folksonomies();
  } else {
    AttackSpec spec = config.attack;
    spec.injection_ratio = config.run.training_ratio;
    bogus = generate_attack(corpus, spec).folksonomies;
  }
  auto vocabulary = std::make_shared<const Vocabulary>(build_vocabulary(corpus));
  std::vector<Folksonomy> training = corpus.folksonomies();
  training.insert(training.end(), bogus.begin(), bogus.end());
  auto model = train_classifier(config.classifier, training, vocabulary, config.train);

  std::vector<Label> truth;
  for (const auto& f : training) truth.push_back(f.label);
  auto predicted = model->predict_all(training);
  json summary = {{"classifier", std::string(to_string(config.classifier))},
                  {"legitimate", corpus.size()},
                  {"bogus", bogus.size()},
                  {"vocabulary_size", vocabulary->size()},
                  {"vocabulary_fingerprint", hex64(vocabulary->fingerprint())},
                  {"training_metrics", metrics_json(confusion_metrics(predicted, truth))}};
  publish(out_dir, "train", config, {{"train", config.train.seed}, {"attack", config.attack.seed}},
          {{"model.json", serialize_model(*model, *vocabulary)}, {"train.json", summary.dump(2) + "\n"}});
}

void cmd_recommend(const CliConfig& config, const fs::path& out_dir,
                   const std::vector<std::string>& users) {
  Corpus corpus = load_dataset(config);
  std::vector<std::string> targets = users;
  if (targets.empty()) {
    for (const auto& [u, _] : corpus.user_index()) targets.push_back(u);
  }
  Corpus merged = corpus;
  if (config.bogus) {
    BogusBatch batch;
    batch.folksonomies = parse_dataset_file(*config.bogus, Label::Bogus).folksonomies();
    merged = inject(corpus, batch);
  }
  if (config.model) {
    LoadedModel loaded = load_model_file(*config.model);
    merged = classify_corpus(*loaded.classifier, merged, *loaded.vocabulary).legitimate;
  }
  EmbeddingTable table = embeddings_for(config, build_vocabulary(merged));
  auto lists = recommend_for(merged, table, targets, config.run.k);
  json out = json::object();
  for (const auto& l : lists) {
    json items = json::array();
    for (const auto& r : l.items) items.push_back({{"resource", r.resource}, {"similarity", r.similarity}});
    out[l.user] = items;
  }
  publish(out_dir, "recommend", config, {{"embeddings", derive_seed(config.run.seed, "embeddings")}},
          {{"recommendations.json", out.dump(2) + "\n"}});
}

std::string report_to_json(const EvaluationReport& report) {
  json runs = json::array();
  for (const auto& run : report.runs) {
    json folds = json::array();
    for (const auto& f : run.folds) {
      folds.push_back({{"repetition", f.repetition},
                       {"fold", f.fold},
                       {"counts",
                        {{"legit_as_legit", f.counts.legit_as_legit},
                         {"legit_as_bogus", f.counts.legit_as_bogus},
                         {"bogus_as_legit", f.counts.bogus_as_legit},
                         {"bogus_as_bogus", f.counts.bogus_as_bogus}}}});
    }
    json points = json::array();
    for (const auto& p : run.points) {
      points.push_back({{"ratio", p.ratio},
                        {"impact",
                         {{"affected_population", p.impact.affected_population},
                          {"avg_bogus_rank", optional_json(p.impact.avg_bogus_rank)},
                          {"piggyback_dominance", optional_json(p.impact.piggyback_dominance)},
                          {"kl_size", p.impact.kl_size},
                          {"kl_tag_rank", p.impact.kl_tag_rank}}},
                        {"delta",
                         {{"population_reduction", p.delta.population_reduction},
                          {"rank_increase", optional_json(p.delta.rank_increase)}}}});
    }
    runs.push_back({{"classifier", run.classifier},
                    {"attack", std::string(to_string(run.attack))},
                    {"classification",
                     run.classification ? metrics_json(*run.classification) : json(nullptr)},
                    {"folds", folds},
                    {"points", points}});
  }
  json doc = {{"format", "tagguard-report"},
              {"version", 1},
              {"config", run_json(report.config)},
              {"runs", runs}};
  return doc.dump(2) + "\n";
}

std::vector<std::pair<std::string, std::string>> report_tables(const std::string& report_json) {
  json doc;
  try {
    doc = json::parse(report_json);
    if (doc.at("format").get<std::string>() != "tagguard-report") {
      throw Error("not a tagguard report");
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  auto cell = [](const json& v) { return v.is_null() ? std::string() : number(v.get<double>()); };
  std::ostringstream cls, pop, rank, delta;
  cls << "attack,classifier,overall_f,legit_f,bogus_f,legit_precision,legit_recall,"
         "bogus_precision,bogus_recall\n";
  pop << "attack,classifier,ratio,affected_population,kl_size,kl_tag_rank\n";
  rank << "attack,classifier,ratio,avg_bogus_rank,piggyback_dominance\n";
  delta << "attack,classifier,ratio,population_reduction,rank_increase\n";
  try {
    for (const auto& run : doc.at("runs")) {
      const std::string prefix =
          run.at("attack").get<std::string>() + "," + run.at("classifier").get<std::string>();
      if (const auto& c = run.at("classification"); !c.is_null()) {
        cls << prefix << ',' << cell(c.at("overall")) << ',' << cell(c.at("legit").at("f")) << ','
            << cell(c.at("bogus").at("f")) << ',' << cell(c.at("legit").at("precision")) << ','
            << cell(c.at("legit").at("recall")) << ',' << cell(c.at("bogus").at("precision"))
            << ',' << cell(c.at("bogus").at("recall")) << '\n';
      }
      for (const auto& p : run.at("points")) {
        const std::string key = prefix + "," + cell(p.at("ratio"));
        const auto& im = p.at("impact");
        pop << key << ',' << cell(im.at("affected_population")) << ',' << cell(im.at("kl_size"))
            << ',' << cell(im.at("kl_tag_rank")) << '\n';
        rank << key << ',' << cell(im.at("avg_bogus_rank")) << ','
             << cell(im.at("piggyback_dominance")) << '\n';
        const auto& d = p.at("delta");
        delta << key << ',' << cell(d.at("population_reduction")) << ','
              << cell(d.at("rank_increase")) << '\n';
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  return {{"classification_f.csv", cls.str()},
          {"population.csv", pop.str()},
          {"rank.csv", rank.str()},
          {"deltas.csv", delta.str()}};
}

void cmd_evaluate(const CliConfig& config, const fs::path& out_dir) {
  Corpus base = load_dataset(config);
  std::optional<EmbeddingTable> table;
  if (config.embeddings) table = load_embeddings_file(*config.embeddings);
  EvaluationReport report = run_pipeline(base, config.run, table ? &*table : nullptr);
  std::string text = report_to_json(report);
  auto files = report_tables(text);
  files.insert(files.begin(), {"report.json", text});
  // Every other seed of a repetition derives from its repetition seed.
  json repetitions = json::array();
  for (std::size_t rep = 0; rep < config.run.repetitions; ++rep) {
    repetitions.push_back(derive_seed(config.run.seed, static_cast<std::uint64_t>(rep)));
  }
  publish(out_dir, "evaluate", config,
          {{"master", config.run.seed},
           {"embeddings", derive_seed(config.run.seed, "embeddings")},
           {"repetitions", repetitions}},
          files);
}

void cmd_report(const fs::path& report, const fs::path& out_dir) {
  std::ifstream in(report);
  if (!in) throw Error("cannot open report " + report.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (const auto& [name, content] : report_tables(text)) write_file_atomic(out_dir / name, content);
}

}  // namespace tagguard
