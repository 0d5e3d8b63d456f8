#include "tagguard/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tagguard/error.hpp"

namespace tagguard {

namespace {

namespace pt = boost::property_tree;

const std::set<std::string> kKnownKeys = {
    "data.dataset",         "data.embeddings",       "data.bogus",
    "data.model",           "data.users",            "attack.kind",
    "attack.ratio",         "attack.tag_pool",       "attack.resource_pool",
    "attack.max_size",      "attack.bogus_resource", "attack.target_resource",
    "attack.user_prefix",   "attack.seed",           "train.classifier",
    "train.seed",           "train.learning_rate",   "train.batch_size",
    "train.max_epochs",     "train.patience",        "train.tolerance",
    "train.validation_split", "train.embedding_dim", "train.hidden_dim",
    "train.dense_dim",      "train.sequence_length", "train.svm_c",
    "train.svm_epochs",     "train.nb_smoothing",    "run.attacks",
    "run.ratios",           "run.training_ratio",    "run.folds",
    "run.repetitions",      "run.k",                 "run.classifiers",
    "run.seed",             "run.embedding_dim",     "run.threads",
};

class Reader {
 public:
  Reader(const pt::ptree& tree, std::filesystem::path base) : tree_(tree), base_(std::move(base)) {}

  std::optional<std::string> raw(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return boost::algorithm::trim_copy(*v);
  }

  void string(const std::string& key, std::string& out) const {
    if (auto v = raw(key)) out = *v;
  }

  void path(const std::string& key, std::optional<std::filesystem::path>& out) const {
    if (auto v = raw(key)) {
      if (v->empty()) throw ConfigError("config key '" + key + "' is empty");
      std::filesystem::path p(*v);
      out = p.is_absolute() ? p : base_ / p;
    }
  }

  template <typename T>
  void integer(const std::string& key, T& out) const {
    if (auto v = raw(key)) out = parse_integer<T>(key, *v);
  }

  void real(const std::string& key, double& out) const {
    if (auto v = raw(key)) out = parse_real(key, *v);
  }

  template <typename T, typename Fn>
  void list(const std::string& key, std::vector<T>& out, Fn parse_item) const {
    auto v = raw(key);
    if (!v) return;
    std::vector<std::string> items;
    boost::algorithm::split(items, *v, boost::is_any_of(","));
    out.clear();
    for (auto& item : items) {
      boost::algorithm::trim(item);
      if (item.empty()) throw ConfigError("config key '" + key + "' has an empty list item");
      out.push_back(parse_item(item));
    }
  }

  template <typename T>
  static T parse_integer(const std::string& key, const std::string& text) {
    T value{};
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
      throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" +
                        text + "'");
    }
    return value;
  }

  static double parse_real(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (text.empty() || used != text.size()) {
      throw ConfigError("config key '" + key + "' expects a number, got '" + text + "'");
    }
    return value;
  }

 private:
  const pt::ptree& tree_;
  std::filesystem::path base_;
};

void reject_unknown(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("unknown config key '" + section + "' (keys belong in a section)");
    }
    for (const auto& [key, _] : body) {
      const std::string full = section + "." + key;
      if (!kKnownKeys.contains(full)) throw ConfigError("unknown config key '" + full + "'");
    }
  }
}

template <typename Fn>
void keyed(const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.find(key) != std::string::npos) throw;
    throw ConfigError("config key '" + key + "': " + what);
  }
}

}  // namespace

CliConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  reject_unknown(tree);
  Reader r(tree, base_dir);
  CliConfig c;

  r.path("data.dataset", c.dataset);
  r.path("data.embeddings", c.embeddings);
  r.path("data.bogus", c.bogus);
  r.path("data.model", c.model);
  r.integer("data.users", c.run.sample_users);

  if (auto v = r.raw("attack.kind")) keyed("attack.kind", [&] { c.attack.kind = parse_attack_kind(*v); });
  r.real("attack.ratio", c.attack.injection_ratio);
  r.integer("attack.tag_pool", c.attack.popular_tag_pool);
  r.integer("attack.resource_pool", c.attack.popular_resource_pool);
  r.integer("attack.max_size", c.attack.max_size);
  r.string("attack.bogus_resource", c.attack.bogus_resource);
  if (auto v = r.raw("attack.target_resource")) {
    if (!v->empty()) c.attack.target_resource = *v;
  }
  r.string("attack.user_prefix", c.attack.user_prefix);
  r.integer("attack.seed", c.attack.seed);

  if (auto v = r.raw("train.classifier")) {
    keyed("train.classifier", [&] { c.classifier = parse_classifier_kind(*v); });
  }
  r.integer("train.seed", c.train.seed);
  r.real("train.learning_rate", c.train.learning_rate);
  r.integer("train.batch_size", c.train.batch_size);
  r.integer("train.max_epochs", c.train.max_epochs);
  r.integer("train.patience", c.train.patience);
  r.real("train.tolerance", c.train.tolerance);
  r.real("train.validation_split", c.train.validation_split);
  r.integer("train.embedding_dim", c.train.embedding_dim);
  r.integer("train.hidden_dim", c.train.hidden_dim);
  r.integer("train.dense_dim", c.train.dense_dim);
  r.integer("train.sequence_length", c.train.sequence_length);
  r.real("train.svm_c", c.train.svm_c);
  r.integer("train.svm_epochs", c.train.svm_epochs);
  r.real("train.nb_smoothing", c.train.nb_smoothing);

  r.list("run.attacks", c.run.attacks, [](const std::string& s) {
    AttackKind k{};
    keyed("run.attacks", [&] { k = parse_attack_kind(s); });
    return k;
  });
  r.list("run.ratios", c.run.ratios,
         [](const std::string& s) { return Reader::parse_real("run.ratios", s); });
  r.real("run.training_ratio", c.run.training_ratio);
  r.integer("run.folds", c.run.folds);
  r.integer("run.repetitions", c.run.repetitions);
  r.integer("run.k", c.run.k);
  r.list("run.classifiers", c.run.classifiers, [](const std::string& s) {
    ClassifierKind k{};
    keyed("run.classifiers", [&] { k = parse_classifier_kind(s); });
    return k;
  });
  r.integer("run.seed", c.run.seed);
  r.integer("run.embedding_dim", c.run.embedding_dim);
  r.integer("run.threads", c.run.threads);

  c.run.attack = c.attack;
  c.run.train = c.train;
  keyed("attack", [&] { c.attack.validate(); });
  keyed("train", [&] { c.train.validate(); });
  keyed("run", [&] { c.run.validate(); });
  return c;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.parent_path());
}

}  // namespace tagguard
