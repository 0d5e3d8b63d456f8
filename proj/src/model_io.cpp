#include "tagguard/model_io.hpp"

#include <fstream>
#include <iterator>
#include <ostream>

#include "json.hpp"

#include "tagguard/error.hpp"
#include "tagguard/naive_bayes.hpp"
#include "tagguard/neural.hpp"
#include "tagguard/svm.hpp"

namespace tagguard {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != m) throw Error("ragged matrix in model file");
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return out;
}

json model_body(const Classifier& classifier) {
  if (const auto* nb = dynamic_cast<const NaiveBayesModel*>(&classifier)) {
    json table = json::object();
    for (const auto& [tag, p] : nb->table()) table[tag] = p;
    return {{"default_spamicity", nb->default_spamicity()}, {"spamicity", table}};
  }
  if (const auto* svm = dynamic_cast<const SvmClassifier*>(&classifier)) {
    const auto& w = svm->model().weights;
    return {{"idf", svm->vectorizer().idf_values()},
            {"documents", svm->vectorizer().documents()},
            {"weights", std::vector<double>(w.data(), w.data() + w.size())},
            {"bias", svm->model().bias},
            {"c", svm->model().c}};
  }
  if (const auto* nn = dynamic_cast<const NeuralClassifier*>(&classifier)) {
    const auto& shape = nn->model().shape();
    json params = json::object();
    auto tensors = nn->model().parameters().tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      params[std::string(NeuralParameters::kNames[i])] = matrix_to_json(*tensors[i]);
    }
    return {{"shape",
             {{"vocabulary", shape.vocabulary},
              {"embedding", shape.embedding},
              {"hidden", shape.hidden},
              {"dense", shape.dense},
              {"sequence", shape.sequence}}},
            {"parameters", params}};
  }
  throw Error("classifier kind '" + std::string(to_string(classifier.kind())) +
              "' cannot be saved");
}

}  // namespace

std::string serialize_model(const Classifier& classifier, const Vocabulary& vocabulary) {
  if (classifier.vocabulary_fingerprint() != vocabulary.fingerprint()) {
    throw Error("classifier was trained against a different vocabulary");
  }
  json doc = {{"format", "tagguard-model"},
              {"version", kModelFormatVersion},
              {"kind", std::string(to_string(classifier.kind()))},
              {"vocabulary_fingerprint", vocabulary.fingerprint()},
              {"vocabulary", vocabulary.tags()},
              {"model", model_body(classifier)}};
  return doc.dump(1) + "\n";
}

void save_model(const Classifier& classifier, const Vocabulary& vocabulary, std::ostream& out) {
  out << serialize_model(classifier, vocabulary);
  if (!out) throw Error("failed to write model");
}

LoadedModel parse_model(const std::string& text) {
  try {
    json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "tagguard-model") {
      throw Error("not a tagguard model file");
    }
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw Error("unsupported model version " + doc.at("version").dump());
    }
    auto vocabulary =
        std::make_shared<const Vocabulary>(doc.at("vocabulary").get<std::vector<std::string>>());
    if (doc.at("vocabulary_fingerprint").get<std::uint64_t>() != vocabulary->fingerprint()) {
      throw Error("model vocabulary fingerprint mismatch");
    }
    ClassifierKind kind;
    try {
      kind = parse_classifier_kind(doc.at("kind").get<std::string>());
    } catch (const ConfigError& e) {
      throw Error(e.what());
    }
    const json& body = doc.at("model");
    LoadedModel out{vocabulary, nullptr};
    switch (kind) {
      case ClassifierKind::NaiveBayes: {
        NaiveBayesModel::SpamicityMap table;
        for (const auto& [tag, p] : body.at("spamicity").items()) table.emplace(tag, p.get<double>());
        out.classifier = std::make_unique<NaiveBayesModel>(
            std::move(table), body.at("default_spamicity").get<double>(), vocabulary->fingerprint());
        break;
      }
      case ClassifierKind::Svm: {
        TfidfVectorizer vectorizer(vocabulary, body.at("idf").get<std::vector<double>>(),
                                   body.at("documents").get<std::size_t>());
        auto w = body.at("weights").get<std::vector<double>>();
        SvmModel model{Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                       body.at("bias").get<double>(), body.at("c").get<double>()};
        out.classifier = std::make_unique<SvmClassifier>(std::move(vectorizer), std::move(model));
        break;
      }
      case ClassifierKind::Neural: {
        const json& s = body.at("shape");
        NeuralShape shape{s.at("vocabulary").get<std::size_t>(), s.at("embedding").get<std::size_t>(),
                          s.at("hidden").get<std::size_t>(), s.at("dense").get<std::size_t>(),
                          s.at("sequence").get<std::size_t>()};
        NeuralParameters params;
        auto tensors = params.tensors();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
          *tensors[i] = matrix_from_json(body.at("parameters").at(std::string(NeuralParameters::kNames[i])));
        }
        out.classifier = std::make_unique<NeuralClassifier>(
            vocabulary, NeuralModel(shape, std::move(params)));
        break;
      }
      case ClassifierKind::None:
        throw Error("model kind 'none' has no serial form");
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed model file: ") + e.what());
  }
}

LoadedModel load_model(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_model(text);
}

LoadedModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace tagguard
