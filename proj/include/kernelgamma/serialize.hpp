#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/error.hpp"
#include "kernelgamma/kos.hpp"
#include "kernelgamma/svm.hpp"
#include "kernelgamma/tuning.hpp"

namespace kernelgamma::io {

namespace detail {

inline nlohmann::json parse_json_text(const std::string& text,
                                      const std::string& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw data_error("invalid JSON in " + where + ": " + e.what());
  }
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw data_error(what);
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  require(j.contains(key), std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw data_error(std::string("field '") + key + "' has the wrong type");
  }
}

inline void check_header(const nlohmann::json& j, const char* format) {
  require(field<std::string>(j, "format") == format,
          std::string("not a ") + format + " file");
  require(field<int>(j, "version") == 1, "unsupported file version");
}

}  // namespace detail

inline nlohmann::json scaling_to_json(const ScalingSpec& s) {
  return {{"lo", s.lo},
          {"hi", s.hi},
          {"feature_min", s.feature_min},
          {"feature_max", s.feature_max}};
}

inline ScalingSpec scaling_from_json(const nlohmann::json& j) {
  ScalingSpec s;
  s.lo = detail::field<double>(j, "lo");
  s.hi = detail::field<double>(j, "hi");
  s.feature_min = detail::field<std::vector<double>>(j, "feature_min");
  s.feature_max = detail::field<std::vector<double>>(j, "feature_max");
  detail::require(s.feature_min.size() == s.feature_max.size(),
                  "scaling min/max lengths differ");
  detail::require(s.lo < s.hi, "scaling range needs lo < hi");
  return s;
}

inline nlohmann::json dataset_to_json(const Dataset& ds) {
  nlohmann::json samples = nlohmann::json::array();
  for (const Sample& s : ds.samples())
    samples.push_back({{"c", s.label}, {"x", s.features}});
  return {{"format", "kernelgamma.dataset"},
          {"version", 1},
          {"original_labels", ds.original_labels()},
          {"samples", std::move(samples)}};
}

inline Dataset dataset_from_json(const nlohmann::json& j) {
  detail::check_header(j, "kernelgamma.dataset");
  auto labels = detail::field<std::vector<double>>(j, "original_labels");
  detail::require(j.contains("samples") && j.at("samples").is_array(),
                  "missing field 'samples'");
  std::vector<Sample> samples;
  for (const auto& sj : j.at("samples")) {
    Sample s;
    s.label = detail::field<int>(sj, "c");
    s.features = detail::field<std::vector<double>>(sj, "x");
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), std::move(labels));
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write file '" + path + "'");
  out << dataset_to_json(ds).dump(2) << "\n";
}

/// Loads a dataset file. `format` is one of libsvm, csv, json, or auto
/// (pick by extension: .csv, .json, everything else libsvm).
inline Dataset load_dataset(const std::string& path,
                            const std::string& format = "auto",
                            std::size_t label_column = 0) {
  std::string fmt = format;
  if (fmt == "auto") {
    const std::size_t dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".csv")
      fmt = "csv";
    else if (ext == ".json")
      fmt = "json";
    else
      fmt = "libsvm";
  }
  if (fmt == "json")
    return dataset_from_json(
        detail::parse_json_text(detail::slurp(path), path));
  std::ifstream in(path);
  if (!in) throw data_error("cannot open dataset file '" + path + "'");
  if (fmt == "libsvm") return parse_sparse(in);
  if (fmt == "csv") return parse_csv(in, label_column);
  throw data_error("unknown dataset format '" + format +
                   "' (expected libsvm, csv, json, or auto)");
}

namespace detail {

inline nlohmann::json binary_to_json(const svm::BinaryModel& m) {
  return {{"support_vectors", m.support_vectors},
          {"weights", m.weights},
          {"bias", m.bias},
          {"gamma", m.gamma},
          {"c", m.c}};
}

inline svm::BinaryModel binary_from_json(const nlohmann::json& j) {
  svm::BinaryModel m;
  m.support_vectors =
      field<std::vector<std::vector<double>>>(j, "support_vectors");
  m.weights = field<std::vector<double>>(j, "weights");
  m.bias = field<double>(j, "bias");
  m.gamma = field<double>(j, "gamma");
  m.c = field<double>(j, "c");
  require(m.support_vectors.size() == m.weights.size(),
          "support vector and weight counts differ");
  return m;
}

}  // namespace detail

inline nlohmann::json svm_to_json(const svm::MulticlassModel& m) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : m.pairs)
    pairs.push_back({{"pos", p.pos_class},
                     {"neg", p.neg_class},
                     {"model", detail::binary_to_json(p.model)}});
  return {{"n_classes", m.n_classes}, {"pairs", std::move(pairs)}};
}

inline svm::MulticlassModel svm_from_json(const nlohmann::json& j) {
  svm::MulticlassModel m;
  m.n_classes = detail::field<int>(j, "n_classes");
  detail::require(j.contains("pairs") && j.at("pairs").is_array(),
                  "missing field 'pairs'");
  for (const auto& pj : j.at("pairs")) {
    svm::MulticlassModel::Pair p;
    p.pos_class = detail::field<int>(pj, "pos");
    p.neg_class = detail::field<int>(pj, "neg");
    detail::require(pj.contains("model"), "missing field 'model'");
    p.model = detail::binary_from_json(pj.at("model"));
    m.pairs.push_back(std::move(p));
  }
  return m;
}

inline nlohmann::json kos_to_json(const kos::Model& m) {
  nlohmann::json subs = nlohmann::json::array();
  for (const kos::ClassSubspace& s : m.subspaces)
    subs.push_back({{"class_id", s.class_id},
                    {"subclass_id", s.subclass_id},
                    {"train_points", s.train_points},
                    {"eigenvalues", s.eigenvalues},
                    {"eigenvectors", s.eigenvectors},
                    {"row_means", s.row_means},
                    {"grand_mean", s.grand_mean}});
  return {{"gamma", m.gamma},
          {"eig_tol", m.eig_tol},
          {"n_classes", m.n_classes},
          {"subspaces", std::move(subs)}};
}

inline kos::Model kos_from_json(const nlohmann::json& j) {
  kos::Model m;
  m.gamma = detail::field<double>(j, "gamma");
  m.eig_tol = detail::field<double>(j, "eig_tol");
  m.n_classes = detail::field<int>(j, "n_classes");
  detail::require(j.contains("subspaces") && j.at("subspaces").is_array(),
                  "missing field 'subspaces'");
  for (const auto& sj : j.at("subspaces")) {
    kos::ClassSubspace s;
    s.class_id = detail::field<int>(sj, "class_id");
    s.subclass_id = detail::field<int>(sj, "subclass_id");
    s.train_points =
        detail::field<std::vector<std::vector<double>>>(sj, "train_points");
    s.eigenvalues = detail::field<std::vector<double>>(sj, "eigenvalues");
    s.eigenvectors =
        detail::field<std::vector<std::vector<double>>>(sj, "eigenvectors");
    s.row_means = detail::field<std::vector<double>>(sj, "row_means");
    s.grand_mean = detail::field<double>(sj, "grand_mean");
    m.subspaces.push_back(std::move(s));
  }
  return m;
}

/// Trained classifier plus everything needed to apply it to raw inputs: the
/// fitted scaling (absent when trained unscaled) and the original label
/// vocabulary.
struct SavedModel {
  tuning::Method method = tuning::Method::kSvm;
  std::optional<ScalingSpec> scaling;
  std::vector<double> original_labels;
  std::optional<svm::MulticlassModel> svm_model;
  std::optional<kos::Model> kos_model;
  double gamma = 0.0;
  std::optional<double> c;
};

inline void save_model(const SavedModel& m, const std::string& path) {
  nlohmann::json j{{"format", "kernelgamma.model"},
                   {"version", 1},
                   {"method", tuning::method_name(m.method)},
                   {"gamma", m.gamma},
                   {"labels", m.original_labels}};
  j["scaling"] = m.scaling ? scaling_to_json(*m.scaling) : nlohmann::json();
  j["c"] = m.c ? nlohmann::json(*m.c) : nlohmann::json();
  if (m.method == tuning::Method::kSvm) {
    detail::require(m.svm_model.has_value(), "model payload missing");
    j["svm"] = svm_to_json(*m.svm_model);
  } else {
    detail::require(m.kos_model.has_value(), "model payload missing");
    j["kos"] = kos_to_json(*m.kos_model);
  }
  std::ofstream out(path);
  if (!out) throw data_error("cannot write file '" + path + "'");
  out << j.dump(2) << "\n";
}

inline SavedModel load_model(const std::string& path) {
  const nlohmann::json j =
      detail::parse_json_text(detail::slurp(path), path);
  detail::check_header(j, "kernelgamma.model");
  SavedModel m;
  m.method = tuning::parse_method(detail::field<std::string>(j, "method"));
  m.gamma = detail::field<double>(j, "gamma");
  if (j.contains("c") && !j.at("c").is_null())
    m.c = j.at("c").get<double>();
  detail::require(j.contains("scaling"), "missing field 'scaling'");
  if (!j.at("scaling").is_null())
    m.scaling = scaling_from_json(j.at("scaling"));
  m.original_labels = detail::field<std::vector<double>>(j, "labels");
  if (m.method == tuning::Method::kSvm) {
    detail::require(j.contains("svm"), "missing field 'svm'");
    m.svm_model = svm_from_json(j.at("svm"));
  } else {
    detail::require(j.contains("kos"), "missing field 'kos'");
    m.kos_model = kos_from_json(j.at("kos"));
  }
  return m;
}

/// Applies a saved model to one raw point: scale if the model was trained
/// scaled, classify, return the internal class id.
inline int predict_id(const SavedModel& m, PointView x) {
  std::vector<double> xs(x.begin(), x.end());
  if (m.scaling) scale_point_inplace(xs, *m.scaling);
  if (m.method == tuning::Method::kSvm) return svm::predict(*m.svm_model, xs);
  return kos::predict(*m.kos_model, xs);
}

inline double predict_label(const SavedModel& m, PointView x) {
  const int id = predict_id(m, x);
  if (id < 0 || static_cast<std::size_t>(id) >= m.original_labels.size())
    throw data_error("predicted class id outside the label table");
  return m.original_labels[static_cast<std::size_t>(id)];
}

}  // namespace kernelgamma::io
