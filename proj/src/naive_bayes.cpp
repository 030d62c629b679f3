#include <algorithm>
#include <cmath>

#include "driftkit/error.hpp"
#include "driftkit/learners.hpp"

namespace driftkit {

NaiveBayes::NaiveBayes(std::vector<std::string> classes, std::size_t dim, double alpha)
    : Learner(std::move(classes)), dim_(dim), alpha_(alpha) {
  if (dim_ == 0) throw ConfigError("nb: dim must be positive");
  if (!(alpha_ > 0.0)) throw ConfigError("nb: alpha must be positive");
  reset();
}

void NaiveBayes::reset() {
  class_weight_.assign(n_classes(), 0.0);
  class_mass_.assign(n_classes(), 0.0);
  feature_mass_.assign(n_classes(), std::vector<double>(dim_, 0.0));
}

void NaiveBayes::learn_one(const FeatureVector& x, std::size_t label, double weight) {
  class_weight_.at(label) += weight;
  auto& mass = feature_mass_[label];
  for (const auto& [i, v] : x.entries()) {
    if (i >= dim_) continue;
    mass[i] += weight * v;
    class_mass_[label] += weight * v;
  }
}

std::vector<double> NaiveBayes::log_joint(const FeatureVector& x) const {
  const double k = static_cast<double>(n_classes());
  double total = 0.0;
  for (double w : class_weight_) total += w;
  std::vector<double> out(n_classes());
  for (std::size_t c = 0; c < n_classes(); ++c) {
    double lp = std::log((class_weight_[c] + alpha_) / (total + alpha_ * k));
    const double denom = class_mass_[c] + alpha_ * static_cast<double>(dim_);
    for (const auto& [i, v] : x.entries()) {
      if (i >= dim_) continue;
      lp += v * std::log((feature_mass_[c][i] + alpha_) / denom);
    }
    out[c] = lp;
  }
  return out;
}

std::vector<double> NaiveBayes::predict_proba(const FeatureVector& x) const {
  auto lj = log_joint(x);
  const double mx = *std::max_element(lj.begin(), lj.end());
  double z = 0.0;
  for (auto& v : lj) z += v = std::exp(v - mx);
  for (auto& v : lj) v /= z;
  return lj;
}

nlohmann::json NaiveBayes::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& m : feature_mass_) {
    nlohmann::json sparse = nlohmann::json::object();
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] != 0.0) sparse[std::to_string(i)] = m[i];
    }
    features.push_back(std::move(sparse));
  }
  return {{"version", 1},          {"learner", "nb"},
          {"classes", classes()},  {"dim", dim_},
          {"alpha", alpha_},       {"class_weight", class_weight_},
          {"feature_mass", features}};
}

std::unique_ptr<NaiveBayes> NaiveBayes::from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1 || j.at("learner") != "nb") {
      throw DataError("not a version-1 nb snapshot");
    }
    auto nb = std::make_unique<NaiveBayes>(j.at("classes").get<std::vector<std::string>>(),
                                           j.at("dim").get<std::size_t>(),
                                           j.at("alpha").get<double>());
    nb->class_weight_ = j.at("class_weight").get<std::vector<double>>();
    const auto& features = j.at("feature_mass");
    if (nb->class_weight_.size() != nb->n_classes() || features.size() != nb->n_classes()) {
      throw DataError("nb snapshot class count mismatch");
    }
    for (std::size_t c = 0; c < nb->n_classes(); ++c) {
      for (const auto& [key, value] : features[c].items()) {
        const auto i = std::stoul(key);
        if (i >= nb->dim_) throw DataError("nb snapshot feature index out of range");
        nb->feature_mass_[c][i] = value.get<double>();
        nb->class_mass_[c] += value.get<double>();
      }
    }
    return nb;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed nb snapshot: ") + e.what());
  }
}

}  // namespace driftkit
