#include "drs/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drs/error.hpp"
#include "drs/features.hpp"
#include "drs/mathfn.hpp"

namespace drs {

using nlohmann::json;

namespace {

void check_matrix(const std::vector<std::vector<double>>& X,
                  const std::vector<int>& y,
                  const std::vector<std::string>& names) {
  if (X.size() != y.size())
    throw UsageError("train_logreg: feature rows and labels differ in count");
  if (X.size() < 2)
    throw UsageError("train_logreg: need at least two training rows");
  bool saw0 = false, saw1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw UsageError("train_logreg: labels must be 0/1");
    (v ? saw1 : saw0) = true;
  }
  if (!saw0 || !saw1)
    throw UsageError("train_logreg: training data contains a single class");
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != names.size()) {
      std::ostringstream os;
      os << "train_logreg: row " << i << " has " << X[i].size()
         << " features, expected " << names.size();
      throw UsageError(os.str());
    }
    for (std::size_t j = 0; j < X[i].size(); ++j) {
      if (!std::isfinite(X[i][j])) {
        std::ostringstream os;
        os << "train_logreg: non-finite value in row " << i << ", feature '"
           << names[j] << "'";
        throw UsageError(os.str());
      }
    }
  }
}

}  // namespace

double logreg_loss(const std::vector<std::vector<double>>& X,
                   const std::vector<int>& y, const std::vector<double>& w,
                   double b, double l2) {
  const std::size_t n = X.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * X[i][j];
    loss -= y[i] ? log_sigmoid(z) : log_sigmoid(-z);
  }
  loss /= static_cast<double>(n);
  double reg = 0.0;
  for (double wj : w) reg += wj * wj;
  return loss + 0.5 * l2 * reg;
}

void logreg_gradient(const std::vector<std::vector<double>>& X,
                     const std::vector<int>& y, const std::vector<double>& w,
                     double b, double l2, std::vector<double>& grad_w,
                     double& grad_b) {
  const std::size_t n = X.size();
  grad_w.assign(w.size(), 0.0);
  grad_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * X[i][j];
    const double resid = sigmoid(z) - static_cast<double>(y[i]);
    for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += resid * X[i][j];
    grad_b += resid;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < w.size(); ++j)
    grad_w[j] = grad_w[j] * inv_n + l2 * w[j];
  grad_b *= inv_n;
}

LogisticModel train_logreg(const std::vector<std::vector<double>>& X,
                           const std::vector<int>& y,
                           const std::vector<std::string>& feature_names,
                           const LogregConfig& cfg) {
  check_matrix(X, y, feature_names);
  const std::size_t n = X.size(), d = feature_names.size();

  LogisticModel m;
  m.feature_order = feature_names;
  m.train_meta = cfg;
  m.means.assign(d, 0.0);
  m.scales.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += X[i][j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = X[i][j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(n);
    m.means[j] = mean;
    m.scales[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }

  std::vector<std::vector<double>> Xs(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      Xs[i][j] = (X[i][j] - m.means[j]) / m.scales[j];

  // The llm_score column's raw training mean backs later imputation.
  for (std::size_t j = 0; j < d; ++j)
    if (feature_names[j] == kLlmScoreFeature) m.llm_score_mean = m.means[j];

  m.weights.assign(d, 0.0);
  m.intercept = 0.0;
  m.epoch_losses.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  std::vector<double> grad_w;
  double grad_b = 0.0;
  for (int e = 0; e < cfg.epochs; ++e) {
    m.epoch_losses.push_back(
        logreg_loss(Xs, y, m.weights, m.intercept, cfg.l2));
    logreg_gradient(Xs, y, m.weights, m.intercept, cfg.l2, grad_w, grad_b);
    for (std::size_t j = 0; j < d; ++j) m.weights[j] -= cfg.lr * grad_w[j];
    m.intercept -= cfg.lr * grad_b;
  }
  m.epoch_losses.push_back(logreg_loss(Xs, y, m.weights, m.intercept, cfg.l2));
  return m;
}

namespace {

// Raw row -> standardized row in model order, imputing a missing trailing
// llm_score with the stored training mean.
std::vector<double> standardized_row(const LogisticModel& m,
                                     const std::vector<double>& x) {
  const std::size_t d = m.feature_order.size();
  std::vector<double> row(d);
  if (x.size() == d) {
    for (std::size_t j = 0; j < d; ++j) row[j] = x[j];
  } else if (x.size() + 1 == d && m.feature_order.back() == kLlmScoreFeature) {
    if (!m.llm_score_mean)
      throw std::runtime_error(
          "model has an llm_score feature but no stored training mean");
    for (std::size_t j = 0; j + 1 < d; ++j) row[j] = x[j];
    row[d - 1] = *m.llm_score_mean;
  } else {
    std::ostringstream os;
    os << "feature row has " << x.size() << " values but the model expects "
       << d;
    throw UsageError(os.str());
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!std::isfinite(row[j]))
      throw UsageError("non-finite value for feature '" + m.feature_order[j] +
                       "'");
    row[j] = (row[j] - m.means[j]) / m.scales[j];
  }
  return row;
}

}  // namespace

double logreg_logit(const LogisticModel& m, const std::vector<double>& x) {
  const std::vector<double> row = standardized_row(m, x);
  double z = m.intercept;
  for (std::size_t j = 0; j < row.size(); ++j) z += m.weights[j] * row[j];
  return z;
}

double logreg_score(const LogisticModel& m, const std::vector<double>& x) {
  return sigmoid(logreg_logit(m, x));
}

std::vector<std::pair<std::string, double>> logreg_contributions(
    const LogisticModel& m, const std::vector<double>& x) {
  const std::vector<double> row = standardized_row(m, x);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(row.size());
  for (std::size_t j = 0; j < row.size(); ++j)
    out.emplace_back(m.feature_order[j], m.weights[j] * row[j]);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return out;
}

std::vector<std::pair<std::string, double>> explain(
    const LogisticModel& m, const std::vector<double>& x, std::size_t k) {
  std::vector<std::pair<std::string, double>> all = logreg_contributions(m, x);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& c : all) {
    if (c.second <= 0.0 || out.size() == k) break;
    out.push_back(c);
  }
  return out;
}

double ensemble_score(const LogisticModel& m,
                      const std::vector<double>& x_base,
                      std::optional<double> llm_score) {
  if (m.feature_order.empty() || m.feature_order.back() != kLlmScoreFeature)
    throw UsageError(
        "ensemble_score: model was not trained with an llm_score feature");
  std::vector<double> x = x_base;
  if (x.size() + 1 != m.feature_order.size())
    throw UsageError("ensemble_score: base row arity mismatch");
  if (llm_score) x.push_back(*llm_score);
  return logreg_score(m, x);
}

json logreg_to_json(const LogisticModel& m) {
  json weights = json::object();
  for (std::size_t j = 0; j < m.feature_order.size(); ++j)
    weights[m.feature_order[j]] = m.weights[j];
  json meta{{"l2", m.train_meta.l2},
            {"lr", m.train_meta.lr},
            {"epochs", m.train_meta.epochs},
            {"seed", m.train_meta.seed}};
  if (m.llm_score_mean) meta["llm_score_mean"] = *m.llm_score_mean;
  return json{{"kind", "logreg"},
              {"version", 1},
              {"model_id", m.model_id},
              {"feature_order", m.feature_order},
              {"weights", std::move(weights)},
              {"intercept", m.intercept},
              {"means", m.means},
              {"scales", m.scales},
              {"train_meta", std::move(meta)}};
}

namespace {

void reject_unknown_model_keys(const json& obj,
                               std::initializer_list<const char*> allowed,
                               const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw UsageError(std::string(where) + ": unknown key '" + key + "'");
  }
}

}  // namespace

LogisticModel logreg_from_json(const json& j) {
  reject_unknown_model_keys(j,
                            {"kind", "version", "model_id", "feature_order",
                             "weights", "intercept", "means", "scales",
                             "train_meta"},
                            "logreg model file");
  if (j.at("kind").get<std::string>() != "logreg")
    throw UsageError("model file is not a logreg model");
  if (j.at("version").get<int>() != 1)
    throw UsageError("unsupported logreg model version");
  LogisticModel m;
  m.model_id = j.value("model_id", "logreg");
  m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
  m.intercept = j.at("intercept").get<double>();
  m.means = j.at("means").get<std::vector<double>>();
  m.scales = j.at("scales").get<std::vector<double>>();
  const json& weights = j.at("weights");
  if (weights.size() != m.feature_order.size())
    throw UsageError("model weights do not match feature_order");
  m.weights.reserve(m.feature_order.size());
  for (const std::string& name : m.feature_order) {
    if (!weights.contains(name))
      throw UsageError("model weights missing feature '" + name + "'");
    m.weights.push_back(weights.at(name).get<double>());
  }
  if (m.means.size() != m.feature_order.size() ||
      m.scales.size() != m.feature_order.size())
    throw UsageError("model standardization arrays do not match features");
  const json& meta = j.at("train_meta");
  reject_unknown_model_keys(meta, {"l2", "lr", "epochs", "seed",
                                   "llm_score_mean"},
                            "logreg model train_meta");
  m.train_meta.l2 = meta.at("l2").get<double>();
  m.train_meta.lr = meta.at("lr").get<double>();
  m.train_meta.epochs = meta.at("epochs").get<int>();
  m.train_meta.seed = meta.at("seed").get<std::uint64_t>();
  if (meta.contains("llm_score_mean"))
    m.llm_score_mean = meta.at("llm_score_mean").get<double>();
  return m;
}

}  // namespace drs
