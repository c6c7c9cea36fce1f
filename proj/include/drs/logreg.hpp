#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace drs {

struct LogregConfig {
  double l2 = 1e-2;   // applied to weights only, never the intercept
  double lr = 0.1;
  int epochs = 500;
  std::uint64_t seed = 0;  // recorded; training itself is deterministic
};

struct LogisticModel {
  std::string model_id = "logreg";
  std::vector<std::string> feature_order;
  std::vector<double> weights;  // aligned with feature_order
  double intercept = 0.0;
  std::vector<double> means;   // training-set standardization
  std::vector<double> scales;  // population std, 1.0 where degenerate
  LogregConfig train_meta;
  std::optional<double> llm_score_mean;  // set when llm_score was a feature
  std::vector<double> epoch_losses;      // loss before each step + final
};

// Full-batch gradient descent on the L2-regularized negative log-likelihood
// over internally standardized features. Deterministic. Errors: size
// mismatch, fewer than two rows, single-class labels, non-finite features
// (named by row and feature).
LogisticModel train_logreg(const std::vector<std::vector<double>>& X,
                           const std::vector<int>& y,
                           const std::vector<std::string>& feature_names,
                           const LogregConfig& cfg = {});

// Loss and gradient on already-standardized rows, exposed so tests can
// check the analytic gradient against finite differences.
double logreg_loss(const std::vector<std::vector<double>>& X,
                   const std::vector<int>& y, const std::vector<double>& w,
                   double b, double l2);
void logreg_gradient(const std::vector<std::vector<double>>& X,
                     const std::vector<int>& y, const std::vector<double>& w,
                     double b, double l2, std::vector<double>& grad_w,
                     double& grad_b);

// Pre-sigmoid logit for a raw feature row. The row may omit a trailing
// llm_score feature, which is then imputed with the training mean; any
// other arity mismatch is an error.
double logreg_logit(const LogisticModel& m, const std::vector<double>& x);
double logreg_score(const LogisticModel& m, const std::vector<double>& x);

// Per-feature contributions w_i * standardized(x_i), sorted descending.
// Their sum plus the intercept equals the logit exactly.
std::vector<std::pair<std::string, double>> logreg_contributions(
    const LogisticModel& m, const std::vector<double>& x);

// Top-k positive contributions: the "reasons" a diff scored high.
std::vector<std::pair<std::string, double>> explain(const LogisticModel& m,
                                                    const std::vector<double>& x,
                                                    std::size_t k);

// Scores a row that lacks the llm_score column, supplying it explicitly or
// imputing the training mean when absent. The model must have been trained
// with llm_score as its last feature.
double ensemble_score(const LogisticModel& m, const std::vector<double>& x_base,
                      std::optional<double> llm_score);

nlohmann::json logreg_to_json(const LogisticModel& m);
LogisticModel logreg_from_json(const nlohmann::json& j);

}  // namespace drs
