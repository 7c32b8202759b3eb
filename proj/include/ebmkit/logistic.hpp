#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebmkit/cohort.hpp"
#include "ebmkit/preprocess.hpp"

namespace ebmkit {

/// L2-regularized logistic regression on a dummy-encoded design matrix.
/// Weights are stored on the raw (unstandardized) column scale; the
/// standardization used while fitting is kept for reference.
struct LrModel {
  std::vector<std::string> columns;
  std::vector<double> weights;
  double bias = 0.0;
  double l2 = 1e-4;
  std::vector<double> column_means;
  std::vector<double> column_stds;
  int iterations = 0;

  // Set when the model was trained from a cohort.
  std::string outcome;
  std::optional<DummyEncoder> encoder;
  std::optional<ImputationStats> imputation;
};

struct LrOptions {
  double l2 = 1e-4;
  double tol = 1e-8;
  int max_iterations = 100;
};

/// Full-batch Newton with backtracking on
///   mean log-loss + (l2 / 2) |w|^2   (bias not penalized)
/// over standardized continuous columns, until the gradient norm is <= tol.
LrModel fit_lr(const DesignMatrix& design, std::span<const double> labels, const LrOptions& options = {});

/// Gradient of the objective above at (weights, bias) on `design` as given
/// (no standardization). The last entry is the bias derivative.
std::vector<double> lr_gradient(std::span<const double> weights, double bias, const DesignMatrix& design,
                                std::span<const double> labels, double l2);
double lr_objective(std::span<const double> weights, double bias, const DesignMatrix& design,
                    std::span<const double> labels, double l2);

std::vector<double> predict_lr_logit(const LrModel& model, const DesignMatrix& design);
std::vector<double> predict_lr(const LrModel& model, const DesignMatrix& design);
/// Imputes and encodes with the stored train-side statistics first.
std::vector<double> predict_lr(const LrModel& model, const Cohort& cohort);

/// Mean imputation, dummy encoding and fit_lr on the allowlisted features of
/// `outcome`.
LrModel train_lr_pipeline(const Cohort& train, const std::string& outcome, const LrOptions& options = {});

nlohmann::json lr_to_json(const LrModel& model);
LrModel lr_from_json(const nlohmann::json& j);
std::string serialize(const LrModel& model);

}  // namespace ebmkit
