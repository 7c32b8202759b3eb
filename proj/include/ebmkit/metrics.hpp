#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebmkit/cohort.hpp"
#include "ebmkit/split.hpp"

namespace ebmkit {

/// P(score+ > score-) + P(tie) / 2 via midranks, O(n log n).
double auroc(std::span<const double> scores, std::span<const double> labels);
/// Quadratic reference implementation over every positive/negative pair.
double auroc_bruteforce(std::span<const double> scores, std::span<const double> labels);

/// Mean negative log-likelihood with probabilities clipped to [1e-15, 1 - 1e-15].
double log_loss(std::span<const double> probs, std::span<const double> labels);

struct CalibrationPoint {
  double predicted = 0.0;  // mean predicted probability in the bin
  double observed = 0.0;   // positive rate in the bin
  std::size_t count = 0;
};

enum class CalibrationBinning { kQuantile, kUniform };

/// Equal-frequency bins by default. Tied probabilities never straddle a bin
/// boundary, so bins whose quantile boundaries coincide are merged. Uniform
/// binning splits [0, 1] into equal widths and drops empty bins.
std::vector<CalibrationPoint> calibration_curve(std::span<const double> probs, std::span<const double> labels,
                                                int bins = 10,
                                                CalibrationBinning binning = CalibrationBinning::kQuantile);

/// Largest |observed - predicted| over the points.
double max_calibration_error(std::span<const CalibrationPoint> points);

// ---------------------------------------------------------------------------
// Evaluation harness

/// Trains on `train` and returns a score per row of `test`.
using Recipe = std::function<std::vector<double>(const Cohort& train, const Cohort& test)>;

struct TrainConfig;
struct LrOptions;
Recipe ebm_recipe(const TrainConfig& config, const std::string& outcome);
Recipe lr_recipe(const std::string& outcome, const LrOptions& options);
/// Looks scores up by row id; ignores the training side.
Recipe external_scores_recipe(std::map<std::int64_t, double> scores);

struct CvResult {
  std::vector<double> fold_aurocs;
  std::vector<double> fold_log_losses;  // empty when scores are not probabilities
  double mean = 0.0;
  double std = 0.0;  // sample std across folds
};

CvResult cv_evaluate(const Recipe& recipe, const Cohort& cohort, const std::string& outcome, int k = 5,
                     std::uint64_t seed = 0);

struct HoldoutResult {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::set<std::string> train_hospitals;  // empty for random splits
  std::vector<double> scores;
  std::vector<double> labels;
  double auroc = 0.0;
};

/// hospital_split, train on the chosen hospitals, score the rest.
HoldoutResult external_validate(const Recipe& recipe, const Cohort& cohort, const std::string& outcome,
                                std::uint64_t seed = 0, double target_fraction = 0.75);
/// Label-stratified random split with the same train fraction.
HoldoutResult random_split_validate(const Recipe& recipe, const Cohort& cohort, const std::string& outcome,
                                    std::uint64_t seed = 0, double train_fraction = 0.75);

/// Reads a CSV with header "row_id,score".
std::map<std::int64_t, double> ingest_external_scores(const std::string& path);
std::map<std::int64_t, double> parse_external_scores(std::string_view text);
/// Scores for `row_ids` in order; lists every id the map lacks in the error.
std::vector<double> align_scores(const std::map<std::int64_t, double>& scores,
                                 std::span<const std::int64_t> row_ids);
/// Throws MetricError unless every score lies in [0, 1].
void require_probabilities(std::span<const double> scores);

struct EvalReport {
  std::string model;
  std::string outcome;
  std::string protocol;  // "cv5 (fold std)", "hospital", "random"
  double auroc_mean = 0.0;
  double auroc_std = 0.0;
  std::vector<double> fold_aurocs;
  std::optional<double> log_loss;
  std::vector<CalibrationPoint> calibration;
  std::size_t rows = 0;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// Aligned plain-text listing, one line per report.
std::string report_text(std::span<const EvalReport> reports);

}  // namespace ebmkit
