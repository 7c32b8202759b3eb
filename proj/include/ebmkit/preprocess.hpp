#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebmkit/cohort.hpp"

namespace ebmkit {

// ---------------------------------------------------------------------------
// Exclusion of implausible records

struct ExclusionRule {
  enum class Predicate { kBelow, kAbove };

  std::string feature;
  Predicate predicate = Predicate::kAbove;
  double threshold = 0.0;

  bool fires(double value) const {
    if (is_missing(value)) return false;
    return predicate == Predicate::kBelow ? value < threshold : value > threshold;
  }
  std::string label() const;
};

struct ExclusionRuleSet {
  std::vector<ExclusionRule> rules;

  /// Negative time till delivery, birth weight over 8000 g, BMI over 120.
  static ExclusionRuleSet defaults();
  /// The default rules restricted to columns the schema declares.
  static ExclusionRuleSet defaults_for(const FeatureSchema& schema);

  nlohmann::json to_json() const;
  static ExclusionRuleSet from_json(const nlohmann::json& j);
};

inline constexpr std::string_view kTimeToDeliveryColumn = "time_to_delivery_h";
inline constexpr std::string_view kBirthWeightColumn = "birth_weight_g";
inline constexpr std::string_view kBmiColumn = "maternal_bmi";

struct ExclusionReport {
  std::size_t input_rows = 0;
  std::size_t retained_rows = 0;
  std::vector<std::pair<std::string, std::size_t>> fired;  // rule label -> rows it fired on

  nlohmann::json to_json() const;
};

/// Drops every row on which at least one rule fires. Rules never fire on
/// missing values.
std::pair<Cohort, ExclusionReport> apply_exclusions(const Cohort& cohort,
                                                    const ExclusionRuleSet& rules);

// ---------------------------------------------------------------------------
// Mean imputation

struct ImputationStats {
  std::map<std::string, double> means;

  nlohmann::json to_json() const;
  static ImputationStats from_json(const nlohmann::json& j);
};

/// Computes per-column means over non-missing values of every continuous column.
ImputationStats fit_imputation(const Cohort& cohort);

/// Replaces missing continuous values with the recorded means. Columns the
/// stats do not mention are left untouched.
Cohort apply_imputation(const Cohort& cohort, const ImputationStats& stats);

/// fit_imputation followed by apply_imputation on the same cohort.
std::pair<Cohort, ImputationStats> impute_mean(const Cohort& cohort);

// ---------------------------------------------------------------------------
// Dummy encoding

struct DesignMatrix {
  std::vector<std::string> column_names;
  std::vector<bool> is_indicator;
  std::size_t rows = 0;
  std::vector<double> values;  // row-major, rows x column_names.size()
  std::vector<std::string> warnings;

  std::size_t cols() const { return column_names.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols(), cols()};
  }
};

/// Category maps learned on training data. Continuous columns pass through;
/// a categorical column with k observed tokens becomes k indicator columns
/// ordered lexicographically.
class DummyEncoder {
 public:
  DummyEncoder() = default;

  static DummyEncoder fit(const Cohort& train, const std::vector<std::string>& features);

  /// Tokens unseen during fit encode as all-zero indicators and add a warning.
  DesignMatrix encode(const Cohort& cohort) const;

  const std::vector<std::string>& features() const { return features_; }
  std::vector<std::string> column_names() const;

  nlohmann::json to_json() const;
  static DummyEncoder from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> features_;
  std::vector<bool> categorical_;
  std::vector<std::vector<std::string>> categories_;
};

DesignMatrix dummy_encode(const Cohort& cohort, const std::vector<std::string>& features);

}  // namespace ebmkit
