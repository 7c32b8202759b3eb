#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebmkit/cohort.hpp"

namespace ebmkit {

using BinIndex = std::uint32_t;

/// How one feature's raw values map onto contiguous integer bins.
///
/// Continuous: value bins are right-open intervals between ascending cut
/// points, so a value equal to a cut belongs to the upper bin. One extra bin,
/// the last, is reserved for missing values.
///
/// Categorical: one bin per category, in lexicographic order, always
/// including the "Missing" token. Unseen tokens fall into the Missing bin.
struct BinDefinition {
  std::string feature;
  bool categorical = false;
  std::vector<double> cuts;
  double min_value = 0.0;  // observed training range, continuous only
  double max_value = 0.0;
  std::vector<std::string> categories;

  std::size_t value_bins() const { return categorical ? categories.size() : cuts.size() + 1; }
  std::size_t bin_count() const { return categorical ? categories.size() : cuts.size() + 2; }
  BinIndex missing_bin() const;

  BinIndex index(double value) const;
  /// `unseen` is set when the token is not a known category.
  BinIndex index(std::string_view token, bool* unseen = nullptr) const;

  /// Human-readable name for a bin ("[10, 20)", "Missing", a category).
  std::string bin_label(BinIndex bin) const;

  nlohmann::json to_json() const;
  static BinDefinition from_json(const nlohmann::json& j);
  bool operator==(const BinDefinition&) const = default;
};

/// Equal-frequency cut points over the non-missing values. Duplicate
/// quantiles collapse, so a column never gets more bins than it has distinct
/// values.
BinDefinition fit_bins(std::span<const double> values, int max_bins = 256, std::string feature = {});
BinDefinition fit_categorical_bins(std::span<const std::string> tokens, std::string feature = {});

/// Fits one definition per feature on the (training) cohort.
std::vector<BinDefinition> fit_feature_bins(const Cohort& train, const std::vector<std::string>& features,
                                            int max_bins = 256);

struct BinnedMatrix {
  std::size_t rows = 0;
  std::vector<BinDefinition> bins;
  std::vector<std::vector<BinIndex>> indices;  // [feature][row]
  std::size_t unseen_categories = 0;

  std::size_t features() const { return bins.size(); }
  /// Rows at `rows`, in that order, sharing the same bin definitions.
  BinnedMatrix subset(std::span<const std::size_t> row_indices) const;
};

/// Maps every row through the given definitions. The definitions are copied,
/// never modified.
BinnedMatrix bin_matrix(const Cohort& cohort, const std::vector<BinDefinition>& bins);

}  // namespace ebmkit
