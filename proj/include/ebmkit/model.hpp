#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebmkit/binning.hpp"
#include "ebmkit/cohort.hpp"
#include "ebmkit/preprocess.hpp"

namespace ebmkit {

/// Shape function of one feature: a contribution (log-odds) per bin.
struct FeatureTerm {
  BinDefinition bins;
  std::vector<double> scores;
  std::vector<double> stds;    // spread across outer bags
  std::vector<double> counts;  // training rows per bin

  const std::string& name() const { return bins.feature; }
};

/// Pairwise interaction surface on a coarsened grid of two features' bins.
/// `maps[k][bin]` is the grid coordinate of a bin of feature `features[k]`.
struct PairTerm {
  std::array<std::size_t, 2> features{};  // indices into EbmModel::features
  std::array<std::vector<BinIndex>, 2> maps;
  std::array<std::size_t, 2> shape{};     // grid rows, grid columns
  std::vector<double> scores;             // row-major shape[0] x shape[1]
  std::vector<double> stds;
  std::vector<double> counts;

  std::size_t cell(BinIndex first_bin, BinIndex second_bin) const {
    return maps[0][first_bin] * shape[1] + maps[1][second_bin];
  }
};

struct ModelMetadata {
  std::string outcome;
  std::uint64_t seed = 0;
  double train_prevalence = 0.0;
  std::size_t train_rows = 0;
  nlohmann::json config = nlohmann::json::object();
  std::optional<ImputationStats> imputation;
};

/// Additive logistic model: logit = intercept + sum of feature shape lookups
/// + sum of pair surface lookups.
class EbmModel {
 public:
  double intercept = 0.0;
  std::vector<FeatureTerm> features;
  std::vector<PairTerm> pairs;
  ModelMetadata meta;

  std::size_t term_count() const { return features.size() + pairs.size(); }
  std::string term_name(std::size_t term) const;
  bool is_pair(std::size_t term) const { return term >= features.size(); }
  std::optional<std::size_t> find_feature(std::string_view name) const;

  std::vector<BinDefinition> bin_definitions() const;

  /// Applies the stored training imputation (when present) and maps the
  /// cohort onto the model's bins.
  BinnedMatrix bin(const Cohort& cohort) const;

  /// Writes one contribution per term (features first, then pairs).
  void term_contributions(const BinnedMatrix& binned, std::size_t row, std::span<double> out) const;

  /// intercept + contributions, summed in term order. Shared by prediction
  /// and explanation so both produce the same bits.
  double sum_terms(std::span<const double> contributions) const;

  void validate() const;
};

double predict_logit(const EbmModel& model, const BinnedMatrix& binned, std::size_t row);
std::vector<double> predict_logit(const EbmModel& model, const BinnedMatrix& binned);
std::vector<double> predict_logit(const EbmModel& model, const Cohort& cohort);
std::vector<double> predict_proba(const EbmModel& model, const BinnedMatrix& binned);
std::vector<double> predict_proba(const EbmModel& model, const Cohort& cohort);

struct TermContribution {
  std::string name;
  double contribution = 0.0;
  bool is_pair = false;
};

struct LocalExplanation {
  std::vector<TermContribution> terms;  // in model term order
  double intercept = 0.0;
  double logit = 0.0;
  double probability = 0.0;

  /// Terms sorted by |contribution|, largest first; ties keep term order.
  std::vector<TermContribution> ranked() const;
};

LocalExplanation local_explanation(const EbmModel& model, const BinnedMatrix& binned, std::size_t row);

struct ImportanceEntry {
  std::string name;
  double importance = 0.0;
  bool is_pair = false;
};

/// Mean absolute contribution to the log-odds over a reference population,
/// ranked descending with ties broken by name.
std::vector<ImportanceEntry> feature_importance(const EbmModel& model, const BinnedMatrix& reference);

/// Same metric over the training population, using the bin counts stored in
/// the model.
std::vector<ImportanceEntry> feature_importance(const EbmModel& model);

inline constexpr std::string_view kModelFormat = "ebmkit-model";
inline constexpr int kModelVersion = 1;

nlohmann::json model_to_json(const EbmModel& model);
EbmModel model_from_json(const nlohmann::json& j);
std::string serialize(const EbmModel& model);
EbmModel deserialize(std::string_view bytes);

/// Parses and validates the common model-file envelope; returns its "kind".
std::string model_kind(const nlohmann::json& j);
nlohmann::json parse_model_file(std::string_view bytes);

}  // namespace ebmkit
