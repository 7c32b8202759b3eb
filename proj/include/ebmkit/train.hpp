#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebmkit/binning.hpp"
#include "ebmkit/cohort.hpp"
#include "ebmkit/model.hpp"
#include "ebmkit/preprocess.hpp"

namespace ebmkit {

struct TrainConfig {
  int outer_bags = 25;
  int inner_bags = 25;
  int min_samples_leaf = 25;
  int interactions = 20;
  double learning_rate = 0.01;
  int max_leaves = 3;
  int max_epochs = 5000;
  int early_stop_patience = 50;
  double early_stop_tolerance = 1e-4;  // absolute validation log-loss
  double validation_fraction = 0.15;
  int max_bins = 256;
  int max_interaction_bins = 32;
  std::uint64_t seed = 0;
  int threads = 0;    // 0: one per hardware thread
  int verbosity = 0;  // 1: per-stage summaries, 2: every 50 epochs

  /// Small bag counts for quick runs and tests.
  static TrainConfig fast();

  void validate() const;
  nlohmann::json to_json() const;
  /// Keys not present in `j` keep the values already in `base`.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Leaf fitting

/// Gradient statistics of the rows falling in one bin (or grid cell).
struct BinStats {
  double gradient = 0.0;  // sum of residuals y - p
  double hessian = 0.0;   // sum of p (1 - p)
  double count = 0.0;
};

/// Piecewise-constant update over a feature's bins: `values[bin]` is the
/// Newton step (sum residual / sum hessian) of the leaf containing the bin,
/// before the learning rate is applied.
struct LeafUpdate {
  std::vector<double> values;
  std::vector<std::size_t> splits;  // first bin of each leaf after the first (ordered features)
  int leaves = 1;
};

/// Shallow tree over one feature. Ordered features grow greedy best-first
/// splits of contiguous bins up to `max_leaves` leaves; categorical features
/// give every category with at least `min_samples_leaf` rows its own leaf and
/// pool the rest. Every leaf covers at least `min_samples_leaf` rows, except
/// the single leaf used when no split is feasible.
LeafUpdate fit_leaf_update(std::span<const BinStats> histogram, int min_samples_leaf, int max_leaves,
                           bool categorical = false);

/// Builds the histogram from per-row residuals and hessians, then fits.
LeafUpdate fit_leaf_update(std::span<const double> residuals, std::span<const double> hessians,
                           std::span<const BinIndex> bins, std::size_t bin_count, int min_samples_leaf,
                           int max_leaves, bool categorical = false);

/// Depth-two axis-aligned tree (at most four leaves) on a rows x cols grid.
/// Returns one Newton step per cell.
std::vector<double> fit_pair_update(std::span<const BinStats> grid, std::size_t rows, std::size_t cols,
                                    int min_samples_leaf);

// ---------------------------------------------------------------------------
// Early stopping

class EarlyStopper {
 public:
  EarlyStopper(int patience, double tolerance = 0.0) : patience_(patience), tolerance_(tolerance) {}

  /// Records the validation loss after `epoch` (1-based). Returns true when
  /// this is a new best.
  bool observe(int epoch, double loss);
  bool should_stop(int epoch) const { return epoch - best_epoch_ >= patience_; }

  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  int patience_;
  double tolerance_;
  int best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Cyclic boosting on one outer bag

struct PairGrid {
  std::array<std::size_t, 2> features{};
  std::array<std::vector<BinIndex>, 2> maps;
  std::array<std::size_t, 2> shape{};

  std::size_t cells() const { return shape[0] * shape[1]; }
};

/// Interaction candidate with its FAST score.
struct PairCandidate {
  std::size_t first = 0;
  std::size_t second = 0;
  double score = 0.0;
};

/// Per-bag boosting state: additive tables, per-row logits, residuals and
/// hessians, and the best-validation snapshot.
struct BoostState {
  double intercept = 0.0;
  std::vector<std::vector<double>> tables;       // [feature][bin]
  std::vector<std::vector<double>> pair_tables;  // [pair][cell]
  std::vector<double> logits;                    // training rows
  std::vector<double> residuals;
  std::vector<double> hessians;
  std::vector<double> validation_logits;
  int epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_tables;
  std::vector<std::vector<double>> best_pair_tables;
};

/// Boosting engine for one outer bag. Holds the bag's training and
/// validation rows, its inner-bag bootstrap multiplicities, and the state.
class Booster {
 public:
  /// `inner_counts` is row-major [train row][inner bag]; empty means a single
  /// inner bag with every row counted once.
  Booster(BinnedMatrix train, std::vector<double> train_labels, BinnedMatrix validation,
          std::vector<double> validation_labels, const TrainConfig& config,
          std::vector<std::uint8_t> inner_counts = {});

  /// One round-robin pass over every feature in order. Returns the
  /// validation log-loss afterwards (training loss when there is no
  /// validation set).
  double boost_epoch();
  /// One round-robin pass over the selected pairs.
  double boost_pair_epoch();

  /// Runs epochs until early stopping or max_epochs, then restores the best
  /// snapshot. Returns the number of epochs run.
  int fit_main_effects();
  int fit_pairs(std::vector<PairGrid> pairs);

  double train_loss() const;
  double validation_loss() const;
  /// Largest |stored logit - recomputed logit| over training rows.
  double additivity_error() const;

  /// FAST score of every feature pair on this bag's current residuals.
  std::vector<PairCandidate> score_pairs(const std::vector<PairGrid>& grids) const;

  const BoostState& state() const { return state_; }
  BoostState& mutable_state() { return state_; }
  const std::vector<PairGrid>& pairs() const { return pairs_; }

  void set_label(std::string label) { label_ = std::move(label); }

 private:
  void update_feature(std::size_t f);
  void update_pair(std::size_t k);
  void refresh_residuals();
  void recompute_logits();
  double logit_of(const BinnedMatrix& m, std::size_t row) const;

  BinnedMatrix train_;
  std::vector<double> y_;
  BinnedMatrix validation_;
  std::vector<double> y_validation_;
  TrainConfig config_;
  int inner_bags_ = 1;
  std::vector<std::uint8_t> inner_counts_;
  std::vector<PairGrid> pairs_;
  BoostState state_;
  std::string label_;
};

/// Ranks the candidates by score (descending, ties by (first, second)) and
/// keeps the top `k`.
std::vector<PairCandidate> top_pairs(std::vector<PairCandidate> candidates, int k);

/// FAST interaction detection: for every feature pair, the best reduction in
/// residual sum of squares from a single cut on each feature (four
/// quadrants, each holding at least `min_samples_leaf` rows) on the 2-D
/// residual histogram. Returns the top `k`.
std::vector<PairCandidate> detect_interactions(const BinnedMatrix& binned, std::span<const double> residuals,
                                               const std::vector<PairGrid>& grids, int k,
                                               int min_samples_leaf);

/// Groups a feature's bins into at most `max_groups` contiguous groups of
/// roughly equal training mass.
std::vector<BinIndex> coarsen_bins(std::span<const double> counts, int max_groups);

/// Grid for every feature pair (i < j), using coarsened bins.
std::vector<PairGrid> all_pair_grids(const std::vector<std::vector<double>>& bin_counts, int max_groups);

// ---------------------------------------------------------------------------
// Model assembly

/// Subtracts each term's training-frequency-weighted mean and adds it to the
/// intercept, then zeroes bins and cells that hold no training rows.
void center_shapes(EbmModel& model);

/// Per-bin mean across bags as the shape, sample standard deviation as the
/// error bar, mean intercept. All bags must share bins and pairs.
EbmModel outer_bag_aggregate(const std::vector<EbmModel>& bags);

/// Validation split of an outer bag: label-stratified, `fraction` of each
/// class held out.
void outer_bag_split(std::span<const double> labels, double fraction, std::uint64_t seed,
                     std::vector<std::size_t>& train_rows, std::vector<std::size_t>& validation_rows);

/// Everything a training run produces, for inspection and tests.
struct EbmFit {
  EbmModel model;                           // aggregate of the bags
  std::vector<EbmModel> bags;               // centered per-bag models
  std::vector<PairCandidate> pair_ranking;  // every pair, FAST scores summed over bags
  std::vector<int> main_epochs;
  std::vector<int> pair_epochs;
};

EbmFit fit_ebm_detailed(const BinnedMatrix& binned, std::span<const double> labels, const TrainConfig& config,
                        const std::string& outcome = {});

/// Trains an EBM on an already-binned training set.
EbmModel fit_ebm(const BinnedMatrix& binned, std::span<const double> labels, const TrainConfig& config,
                 const std::string& outcome = {});

/// Bins the allowlisted features of `train` (fitted on `train`), then fits.
EbmModel fit_ebm(const Cohort& train, const TrainConfig& config, const std::string& outcome);

/// Exclusions, train-mean imputation, then fit_ebm. The imputation means are
/// stored in the model for use on new data.
EbmModel train_ebm_pipeline(const Cohort& cohort, const TrainConfig& config, const std::string& outcome,
                            const ExclusionRuleSet& rules, ExclusionReport* report = nullptr);

}  // namespace ebmkit
