#include <algorithm>
#include <cmath>
#include <iostream>

#include "ebmkit/error.hpp"
#include "ebmkit/numeric.hpp"
#include "ebmkit/train.hpp"

namespace ebmkit {

namespace {

// log(1 + exp(z)) - y z, without overflow
double row_loss(double z, double y) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z; }

double mean_loss(std::span<const double> logits, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) s += row_loss(logits[i], y[i]);
  return s / static_cast<double>(logits.size());
}

}  // namespace

Booster::Booster(BinnedMatrix train, std::vector<double> train_labels, BinnedMatrix validation,
                 std::vector<double> validation_labels, const TrainConfig& config,
                 std::vector<std::uint8_t> inner_counts)
    : train_(std::move(train)),
      y_(std::move(train_labels)),
      validation_(std::move(validation)),
      y_validation_(std::move(validation_labels)),
      config_(config),
      inner_counts_(std::move(inner_counts)) {
  const std::size_t n = train_.rows;
  if (n == 0) throw DataError("outer bag has no training rows");
  if (!inner_counts_.empty()) {
    if (inner_counts_.size() % n != 0) throw ConfigError("inner-bag counts do not match the row count");
    inner_bags_ = static_cast<int>(inner_counts_.size() / n);
  }
  double positives = 0.0;
  for (double y : y_) positives += y;
  const double prevalence = positives / static_cast<double>(n);
  if (positives == 0.0 || positives == static_cast<double>(n)) {
    throw DataError("outer bag training rows hold a single class");
  }
  state_.intercept = logit(prevalence);
  for (const auto& def : train_.bins) state_.tables.emplace_back(def.bin_count(), 0.0);
  state_.logits.assign(n, state_.intercept);
  state_.validation_logits.assign(validation_.rows, state_.intercept);
  state_.residuals.resize(n);
  state_.hessians.resize(n);
  refresh_residuals();
}

void Booster::refresh_residuals() {
  const std::size_t n = train_.rows;
  for (std::size_t r = 0; r < n; ++r) {
    const double p = sigmoid(state_.logits[r]);
    state_.residuals[r] = y_[r] - p;
    state_.hessians[r] = p * (1.0 - p);
  }
}

double Booster::logit_of(const BinnedMatrix& m, std::size_t row) const {
  double z = state_.intercept;
  for (std::size_t f = 0; f < m.features(); ++f) z += state_.tables[f][m.indices[f][row]];
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto& g = pairs_[k];
    const auto cell = g.maps[0][m.indices[g.features[0]][row]] * g.shape[1] +
                      g.maps[1][m.indices[g.features[1]][row]];
    z += state_.pair_tables[k][cell];
  }
  return z;
}

void Booster::recompute_logits() {
  for (std::size_t r = 0; r < train_.rows; ++r) state_.logits[r] = logit_of(train_, r);
  for (std::size_t r = 0; r < validation_.rows; ++r) state_.validation_logits[r] = logit_of(validation_, r);
  refresh_residuals();
}

double Booster::additivity_error() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < train_.rows; ++r) {
    worst = std::max(worst, std::abs(state_.logits[r] - logit_of(train_, r)));
  }
  return worst;
}

double Booster::train_loss() const { return mean_loss(state_.logits, y_); }

double Booster::validation_loss() const {
  if (validation_.rows == 0) return train_loss();
  return mean_loss(state_.validation_logits, y_validation_);
}

namespace {

// Accumulates per-inner-bag gradient and hessian sums into [slot][bag]
// arrays, `slot_of(row)` giving the bin or grid cell of each row.
template <class SlotOf>
void accumulate(std::size_t rows, int bags, std::span<const std::uint8_t> counts, std::span<const double> g,
                std::span<const double> h, SlotOf slot_of, std::vector<double>& hg, std::vector<double>& hh,
                std::vector<double>& hn) {
  const std::size_t B = static_cast<std::size_t>(bags);
  if (counts.empty()) {
    for (std::size_t r = 0; r < rows; ++r) {
      const auto s = slot_of(r);
      hg[s] += g[r];
      hh[s] += h[r];
      hn[s] += 1.0;
    }
    return;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t s = slot_of(r) * B;
    const double gr = g[r];
    const double hr = h[r];
    const std::uint8_t* c = counts.data() + r * B;
    double* pg = hg.data() + s;
    double* ph = hh.data() + s;
    double* pn = hn.data() + s;
    for (std::size_t b = 0; b < B; ++b) {
      const double w = c[b];
      pg[b] += w * gr;
      ph[b] += w * hr;
      pn[b] += w;
    }
  }
}

std::vector<BinStats> extract(const std::vector<double>& hg, const std::vector<double>& hh,
                              const std::vector<double>& hn, std::size_t slots, int bags, int bag) {
  std::vector<BinStats> out(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    const std::size_t i = s * static_cast<std::size_t>(bags) + static_cast<std::size_t>(bag);
    out[s] = {hg[i], hh[i], hn[i]};
  }
  return out;
}

}  // namespace

void Booster::update_feature(std::size_t f) {
  const auto& def = train_.bins[f];
  const std::size_t nb = def.bin_count();
  const std::size_t slots = nb * static_cast<std::size_t>(inner_bags_);
  std::vector<double> hg(slots, 0.0), hh(slots, 0.0), hn(slots, 0.0);
  const auto& idx = train_.indices[f];
  accumulate(train_.rows, inner_bags_, inner_counts_, state_.residuals, state_.hessians,
             [&](std::size_t r) { return static_cast<std::size_t>(idx[r]); }, hg, hh, hn);

  std::vector<double> delta(nb, 0.0);
  const double scale = config_.learning_rate / inner_bags_;
  for (int b = 0; b < inner_bags_; ++b) {
    const auto hist = extract(hg, hh, hn, nb, inner_bags_, b);
    const auto update = fit_leaf_update(hist, config_.min_samples_leaf, config_.max_leaves, def.categorical);
    for (std::size_t k = 0; k < nb; ++k) delta[k] += scale * update.values[k];
  }

  auto& table = state_.tables[f];
  for (std::size_t k = 0; k < nb; ++k) table[k] += delta[k];
  for (std::size_t r = 0; r < train_.rows; ++r) state_.logits[r] += delta[idx[r]];
  const auto& vidx = validation_.indices[f];
  for (std::size_t r = 0; r < validation_.rows; ++r) state_.validation_logits[r] += delta[vidx[r]];
  refresh_residuals();
}

void Booster::update_pair(std::size_t k) {
  const auto& g = pairs_[k];
  const std::size_t cells = g.cells();
  const std::size_t slots = cells * static_cast<std::size_t>(inner_bags_);
  std::vector<double> hg(slots, 0.0), hh(slots, 0.0), hn(slots, 0.0);
  const auto& i0 = train_.indices[g.features[0]];
  const auto& i1 = train_.indices[g.features[1]];
  auto cell_of = [&](std::size_t r) -> std::size_t { return g.maps[0][i0[r]] * g.shape[1] + g.maps[1][i1[r]]; };
  accumulate(train_.rows, inner_bags_, inner_counts_, state_.residuals, state_.hessians, cell_of, hg, hh, hn);

  std::vector<double> delta(cells, 0.0);
  const double scale = config_.learning_rate / inner_bags_;
  for (int b = 0; b < inner_bags_; ++b) {
    const auto grid = extract(hg, hh, hn, cells, inner_bags_, b);
    const auto values = fit_pair_update(grid, g.shape[0], g.shape[1], config_.min_samples_leaf);
    for (std::size_t c = 0; c < cells; ++c) delta[c] += scale * values[c];
  }

  auto& table = state_.pair_tables[k];
  for (std::size_t c = 0; c < cells; ++c) table[c] += delta[c];
  for (std::size_t r = 0; r < train_.rows; ++r) state_.logits[r] += delta[cell_of(r)];
  const auto& v0 = validation_.indices[g.features[0]];
  const auto& v1 = validation_.indices[g.features[1]];
  for (std::size_t r = 0; r < validation_.rows; ++r) {
    state_.validation_logits[r] += delta[g.maps[0][v0[r]] * g.shape[1] + g.maps[1][v1[r]]];
  }
  refresh_residuals();
}

double Booster::boost_epoch() {
  for (std::size_t f = 0; f < train_.features(); ++f) update_feature(f);
  ++state_.epoch;
  return validation_loss();
}

double Booster::boost_pair_epoch() {
  for (std::size_t k = 0; k < pairs_.size(); ++k) update_pair(k);
  ++state_.epoch;
  return validation_loss();
}

int Booster::fit_main_effects() {
  EarlyStopper stopper(config_.early_stop_patience, config_.early_stop_tolerance);
  state_.epoch = 0;
  state_.best_tables = state_.tables;
  int epoch = 0;
  while (epoch < config_.max_epochs) {
    const double loss = boost_epoch();
    ++epoch;
    if (stopper.observe(epoch, loss)) state_.best_tables = state_.tables;
    if (config_.verbosity >= 2 && epoch % 50 == 0) {
      std::cerr << label_ << " main epoch " << epoch << " train_loss " << train_loss() << " validation_loss "
                << loss << "\n";
    }
    if (stopper.should_stop(epoch)) break;
  }
  state_.tables = state_.best_tables;
  state_.best_validation_loss = stopper.best_loss();
  recompute_logits();
  if (config_.verbosity >= 1) {
    std::cerr << label_ << " main effects: " << epoch << " epochs, best epoch " << stopper.best_epoch()
              << ", validation_loss " << stopper.best_loss() << "\n";
  }
  return epoch;
}

int Booster::fit_pairs(std::vector<PairGrid> pairs) {
  pairs_ = std::move(pairs);
  state_.pair_tables.clear();
  for (const auto& g : pairs_) state_.pair_tables.emplace_back(g.cells(), 0.0);
  if (pairs_.empty()) return 0;

  EarlyStopper stopper(config_.early_stop_patience, config_.early_stop_tolerance);
  stopper.observe(0, validation_loss());
  state_.best_pair_tables = state_.pair_tables;
  int epoch = 0;
  while (epoch < config_.max_epochs) {
    const double loss = boost_pair_epoch();
    ++epoch;
    if (stopper.observe(epoch, loss)) state_.best_pair_tables = state_.pair_tables;
    if (config_.verbosity >= 2 && epoch % 50 == 0) {
      std::cerr << label_ << " pair epoch " << epoch << " train_loss " << train_loss() << " validation_loss "
                << loss << "\n";
    }
    if (stopper.should_stop(epoch)) break;
  }
  state_.pair_tables = state_.best_pair_tables;
  state_.best_validation_loss = stopper.best_loss();
  recompute_logits();
  if (config_.verbosity >= 1) {
    std::cerr << label_ << " pairs: " << epoch << " epochs, best epoch " << stopper.best_epoch()
              << ", validation_loss " << stopper.best_loss() << "\n";
  }
  return epoch;
}

std::vector<PairCandidate> Booster::score_pairs(const std::vector<PairGrid>& grids) const {
  return detect_interactions(train_, state_.residuals, grids, static_cast<int>(grids.size()),
                             config_.min_samples_leaf);
}

}  // namespace ebmkit
