#include <algorithm>
#include <array>
#include <memory>
#include <set>
#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "ebmkit/error.hpp"
#include "ebmkit/numeric.hpp"
#include "ebmkit/rng.hpp"
#include "ebmkit/train.hpp"

namespace ebmkit {

TrainConfig TrainConfig::fast() {
  TrainConfig c;
  c.outer_bags = 3;
  c.inner_bags = 1;
  return c;
}

void TrainConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be at least 1");
  };
  positive(outer_bags, "outer_bags");
  positive(inner_bags, "inner_bags");
  positive(min_samples_leaf, "min_samples_leaf");
  positive(max_leaves, "max_leaves");
  positive(max_epochs, "max_epochs");
  positive(early_stop_patience, "early_stop_patience");
  if (interactions < 0) throw ConfigError("interactions must be non-negative");
  if (inner_bags > 255) throw ConfigError("inner_bags is limited to 255");
  if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must lie in [0, 1]");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    throw ConfigError("validation_fraction must lie in (0, 0.5)");
  }
  if (max_bins < 2) throw ConfigError("max_bins must be at least 2");
  if (max_interaction_bins < 2) throw ConfigError("max_interaction_bins must be at least 2");
  if (early_stop_tolerance < 0.0) throw ConfigError("early_stop_tolerance must be non-negative");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"outer_bags", outer_bags},
          {"inner_bags", inner_bags},
          {"min_samples_leaf", min_samples_leaf},
          {"interactions", interactions},
          {"learning_rate", learning_rate},
          {"max_leaves", max_leaves},
          {"max_epochs", max_epochs},
          {"early_stop_patience", early_stop_patience},
          {"early_stop_tolerance", early_stop_tolerance},
          {"validation_fraction", validation_fraction},
          {"max_bins", max_bins},
          {"max_interaction_bins", max_interaction_bins},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  static const std::set<std::string> known = {
      "outer_bags", "inner_bags", "min_samples_leaf", "interactions", "learning_rate",
      "max_leaves", "max_epochs", "early_stop_patience", "early_stop_tolerance", "validation_fraction",
      "max_bins", "max_interaction_bins", "seed", "threads", "verbosity"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw ConfigError("unknown training option '" + key + "'");
    }
    c.outer_bags = j.value("outer_bags", c.outer_bags);
    c.inner_bags = j.value("inner_bags", c.inner_bags);
    c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
    c.interactions = j.value("interactions", c.interactions);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_leaves = j.value("max_leaves", c.max_leaves);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.early_stop_tolerance = j.value("early_stop_tolerance", c.early_stop_tolerance);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.max_bins = j.value("max_bins", c.max_bins);
    c.max_interaction_bins = j.value("max_interaction_bins", c.max_interaction_bins);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.verbosity = j.value("verbosity", c.verbosity);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------

std::vector<PairCandidate> top_pairs(std::vector<PairCandidate> candidates, int k) {
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  if (k >= 0 && candidates.size() > static_cast<std::size_t>(k)) candidates.resize(static_cast<std::size_t>(k));
  return candidates;
}

std::vector<PairCandidate> detect_interactions(const BinnedMatrix& binned, std::span<const double> residuals,
                                               const std::vector<PairGrid>& grids, int k,
                                               int min_samples_leaf) {
  const double msl = min_samples_leaf;
  std::vector<PairCandidate> out;
  out.reserve(grids.size());
  for (const auto& g : grids) {
    const std::size_t R = g.shape[0], C = g.shape[1];
    // prefix sums of residual and count, (R + 1) x (C + 1)
    std::vector<double> ps((R + 1) * (C + 1), 0.0), pn((R + 1) * (C + 1), 0.0);
    const auto& i0 = binned.indices[g.features[0]];
    const auto& i1 = binned.indices[g.features[1]];
    for (std::size_t r = 0; r < binned.rows; ++r) {
      const std::size_t cell = (g.maps[0][i0[r]] + 1) * (C + 1) + g.maps[1][i1[r]] + 1;
      ps[cell] += residuals[r];
      pn[cell] += 1.0;
    }
    for (std::size_t a = 1; a <= R; ++a) {
      for (std::size_t b = 1; b <= C; ++b) {
        const std::size_t i = a * (C + 1) + b;
        ps[i] += ps[i - (C + 1)] + ps[i - 1] - ps[i - (C + 1) - 1];
        pn[i] += pn[i - (C + 1)] + pn[i - 1] - pn[i - (C + 1) - 1];
      }
    }
    auto at = [&](const std::vector<double>& p, std::size_t a, std::size_t b) { return p[a * (C + 1) + b]; };
    const double S = at(ps, R, C), N = at(pn, R, C);
    const double base = N > 0.0 ? S * S / N : 0.0;
    double best = 0.0;
    for (std::size_t a = 1; a < R; ++a) {
      for (std::size_t b = 1; b < C; ++b) {
        // quadrants: (low, low), (low, high), (high, low), (high, high)
        const double s00 = at(ps, a, b), n00 = at(pn, a, b);
        const double s01 = at(ps, a, C) - s00, n01 = at(pn, a, C) - n00;
        const double s10 = at(ps, R, b) - s00, n10 = at(pn, R, b) - n00;
        const double s11 = S - s00 - s01 - s10, n11 = N - n00 - n01 - n10;
        if (n00 < msl || n01 < msl || n10 < msl || n11 < msl) continue;
        const double fit = s00 * s00 / n00 + s01 * s01 / n01 + s10 * s10 / n10 + s11 * s11 / n11;
        best = std::max(best, fit - base);
      }
    }
    out.push_back({g.features[0], g.features[1], best});
  }
  return top_pairs(std::move(out), k);
}

std::vector<BinIndex> coarsen_bins(std::span<const double> counts, int max_groups) {
  const std::size_t nb = counts.size();
  std::vector<BinIndex> map(nb);
  if (nb <= static_cast<std::size_t>(max_groups)) {
    for (std::size_t b = 0; b < nb; ++b) map[b] = static_cast<BinIndex>(b);
    return map;
  }
  double total = 0.0;
  for (double c : counts) total += c;
  double before = 0.0;
  BinIndex last_raw = 0, next = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double mid = before + counts[b] / 2.0;
    auto raw = total > 0.0 ? static_cast<BinIndex>(std::min<double>(max_groups - 1, std::floor(mid * max_groups / total)))
                           : static_cast<BinIndex>(b * max_groups / nb);
    if (b == 0) {
      last_raw = raw;
    } else if (raw != last_raw) {
      ++next;
      last_raw = raw;
    }
    map[b] = next;
    before += counts[b];
  }
  return map;
}

std::vector<PairGrid> all_pair_grids(const std::vector<std::vector<double>>& bin_counts, int max_groups) {
  std::vector<std::vector<BinIndex>> maps;
  for (const auto& c : bin_counts) maps.push_back(coarsen_bins(c, max_groups));
  std::vector<PairGrid> grids;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t j = i + 1; j < maps.size(); ++j) {
      PairGrid g;
      g.features = {i, j};
      g.maps = {maps[i], maps[j]};
      g.shape = {static_cast<std::size_t>(maps[i].back()) + 1, static_cast<std::size_t>(maps[j].back()) + 1};
      grids.push_back(std::move(g));
    }
  }
  return grids;
}

// ---------------------------------------------------------------------------

namespace {

void center_table(std::vector<double>& scores, const std::vector<double>& counts, double& intercept) {
  double s = 0.0, n = 0.0;
  for (std::size_t b = 0; b < scores.size(); ++b) {
    s += counts[b] * scores[b];
    n += counts[b];
  }
  if (n > 0.0) {
    const double m = s / n;
    for (double& v : scores) v -= m;
    intercept += m;
  }
  for (std::size_t b = 0; b < scores.size(); ++b) {
    if (counts[b] <= 0.0) scores[b] = 0.0;
  }
}

}  // namespace

void center_shapes(EbmModel& model) {
  for (auto& f : model.features) center_table(f.scores, f.counts, model.intercept);
  for (auto& p : model.pairs) center_table(p.scores, p.counts, model.intercept);
}

EbmModel outer_bag_aggregate(const std::vector<EbmModel>& bags) {
  if (bags.empty()) throw ConfigError("no outer-bag models to aggregate");
  const auto& first = bags.front();
  for (const auto& m : bags) {
    if (m.features.size() != first.features.size() || m.pairs.size() != first.pairs.size()) {
      throw ConfigError("outer-bag models have different terms");
    }
    for (std::size_t f = 0; f < m.features.size(); ++f) {
      if (!(m.features[f].bins == first.features[f].bins)) {
        throw ConfigError("outer-bag models disagree on bins of '" + first.features[f].name() + "'");
      }
    }
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
      if (m.pairs[k].features != first.pairs[k].features || m.pairs[k].maps != first.pairs[k].maps) {
        throw ConfigError("outer-bag models disagree on interaction grids");
      }
    }
  }

  EbmModel out = first;
  std::vector<double> column(bags.size());
  auto aggregate = [&](auto get, std::vector<double>& mean_out, std::vector<double>& std_out) {
    for (std::size_t b = 0; b < mean_out.size(); ++b) {
      for (std::size_t m = 0; m < bags.size(); ++m) column[m] = get(bags[m])[b];
      mean_out[b] = mean(column);
      std_out[b] = sample_std(column);
    }
  };
  for (std::size_t f = 0; f < out.features.size(); ++f) {
    aggregate([f](const EbmModel& m) -> const std::vector<double>& { return m.features[f].scores; },
              out.features[f].scores, out.features[f].stds);
  }
  for (std::size_t k = 0; k < out.pairs.size(); ++k) {
    aggregate([k](const EbmModel& m) -> const std::vector<double>& { return m.pairs[k].scores; },
              out.pairs[k].scores, out.pairs[k].stds);
  }
  for (std::size_t m = 0; m < bags.size(); ++m) column[m] = bags[m].intercept;
  out.intercept = mean(column);
  return out;
}

void outer_bag_split(std::span<const double> labels, double fraction, std::uint64_t seed,
                     std::vector<std::size_t>& train_rows, std::vector<std::size_t>& validation_rows) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] != 0.0 ? pos : neg).push_back(i);
  Rng rng(seed);
  std::vector<bool> held(labels.size(), false);
  for (auto* cls : {&pos, &neg}) {
    rng.shuffle(std::span<std::size_t>(*cls));
    const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cls->size())));
    for (std::size_t i = 0; i < take; ++i) held[(*cls)[i]] = true;
  }
  train_rows.clear();
  validation_rows.clear();
  for (std::size_t i = 0; i < labels.size(); ++i) (held[i] ? validation_rows : train_rows).push_back(i);
}

namespace {

template <class Fn>
void parallel_for(int n, int threads, Fn fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<double> bin_counts(const BinnedMatrix& binned, std::size_t f) {
  std::vector<double> counts(binned.bins[f].bin_count(), 0.0);
  for (auto b : binned.indices[f]) counts[b] += 1.0;
  return counts;
}

std::vector<double> cell_counts(const BinnedMatrix& binned, const PairGrid& g) {
  std::vector<double> counts(g.cells(), 0.0);
  for (std::size_t r = 0; r < binned.rows; ++r) {
    counts[g.maps[0][binned.indices[g.features[0]][r]] * g.shape[1] +
           g.maps[1][binned.indices[g.features[1]][r]]] += 1.0;
  }
  return counts;
}

}  // namespace

EbmFit fit_ebm_detailed(const BinnedMatrix& binned, std::span<const double> labels, const TrainConfig& config,
                        const std::string& outcome) {
  config.validate();
  if (labels.size() != binned.rows) throw DataError("label count does not match the binned rows");
  double positives = 0.0;
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw DataError("labels must be 0 or 1");
    positives += y;
  }
  if (positives == 0.0 || positives == static_cast<double>(labels.size())) {
    throw DataError("training labels hold a single class");
  }

  const int bags = config.outer_bags;
  std::vector<std::unique_ptr<Booster>> boosters(bags);
  EbmFit fit;
  fit.main_epochs.assign(bags, 0);
  fit.pair_epochs.assign(bags, 0);

  parallel_for(bags, config.threads, [&](int b) {
    const std::uint64_t bag_seed = config.seed + static_cast<std::uint64_t>(b);
    std::vector<std::size_t> train_rows, validation_rows;
    outer_bag_split(labels, config.validation_fraction, bag_seed, train_rows, validation_rows);

    std::vector<double> ytrain, yvalidation;
    for (auto r : train_rows) ytrain.push_back(labels[r]);
    for (auto r : validation_rows) yvalidation.push_back(labels[r]);

    std::vector<std::uint8_t> counts;
    if (config.inner_bags > 1) {
      const std::size_t n = train_rows.size();
      const std::size_t B = static_cast<std::size_t>(config.inner_bags);
      counts.assign(n * B, 0);
      Rng rng(bag_seed ^ 0x9e3779b97f4a7c15ULL);
      for (std::size_t ib = 0; ib < B; ++ib) {
        for (std::size_t draw = 0; draw < n; ++draw) {
          auto& c = counts[rng.below(n) * B + ib];
          if (c < 255) ++c;
        }
      }
    }
    boosters[b] = std::make_unique<Booster>(binned.subset(train_rows), std::move(ytrain),
                                            binned.subset(validation_rows), std::move(yvalidation), config,
                                            std::move(counts));
    boosters[b]->set_label("[bag " + std::to_string(b) + "]");
    fit.main_epochs[b] = boosters[b]->fit_main_effects();
  });

  std::vector<std::vector<double>> counts;
  for (std::size_t f = 0; f < binned.features(); ++f) counts.push_back(bin_counts(binned, f));

  std::vector<PairGrid> selected;
  if (binned.features() >= 2 && config.interactions > 0) {
    const auto grids = all_pair_grids(counts, config.max_interaction_bins);
    std::map<std::pair<std::size_t, std::size_t>, double> summed;
    for (const auto& booster : boosters) {
      for (const auto& c : booster->score_pairs(grids)) summed[{c.first, c.second}] += c.score;
    }
    std::vector<PairCandidate> all;
    for (const auto& [key, score] : summed) all.push_back({key.first, key.second, score});
    fit.pair_ranking = top_pairs(all, -1);
    for (std::size_t k = 0; k < fit.pair_ranking.size() && k < static_cast<std::size_t>(config.interactions); ++k) {
      for (const auto& g : grids) {
        if (g.features[0] == fit.pair_ranking[k].first && g.features[1] == fit.pair_ranking[k].second) {
          selected.push_back(g);
        }
      }
    }
    parallel_for(bags, config.threads, [&](int b) { fit.pair_epochs[b] = boosters[b]->fit_pairs(selected); });
  }

  EbmModel base;
  for (std::size_t f = 0; f < binned.features(); ++f) {
    const auto nb = binned.bins[f].bin_count();
    base.features.push_back({binned.bins[f], std::vector<double>(nb, 0.0), std::vector<double>(nb, 0.0), counts[f]});
  }
  for (const auto& g : selected) {
    PairTerm p;
    p.features = g.features;
    p.maps = g.maps;
    p.shape = g.shape;
    p.scores.assign(g.cells(), 0.0);
    p.stds.assign(g.cells(), 0.0);
    p.counts = cell_counts(binned, g);
    base.pairs.push_back(std::move(p));
  }
  base.meta.outcome = outcome;
  base.meta.seed = config.seed;
  base.meta.train_prevalence = positives / static_cast<double>(labels.size());
  base.meta.train_rows = labels.size();
  base.meta.config = config.to_json();

  for (const auto& booster : boosters) {
    EbmModel m = base;
    const auto& st = booster->state();
    m.intercept = st.intercept;
    for (std::size_t f = 0; f < m.features.size(); ++f) m.features[f].scores = st.tables[f];
    for (std::size_t k = 0; k < m.pairs.size(); ++k) m.pairs[k].scores = st.pair_tables[k];
    center_shapes(m);
    fit.bags.push_back(std::move(m));
  }
  fit.model = outer_bag_aggregate(fit.bags);
  return fit;
}

EbmModel fit_ebm(const BinnedMatrix& binned, std::span<const double> labels, const TrainConfig& config,
                 const std::string& outcome) {
  return fit_ebm_detailed(binned, labels, config, outcome).model;
}

EbmModel fit_ebm(const Cohort& train, const TrainConfig& config, const std::string& outcome) {
  config.validate();
  const auto features = train.schema().features_for(outcome);
  if (features.empty()) throw SchemaError("no usable features for outcome '" + outcome + "'");
  const auto bins = fit_feature_bins(train, features, config.max_bins);
  const auto binned = bin_matrix(train, bins);
  const auto labels = train.labels(outcome);
  return fit_ebm(binned, labels, config, outcome);
}

EbmModel train_ebm_pipeline(const Cohort& cohort, const TrainConfig& config, const std::string& outcome,
                            const ExclusionRuleSet& rules, ExclusionReport* report) {
  auto [kept, excl] = apply_exclusions(cohort, rules);
  if (report) *report = excl;
  auto [imputed, stats] = impute_mean(kept);
  EbmModel model = fit_ebm(imputed, config, outcome);
  model.meta.imputation = std::move(stats);
  return model;
}

}  // namespace ebmkit
