#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ebmkit/error.hpp"
#include "ebmkit/numeric.hpp"
#include "ebmkit/rng.hpp"
#include "ebmkit/synth.hpp"
#include "ebmkit/train.hpp"

using namespace ebmkit;

namespace {

BinDefinition ordered_bins(std::size_t value_bins, std::string name = "x") {
  BinDefinition d;
  d.feature = std::move(name);
  for (std::size_t k = 1; k < value_bins; ++k) d.cuts.push_back(static_cast<double>(k));
  d.min_value = 0;
  d.max_value = static_cast<double>(value_bins);
  return d;
}

BinnedMatrix matrix(std::vector<BinDefinition> defs, std::vector<std::vector<BinIndex>> idx) {
  BinnedMatrix m;
  m.rows = idx.front().size();
  m.bins = std::move(defs);
  m.indices = std::move(idx);
  return m;
}

std::vector<BinStats> histogram(std::span<const double> r, std::span<const BinIndex> bins, std::size_t nb) {
  std::vector<BinStats> h(nb);
  for (std::size_t i = 0; i < r.size(); ++i) {
    h[bins[i]].gradient += r[i];
    h[bins[i]].hessian += 0.25;
    h[bins[i]].count += 1;
  }
  return h;
}

// Random binned data with an additive signal on three features.
struct Toy {
  BinnedMatrix m;
  std::vector<double> y;
};

Toy toy(std::size_t n, std::uint64_t seed, bool categorical_third = true) {
  Rng rng(seed);
  std::vector<BinDefinition> defs = {ordered_bins(12, "a"), ordered_bins(7, "b")};
  BinDefinition c;
  c.feature = "c";
  c.categorical = categorical_third;
  if (categorical_third) {
    c.categories = {"Missing", "p", "q", "r", "s"};
  } else {
    c = ordered_bins(5, "c");
  }
  defs.push_back(c);
  std::vector<std::vector<BinIndex>> idx(3, std::vector<BinIndex>(n));
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    idx[0][r] = static_cast<BinIndex>(rng.below(12));
    idx[1][r] = static_cast<BinIndex>(rng.below(7));
    idx[2][r] = static_cast<BinIndex>(rng.below(5));
    const double z = -1.0 + 0.25 * (static_cast<double>(idx[0][r]) - 6.0) + (idx[1][r] >= 4 ? 0.8 : -0.3) +
                     (idx[2][r] == 2 ? 1.0 : 0.0);
    y[r] = rng.bernoulli(sigmoid(z)) ? 1.0 : 0.0;
  }
  return {matrix(std::move(defs), std::move(idx)), std::move(y)};
}

double row_loss(double z, double y) {
  // log(1 + e^z) - y z
  return (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y * z;
}

// --- independent plain cyclic boosting -----------------------------------

// Greedy best-first segmentation by brute force over every (segment, cut).
std::vector<double> reference_leaf(const std::vector<double>& g, const std::vector<double>& h,
                                   const std::vector<double>& n, int msl, int max_leaves, bool categorical) {
  const std::size_t nb = g.size();
  auto sum = [&](const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    double s = 0;
    for (std::size_t k = lo; k < hi; ++k) s += v[k];
    return s;
  };
  auto score = [&](std::size_t lo, std::size_t hi) {
    const double hh = sum(h, lo, hi);
    return hh > 0 ? sum(g, lo, hi) * sum(g, lo, hi) / hh : 0.0;
  };
  std::vector<double> out(nb, 0.0);
  if (categorical) {
    // the categorical fixtures used here have every category above msl
    for (std::size_t k = 0; k < nb; ++k) out[k] = h[k] > 0 ? g[k] / h[k] : 0.0;
    return out;
  }
  std::vector<std::pair<std::size_t, std::size_t>> segs{{0, nb}};
  while (static_cast<int>(segs.size()) < max_leaves) {
    double best = 0;
    std::size_t bs = 0, bc = 0;
    bool found = false;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto [lo, hi] = segs[s];
      const double parent = score(lo, hi);
      for (std::size_t c = lo + 1; c < hi; ++c) {
        if (sum(n, lo, c) < msl || sum(n, c, hi) < msl) continue;
        const double gain = score(lo, c) + score(c, hi) - parent;
        if (gain > 1e-10 * std::abs(parent) + 1e-14 && (!found || gain > best)) {
          best = gain;
          bs = s;
          bc = c;
          found = true;
        }
      }
    }
    if (!found) break;
    const auto old = segs[bs];
    segs[bs] = {old.first, bc};
    segs.insert(segs.begin() + static_cast<long>(bs) + 1, {bc, old.second});
  }
  for (const auto& [lo, hi] : segs) {
    const double hh = sum(h, lo, hi);
    for (std::size_t k = lo; k < hi; ++k) out[k] = hh > 0 ? sum(g, lo, hi) / hh : 0.0;
  }
  return out;
}

struct ReferenceFit {
  double intercept = 0;
  std::vector<std::vector<double>> tables;
};

ReferenceFit reference_boost(const BinnedMatrix& m, const std::vector<double>& y, const std::vector<std::size_t>& tr,
                             const std::vector<std::size_t>& va, const TrainConfig& cfg) {
  ReferenceFit fit;
  double pos = 0;
  for (auto r : tr) pos += y[r];
  fit.intercept = std::log(pos / (static_cast<double>(tr.size()) - pos));
  for (const auto& d : m.bins) fit.tables.emplace_back(d.bin_count(), 0.0);
  auto logit_of = [&](std::size_t r) {
    double z = fit.intercept;
    for (std::size_t f = 0; f < m.features(); ++f) z += fit.tables[f][m.indices[f][r]];
    return z;
  };
  auto best = fit.tables;
  double best_loss = INFINITY;
  int best_epoch = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t f = 0; f < m.features(); ++f) {
      const std::size_t nb = m.bins[f].bin_count();
      std::vector<double> g(nb, 0), h(nb, 0), n(nb, 0);
      for (auto r : tr) {
        const double p = 1.0 / (1.0 + std::exp(-logit_of(r)));
        const auto b = m.indices[f][r];
        g[b] += y[r] - p;
        h[b] += p * (1 - p);
        n[b] += 1;
      }
      const auto v = reference_leaf(g, h, n, cfg.min_samples_leaf, cfg.max_leaves, m.bins[f].categorical);
      for (std::size_t k = 0; k < nb; ++k) fit.tables[f][k] += cfg.learning_rate * v[k];
    }
    double loss = 0;
    for (auto r : va) loss += row_loss(logit_of(r), y[r]);
    loss /= static_cast<double>(va.size());
    if (loss < best_loss - cfg.early_stop_tolerance) {
      best_loss = loss;
      best_epoch = epoch;
      best = fit.tables;
    }
    if (epoch - best_epoch >= cfg.early_stop_patience) break;
  }
  fit.tables = best;
  // center on full-training-set bin frequencies
  for (std::size_t f = 0; f < m.features(); ++f) {
    std::vector<double> counts(m.bins[f].bin_count(), 0);
    for (std::size_t r = 0; r < m.rows; ++r) counts[m.indices[f][r]] += 1;
    double w = 0, s = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      w += counts[k];
      s += counts[k] * fit.tables[f][k];
    }
    for (std::size_t k = 0; k < counts.size(); ++k) fit.tables[f][k] = counts[k] > 0 ? fit.tables[f][k] - s / w : 0;
    fit.intercept += s / w;
  }
  return fit;
}

}  // namespace

TEST_SUITE("leaf updates") {
  TEST_CASE("hand-computed Newton step") {
    const std::vector<double> r = {0.5, 0.5, -0.5, -0.5};  // y = [1,1,0,0], p = 0.5
    const std::vector<double> h(4, 0.25);
    const std::vector<BinIndex> bins = {0, 0, 1, 1};
    const auto u = fit_leaf_update(r, h, bins, 2, 2, 3);
    CHECK(u.values[0] == doctest::Approx(2.0));
    CHECK(u.values[1] == doctest::Approx(-2.0));
  }

  TEST_CASE("residuals +1 +1 -1 -1 over four bins split between bins 1 and 2") {
    const std::vector<double> r = {1, 1, -1, -1};
    const std::vector<BinIndex> bins = {0, 1, 2, 3};
    const auto u = fit_leaf_update(histogram(r, bins, 4), 2, 2);
    REQUIRE(u.splits.size() == 1);
    CHECK(u.splits[0] == 2);
    CHECK(u.leaves == 2);
  }

  TEST_CASE("equal residuals give a single leaf") {
    const std::vector<double> r(40, 0.3);
    std::vector<BinIndex> bins(40);
    for (std::size_t i = 0; i < 40; ++i) bins[i] = static_cast<BinIndex>(i % 8);
    const auto u = fit_leaf_update(histogram(r, bins, 8), 2, 3);
    CHECK(u.leaves == 1);
    CHECK(u.splits.empty());
  }

  TEST_CASE("30 rows with min_samples_leaf 25 cannot split") {
    std::vector<double> r(30);
    std::vector<BinIndex> bins(30);
    for (std::size_t i = 0; i < 30; ++i) {
      r[i] = i < 15 ? 1.0 : -1.0;
      bins[i] = static_cast<BinIndex>(i);
    }
    CHECK(fit_leaf_update(histogram(r, bins, 30), 25, 3).leaves == 1);
    // fewer rows than min_samples_leaf in total: still one leaf with a value
    const auto u = fit_leaf_update(histogram(std::vector<double>(5, 0.5), std::vector<BinIndex>(5, 0), 3), 25, 3);
    CHECK(u.leaves == 1);
    CHECK(u.values[0] == doctest::Approx(2.0));
  }

  TEST_CASE("every leaf honours min_samples_leaf (random property)") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t nb = 2 + rng.below(40);
      std::vector<BinStats> h(nb);
      for (auto& s : h) {
        s.count = static_cast<double>(rng.below(30));
        s.hessian = s.count * 0.2;
        s.gradient = (rng.uniform() - 0.5) * s.count;
      }
      const int msl = 1 + static_cast<int>(rng.below(40));
      const int max_leaves = 2 + static_cast<int>(rng.below(3));
      const auto u = fit_leaf_update(h, msl, max_leaves);
      CHECK(u.leaves <= max_leaves);
      if (u.leaves == 1) continue;
      std::vector<std::size_t> edges = {0};
      edges.insert(edges.end(), u.splits.begin(), u.splits.end());
      edges.push_back(nb);
      for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        double c = 0;
        for (std::size_t b = edges[s]; b < edges[s + 1]; ++b) c += h[b].count;
        CHECK(c >= msl);
      }
    }
  }

  TEST_CASE("categorical: singleton leaves, small categories pooled") {
    std::vector<BinStats> h = {{10, 20, 40}, {-5, 10, 30}, {1, 1, 5}, {2, 1, 6}, {-4, 8, 26}};
    auto u = fit_leaf_update(h, 25, 3, true);
    CHECK(u.values[0] == doctest::Approx(0.5));
    CHECK(u.values[1] == doctest::Approx(-0.5));
    // the 11-row pool is too small alone and joins the smallest qualifying category
    CHECK(u.values[2] == doctest::Approx((-4.0 + 3.0) / 10.0));
    CHECK(u.values[3] == u.values[2]);
    CHECK(u.values[4] == u.values[2]);
    CHECK(u.leaves == 3);
    // nothing qualifies: one leaf
    u = fit_leaf_update(h, 100, 3, true);
    CHECK(u.leaves == 1);
    CHECK(u.values[0] == doctest::Approx(4.0 / 40.0));
  }

  TEST_CASE("pair update: a checkerboard needs two levels of splits") {
    // 4 x 4 grid; the sign flips across row 2 and across column 2
    std::vector<BinStats> grid(16);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 4; ++c) {
        const double s = (r < 2) == (c < 2) ? 1.0 : -1.0;
        grid[r * 4 + c] = {s * 10, 10, 40};
      }
    }
    const auto v = fit_pair_update(grid, 4, 4, 25);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[3] == doctest::Approx(-1.0));
    CHECK(v[12] == doctest::Approx(-1.0));
    CHECK(v[15] == doctest::Approx(1.0));
  }
}

TEST_SUITE("boosting") {
  TEST_CASE("one epoch reproduces the hand-computed step, lr = 0 changes nothing") {
    const auto m = matrix({ordered_bins(2)}, {{0, 0, 1, 1}});
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.min_samples_leaf = 2;
    Booster b(m, {1, 1, 0, 0}, BinnedMatrix{0, m.bins, {{}}}, {}, cfg);
    b.boost_epoch();
    CHECK(b.state().tables[0][0] == doctest::Approx(0.2));
    CHECK(b.state().tables[0][1] == doctest::Approx(-0.2));

    cfg.learning_rate = 0.0;
    Booster z(m, {1, 1, 0, 0}, BinnedMatrix{0, m.bins, {{}}}, {}, cfg);
    const auto before = z.state().logits;
    z.boost_epoch();
    CHECK(z.state().logits == before);
    CHECK(z.state().tables[0] == std::vector<double>(3, 0.0));
  }

  TEST_CASE("constant feature: uniform shift absorbed by centering") {
    const auto m = matrix({ordered_bins(1)}, {{0, 0, 0, 0, 0}});
    TrainConfig cfg;
    cfg.min_samples_leaf = 1;
    Booster b(m, {1, 0, 0, 0, 1}, BinnedMatrix{0, m.bins, {{}}}, {}, cfg);
    b.boost_epoch();
    EbmModel model;
    model.intercept = b.state().intercept;
    model.features.push_back({m.bins[0], b.state().tables[0], {0, 0}, {5, 0}});
    center_shapes(model);
    CHECK(model.features[0].scores[0] == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("early stopping arithmetic") {
    EarlyStopper s(50);
    int stopped = 0;
    for (int e = 1; e <= 1000; ++e) {
      s.observe(e, e <= 100 ? 1.0 / e : 0.01);  // plateaus after epoch 100
      if (s.should_stop(e)) {
        stopped = e;
        break;
      }
    }
    CHECK(stopped == 150);
    CHECK(s.best_epoch() == 100);

    EarlyStopper improving(50);
    for (int e = 1; e <= 300; ++e) {
      improving.observe(e, 1.0 / e);
      CHECK_FALSE(improving.should_stop(e));
    }
  }

  TEST_CASE("max_epochs bounds the run") {
    auto t = toy(400, 1);
    TrainConfig cfg = TrainConfig::fast();
    cfg.outer_bags = 1;
    cfg.max_epochs = 1;
    cfg.interactions = 0;
    const auto fit = fit_ebm_detailed(t.m, t.y, cfg);
    CHECK(fit.main_epochs[0] == 1);
  }

  TEST_CASE("stored logits stay additive through both stages") {
    auto t = toy(3000, 2);
    TrainConfig cfg;
    cfg.inner_bags = 4;
    cfg.min_samples_leaf = 10;
    std::vector<std::uint8_t> counts(t.m.rows * 4);
    Rng rng(3);
    for (auto& c : counts) c = static_cast<std::uint8_t>(rng.below(3));
    Booster b(t.m, t.y, t.m.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}),
              std::vector<double>(t.y.begin(), t.y.begin() + 10), cfg, counts);
    for (int e = 0; e < 30; ++e) {
      b.boost_epoch();
      REQUIRE(b.additivity_error() <= 1e-9);
    }
    const double before = b.validation_loss();
    const auto grids = all_pair_grids({std::vector<double>(13, 1.0), std::vector<double>(8, 1.0), std::vector<double>(5, 1.0)}, 32);
    b.fit_pairs({grids[0], grids[2]});
    CHECK(b.additivity_error() <= 1e-9);
    CHECK(b.validation_loss() <= before);
  }

  TEST_CASE("zero pairs leave the logits unchanged") {
    auto t = toy(500, 4);
    TrainConfig cfg;
    cfg.min_samples_leaf = 5;
    Booster b(t.m, t.y, BinnedMatrix{0, t.m.bins, {{}, {}, {}}}, {}, cfg);
    for (int e = 0; e < 5; ++e) b.boost_epoch();
    const auto logits = b.state().logits;
    CHECK(b.fit_pairs({}) == 0);
    CHECK(b.state().logits == logits);
  }

  TEST_CASE("outer=1, inner=1 equals plain cyclic boosting") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      auto t = toy(480, seed);
      TrainConfig cfg;
      cfg.outer_bags = 1;
      cfg.inner_bags = 1;
      cfg.interactions = 0;
      cfg.min_samples_leaf = 10;
      cfg.learning_rate = 0.05;
      cfg.max_epochs = 300;
      cfg.early_stop_patience = 20;
      cfg.seed = seed;
      const auto model = fit_ebm(t.m, t.y, cfg);
      std::vector<std::size_t> tr, va;
      outer_bag_split(t.y, cfg.validation_fraction, cfg.seed, tr, va);
      const auto ref = reference_boost(t.m, t.y, tr, va, cfg);
      CHECK(model.intercept == doctest::Approx(ref.intercept).epsilon(1e-9));
      for (std::size_t f = 0; f < 3; ++f) {
        for (std::size_t k = 0; k < ref.tables[f].size(); ++k) {
          CHECK(std::abs(model.features[f].scores[k] - ref.tables[f][k]) <= 1e-9);
        }
        for (double s : model.features[f].stds) CHECK(s == 0.0);
      }
    }
  }

  TEST_CASE("training improves on the intercept-only loss") {
    auto t = toy(2000, 21);
    TrainConfig cfg = TrainConfig::fast();
    cfg.min_samples_leaf = 10;
    const auto model = fit_ebm(t.m, t.y, cfg);
    const double prev = mean(t.y);
    double base = 0, fitted = 0;
    const auto z = predict_logit(model, t.m);
    for (std::size_t r = 0; r < t.y.size(); ++r) {
      base += row_loss(logit(prev), t.y[r]);
      fitted += row_loss(z[r], t.y[r]);
    }
    CHECK(fitted < base);
  }

  TEST_CASE("deterministic; single-class labels rejected") {
    auto t = toy(800, 5);
    TrainConfig cfg = TrainConfig::fast();
    cfg.inner_bags = 3;
    cfg.min_samples_leaf = 10;
    CHECK(serialize(fit_ebm(t.m, t.y, cfg)) == serialize(fit_ebm(t.m, t.y, cfg)));
    cfg.threads = 1;
    const auto one = serialize(fit_ebm(t.m, t.y, cfg));
    cfg.threads = 3;
    CHECK(serialize(fit_ebm(t.m, t.y, cfg)) == one);
    CHECK_THROWS_AS(fit_ebm(t.m, std::vector<double>(800, 0.0), cfg), DataError);
  }

  TEST_CASE("pure-noise labels give near-flat shapes") {
    for (double prevalence : {0.02, 0.5}) {
      SynthSpec spec = preset("oracle");
      spec.truth.shapes.clear();
      spec.truth.pair.reset();
      spec.truth.intercept = logit(prevalence);
      spec.error_rate = 0;
      const auto data = generate_synthetic(spec, 50000, 3);
      TrainConfig cfg;
      cfg.interactions = 0;
      const auto model = fit_ebm(data.cohort, cfg, spec.outcome);
      for (const auto& f : model.features) {
        double worst = 0;
        for (std::size_t b = 0; b < f.scores.size(); ++b) {
          if (f.counts[b] > 0) worst = std::max(worst, std::abs(f.scores[b]));
        }
        INFO(f.name(), " prevalence ", prevalence);
        CHECK(worst <= 0.05);
      }
    }
  }

  TEST_CASE("a feature with one bin contributes nothing") {
    auto t = toy(600, 8);
    t.m.bins.push_back(ordered_bins(1, "flat"));
    t.m.indices.emplace_back(600, 0);
    TrainConfig cfg = TrainConfig::fast();
    cfg.min_samples_leaf = 10;
    cfg.interactions = 0;
    const auto model = fit_ebm(t.m, t.y, cfg);
    CHECK(std::abs(model.features[3].scores[0]) <= 1e-12);
  }
}

TEST_SUITE("interactions") {
  TEST_CASE("coarsening keeps at most max_groups equal-mass groups") {
    std::vector<double> counts(256, 1.0);
    counts[255] = 0;  // empty missing bin
    const auto map = coarsen_bins(counts, 32);
    CHECK(*std::max_element(map.begin(), map.end()) < 32);
    CHECK(std::is_sorted(map.begin(), map.end() - 1));
    const auto small = coarsen_bins(std::vector<double>{5, 5, 5}, 32);
    CHECK(small == std::vector<BinIndex>{0, 1, 2});
  }

  TEST_CASE("three features give three candidates, sorted with (i, j) tie-break") {
    auto t = toy(600, 9);
    std::vector<std::vector<double>> counts;
    for (std::size_t f = 0; f < 3; ++f) {
      counts.emplace_back(t.m.bins[f].bin_count(), 0.0);
      for (auto b : t.m.indices[f]) counts[f][b] += 1;
    }
    const auto grids = all_pair_grids(counts, 32);
    CHECK(grids.size() == 3);
    std::vector<double> resid(600);
    for (std::size_t r = 0; r < 600; ++r) resid[r] = t.y[r] - 0.3;
    const auto cands = detect_interactions(t.m, resid, grids, 20, 5);
    CHECK(cands.size() == 3);
    for (const auto& c : cands) {
      CHECK(c.first < c.second);
      CHECK(c.score >= 0.0);
    }
    CHECK(cands[0].score >= cands[1].score);
    const auto tied = top_pairs({{1, 2, 1.0}, {0, 2, 1.0}, {0, 1, 0.5}, {0, 1, 2.0}}, 3);
    CHECK(tied[0].first == 0);
    CHECK(tied[0].second == 1);
    CHECK(tied[1].first == 0);
    CHECK(tied[1].second == 2);
    CHECK(tied[2].first == 1);
  }

  TEST_CASE("an injected checkerboard ranks first") {
    Rng rng(31);
    const std::size_t n = 4000;
    std::vector<std::vector<BinIndex>> idx(4, std::vector<BinIndex>(n));
    std::vector<double> resid(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (auto& col : idx) col[r] = static_cast<BinIndex>(rng.below(10));
      const double s = (idx[1][r] < 5) == (idx[3][r] < 5) ? 0.3 : -0.3;
      resid[r] = s + 0.5 * rng.normal();
    }
    const auto m = matrix({ordered_bins(10, "a"), ordered_bins(10, "b"), ordered_bins(10, "c"), ordered_bins(10, "d")},
                          idx);
    std::vector<std::vector<double>> counts(4, std::vector<double>(11, 0.0));
    for (std::size_t f = 0; f < 4; ++f) {
      for (auto b : idx[f]) counts[f][b] += 1;
    }
    const auto cands = detect_interactions(m, resid, all_pair_grids(counts, 32), 20, 25);
    CHECK(cands[0].first == 1);
    CHECK(cands[0].second == 3);
    CHECK(cands[0].score > 10 * cands[1].score);
  }
}

TEST_SUITE("centering and aggregation") {
  EbmModel one_feature(std::vector<double> scores, std::vector<double> counts) {
    EbmModel m;
    m.features.push_back({ordered_bins(scores.size() - 1), scores, std::vector<double>(scores.size(), 0.0), counts});
    return m;
  }

  TEST_CASE("constant table moves into the intercept") {
    auto m = one_feature({1, 1, 1}, {10, 20, 30});
    center_shapes(m);
    CHECK(m.features[0].scores == std::vector<double>{0, 0, 0});
    CHECK(m.intercept == 1.0);
  }

  TEST_CASE("already-centered table is unchanged; empty bins become zero") {
    auto m = one_feature({2, -2, 7}, {50, 50, 0});
    center_shapes(m);
    CHECK(m.features[0].scores == std::vector<double>{2, -2, 0});
    CHECK(m.intercept == 0.0);
  }

  TEST_CASE("centering preserves predictions on populated bins") {
    auto t = toy(3000, 14);
    TrainConfig cfg = TrainConfig::fast();
    cfg.min_samples_leaf = 10;
    auto fit = fit_ebm_detailed(t.m, t.y, cfg);
    EbmModel m = fit.model;
    Rng rng(2);
    for (auto& f : m.features) {
      for (auto& s : f.scores) s = rng.normal();
    }
    for (auto& p : m.pairs) {
      for (auto& s : p.scores) s = rng.normal();
    }
    // zero out scores on empty bins first, since centering does so too
    for (auto& f : m.features) {
      for (std::size_t b = 0; b < f.scores.size(); ++b) {
        if (f.counts[b] == 0) f.scores[b] = 0;
      }
    }
    for (auto& p : m.pairs) {
      for (std::size_t c = 0; c < p.scores.size(); ++c) {
        if (p.counts[c] == 0) p.scores[c] = 0;
      }
    }
    const auto before = predict_logit(m, t.m);
    center_shapes(m);
    const auto after = predict_logit(m, t.m);
    for (std::size_t r = 0; r < before.size(); ++r) CHECK(std::abs(before[r] - after[r]) <= 1e-12);
    for (const auto& f : m.features) {
      double s = 0, w = 0;
      for (std::size_t b = 0; b < f.scores.size(); ++b) {
        s += f.counts[b] * f.scores[b];
        w += f.counts[b];
      }
      CHECK(std::abs(s / w) <= 1e-9);
    }
  }

  TEST_CASE("two bags: mean and sample std") {
    auto a = one_feature({0.1, 0.0}, {1, 1});
    auto b = one_feature({0.3, 0.0}, {1, 1});
    a.intercept = -1;
    b.intercept = -2;
    const auto m = outer_bag_aggregate({a, b});
    CHECK(m.features[0].scores[0] == doctest::Approx(0.2));
    CHECK(m.features[0].stds[0] == doctest::Approx(0.1414213562).epsilon(1e-9));
    CHECK(m.intercept == -1.5);
    const auto same = outer_bag_aggregate({a, a, a});
    CHECK(same.features[0].stds[0] <= 1e-15);
    CHECK(same.features[0].stds[1] == 0.0);
  }

  TEST_CASE("mismatched bins are rejected") {
    auto a = one_feature({0.1, 0.0}, {1, 1});
    auto b = one_feature({0.1, 0.0, 0.0}, {1, 1, 1});
    CHECK_THROWS_AS(outer_bag_aggregate({a, b}), ConfigError);
  }

  TEST_CASE("outer_bags = 1 gives zero error bars") {
    auto t = toy(600, 15);
    TrainConfig cfg = TrainConfig::fast();
    cfg.outer_bags = 1;
    cfg.min_samples_leaf = 10;
    const auto m = fit_ebm(t.m, t.y, cfg);
    for (const auto& f : m.features) {
      for (double s : f.stds) CHECK(s == 0.0);
    }
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults and validation") {
    const TrainConfig c;
    CHECK(c.outer_bags == 25);
    CHECK(c.inner_bags == 25);
    CHECK(c.min_samples_leaf == 25);
    CHECK(c.interactions == 20);
    const auto f = TrainConfig::fast();
    CHECK(f.outer_bags == 3);
    CHECK(f.inner_bags == 1);
    TrainConfig bad;
    bad.learning_rate = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TrainConfig{};
    bad.validation_fraction = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("json merge and unknown keys") {
    const auto c = TrainConfig::from_json({{"outer_bags", 7}}, TrainConfig::fast());
    CHECK(c.outer_bags == 7);
    CHECK(c.inner_bags == 1);
    CHECK_THROWS_AS(TrainConfig::from_json({{"outer_bag", 7}}), ConfigError);
    CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
  }
}
