#include "ebmkit/split.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "ebmkit/error.hpp"
#include "ebmkit/rng.hpp"

namespace ebmkit {

namespace {

using Sizes = std::vector<std::pair<std::string, std::size_t>>;

// Candidate subsets are bit vectors over `sizes`, which is sorted by name, so
// comparing the chosen names in index order is the lexicographic set order.
struct Candidate {
  std::vector<bool> in;
  std::size_t count = 0;
};

bool lexicographically_smaller(const Candidate& a, const Candidate& b, const Sizes& sizes) {
  std::vector<std::string> na, nb;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (a.in[i]) na.push_back(sizes[i].first);
    if (b.in[i]) nb.push_back(sizes[i].first);
  }
  return na < nb;
}

bool better(const Candidate& a, const Candidate& b, double target_rows, const Sizes& sizes) {
  const double da = std::abs(static_cast<double>(a.count) - target_rows);
  const double db = std::abs(static_cast<double>(b.count) - target_rows);
  if (da != db) return da < db;
  if (a.count != b.count) return a.count > b.count;
  return lexicographically_smaller(a, b, sizes);
}

void check_inputs(const Sizes& sizes, double target_fraction) {
  if (sizes.size() < 2) {
    throw DataError("hospital split needs at least two hospitals; external validation is impossible");
  }
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
    throw ConfigError("target fraction must lie strictly between 0 and 1");
  }
}

std::set<std::string> names_of(const Candidate& c, const Sizes& sizes) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (c.in[i]) out.insert(sizes[i].first);
  }
  return out;
}

Sizes sorted(Sizes sizes) {
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

std::size_t total_of(const Sizes& sizes) {
  std::size_t t = 0;
  for (const auto& s : sizes) t += s.second;
  return t;
}

bool proper(const Candidate& c) {
  const auto k = std::count(c.in.begin(), c.in.end(), true);
  return k > 0 && static_cast<std::size_t>(k) < c.in.size();
}

}  // namespace

std::set<std::string> choose_hospitals_exhaustive(const Sizes& unsorted, double target_fraction) {
  check_inputs(unsorted, target_fraction);
  const Sizes sizes = sorted(unsorted);
  const std::size_t h = sizes.size();
  if (h > 24) throw ConfigError("exhaustive hospital search is limited to 24 hospitals");
  const double target_rows = target_fraction * static_cast<double>(total_of(sizes));

  Candidate best;
  bool have = false;
  Candidate cur;
  cur.in.assign(h, false);
  const std::uint64_t full = (std::uint64_t{1} << h) - 1;
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    cur.count = 0;
    for (std::size_t i = 0; i < h; ++i) {
      cur.in[i] = (mask >> i) & 1U;
      if (cur.in[i]) cur.count += sizes[i].second;
    }
    if (!have || better(cur, best, target_rows, sizes)) {
      best = cur;
      have = true;
    }
  }
  return names_of(best, sizes);
}

std::set<std::string> choose_hospitals_greedy(const Sizes& unsorted, double target_fraction,
                                              std::uint64_t seed) {
  check_inputs(unsorted, target_fraction);
  const Sizes sizes = sorted(unsorted);
  const std::size_t h = sizes.size();
  const double target_rows = target_fraction * static_cast<double>(total_of(sizes));
  auto gap = [&](std::size_t count) { return std::abs(static_cast<double>(count) - target_rows); };

  Rng rng(seed);
  Candidate best;
  bool have = false;
  constexpr int kRestarts = 64;
  for (int restart = 0; restart < kRestarts; ++restart) {
    std::vector<std::size_t> order(h);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));

    Candidate cur;
    cur.in.assign(h, false);
    for (auto i : order) {
      if (gap(cur.count + sizes[i].second) < gap(cur.count)) {
        cur.in[i] = true;
        cur.count += sizes[i].second;
      }
    }
    // local search: single flips and in/out swaps
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < h && !improved; ++i) {
        Candidate next = cur;
        next.in[i] = !next.in[i];
        next.count = cur.in[i] ? cur.count - sizes[i].second : cur.count + sizes[i].second;
        if (proper(next) && gap(next.count) < gap(cur.count)) {
          cur = std::move(next);
          improved = true;
        }
      }
      for (std::size_t i = 0; i < h && !improved; ++i) {
        if (!cur.in[i]) continue;
        for (std::size_t j = 0; j < h && !improved; ++j) {
          if (cur.in[j]) continue;
          const std::size_t count = cur.count - sizes[i].second + sizes[j].second;
          if (gap(count) < gap(cur.count)) {
            cur.in[i] = false;
            cur.in[j] = true;
            cur.count = count;
            improved = true;
          }
        }
      }
    }
    if (!proper(cur)) continue;
    if (!have || better(cur, best, target_rows, sizes)) {
      best = cur;
      have = true;
    }
  }
  if (!have) {
    best.in.assign(h, false);
    best.in[0] = true;
    best.count = sizes[0].second;
  }
  return names_of(best, sizes);
}

HospitalSplit hospital_split(const Cohort& cohort, double target_fraction, std::uint64_t seed) {
  const auto groups = cohort.groups();
  std::map<std::string, std::size_t> counts;
  for (const auto& g : groups) ++counts[g];
  const Sizes sizes(counts.begin(), counts.end());

  HospitalSplit split;
  split.chosen = sizes.size() <= 20 ? choose_hospitals_exhaustive(sizes, target_fraction)
                                    : choose_hospitals_greedy(sizes, target_fraction, seed);
  for (std::size_t r = 0; r < groups.size(); ++r) {
    (split.chosen.count(groups[r]) ? split.train_rows : split.test_rows).push_back(r);
  }
  split.train_fraction =
      static_cast<double>(split.train_rows.size()) / static_cast<double>(groups.size());
  return split;
}

std::vector<Fold> kfold(std::span<const double> labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  const auto n = labels.size();
  if (n < static_cast<std::size_t>(k)) throw DataError("k-fold needs at least k rows");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) (labels[i] != 0.0 ? pos : neg).push_back(i);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(pos));
  rng.shuffle(std::span<std::size_t>(neg));

  std::vector<int> fold_of(n);
  std::size_t next = 0;
  for (auto i : pos) fold_of[i] = static_cast<int>(next++ % k);
  for (auto i : neg) fold_of[i] = static_cast<int>(next++ % k);

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (int f = 0; f < k; ++f) {
      (fold_of[i] == f ? folds[f].validation : folds[f].train).push_back(i);
    }
  }
  return folds;
}

std::vector<Fold> kfold(const Cohort& cohort, std::string_view outcome, int k, std::uint64_t seed) {
  return kfold(cohort.labels(outcome), k, seed);
}

}  // namespace ebmkit
