#include "ebmkit/train.hpp"

#include <algorithm>

#include "ebmkit/error.hpp"

namespace ebmkit {

namespace {

constexpr double kRelativeGainTol = 1e-10;
constexpr double kAbsoluteGainTol = 1e-14;

double leaf_score(const BinStats& s) { return s.hessian > 0.0 ? s.gradient * s.gradient / s.hessian : 0.0; }
double leaf_value(const BinStats& s) { return s.hessian > 0.0 ? s.gradient / s.hessian : 0.0; }

BinStats operator-(const BinStats& a, const BinStats& b) {
  return {a.gradient - b.gradient, a.hessian - b.hessian, a.count - b.count};
}
BinStats operator+(const BinStats& a, const BinStats& b) {
  return {a.gradient + b.gradient, a.hessian + b.hessian, a.count + b.count};
}

bool significant(double gain, double parent) {
  return gain > kRelativeGainTol * std::abs(parent) + kAbsoluteGainTol;
}

LeafUpdate fit_categorical(std::span<const BinStats> hist, int min_samples_leaf) {
  const std::size_t nb = hist.size();
  const double msl = min_samples_leaf;
  LeafUpdate out;
  out.values.assign(nb, 0.0);

  std::vector<std::size_t> own;
  std::vector<std::size_t> pooled;
  BinStats total, pool;
  for (std::size_t b = 0; b < nb; ++b) {
    total = total + hist[b];
    if (hist[b].count <= 0.0) continue;
    if (hist[b].count >= msl) {
      own.push_back(b);
    } else {
      pooled.push_back(b);
      pool = pool + hist[b];
    }
  }
  if (own.empty()) {
    // nothing can stand alone: one leaf over everything
    const double v = leaf_value(total);
    for (std::size_t b = 0; b < nb; ++b) {
      if (hist[b].count > 0.0) out.values[b] = v;
    }
    return out;
  }
  // groups: each qualifying category alone, the pool joined to the smallest
  // qualifying category when it is too small to stand alone
  std::vector<std::vector<std::size_t>> groups;
  for (auto b : own) groups.push_back({b});
  if (!pooled.empty()) {
    if (pool.count >= msl) {
      groups.push_back(pooled);
    } else {
      auto smallest = std::min_element(groups.begin(), groups.end(), [&](const auto& a, const auto& b) {
        return hist[a[0]].count < hist[b[0]].count;
      });
      smallest->insert(smallest->end(), pooled.begin(), pooled.end());
    }
  }
  for (const auto& g : groups) {
    BinStats s;
    for (auto b : g) s = s + hist[b];
    const double v = leaf_value(s);
    for (auto b : g) out.values[b] = v;
  }
  out.leaves = static_cast<int>(groups.size());
  return out;
}

}  // namespace

LeafUpdate fit_leaf_update(std::span<const BinStats> hist, int min_samples_leaf, int max_leaves,
                           bool categorical) {
  if (categorical) return fit_categorical(hist, min_samples_leaf);

  const std::size_t nb = hist.size();
  const double msl = min_samples_leaf;
  std::vector<BinStats> prefix(nb + 1);
  for (std::size_t b = 0; b < nb; ++b) prefix[b + 1] = prefix[b] + hist[b];
  auto range = [&](std::size_t lo, std::size_t hi) { return prefix[hi] - prefix[lo]; };

  struct Segment {
    std::size_t lo, hi;
  };
  std::vector<Segment> segments{{0, nb}};
  while (static_cast<int>(segments.size()) < max_leaves) {
    double best_gain = 0.0;
    std::size_t best_seg = 0, best_split = 0;
    bool found = false;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const auto [lo, hi] = segments[s];
      const BinStats parent = range(lo, hi);
      if (parent.count < 2 * msl) continue;
      const double parent_score = leaf_score(parent);
      for (std::size_t cut = lo + 1; cut < hi; ++cut) {
        const BinStats left = range(lo, cut);
        const BinStats right = parent - left;
        if (left.count < msl || right.count < msl) continue;
        const double gain = leaf_score(left) + leaf_score(right) - parent_score;
        if (significant(gain, parent_score) && (!found || gain > best_gain)) {
          best_gain = gain;
          best_seg = s;
          best_split = cut;
          found = true;
        }
      }
    }
    if (!found) break;
    const Segment old = segments[best_seg];
    segments[best_seg] = {old.lo, best_split};
    segments.insert(segments.begin() + static_cast<std::ptrdiff_t>(best_seg) + 1, Segment{best_split, old.hi});
  }

  LeafUpdate out;
  out.values.assign(nb, 0.0);
  out.leaves = static_cast<int>(segments.size());
  for (const auto& seg : segments) {
    if (seg.lo > 0) out.splits.push_back(seg.lo);
    const double v = leaf_value(range(seg.lo, seg.hi));
    for (std::size_t b = seg.lo; b < seg.hi; ++b) out.values[b] = v;
  }
  return out;
}

LeafUpdate fit_leaf_update(std::span<const double> residuals, std::span<const double> hessians,
                           std::span<const BinIndex> bins, std::size_t bin_count, int min_samples_leaf,
                           int max_leaves, bool categorical) {
  std::vector<BinStats> hist(bin_count);
  for (std::size_t r = 0; r < bins.size(); ++r) {
    auto& h = hist.at(bins[r]);
    h.gradient += residuals[r];
    h.hessian += hessians[r];
    h.count += 1.0;
  }
  return fit_leaf_update(hist, min_samples_leaf, max_leaves, categorical);
}

std::vector<double> fit_pair_update(std::span<const BinStats> grid, std::size_t rows, std::size_t cols,
                                    int min_samples_leaf) {
  const double msl = min_samples_leaf;
  // 2-D prefix sums, (rows + 1) x (cols + 1)
  std::vector<BinStats> p((rows + 1) * (cols + 1));
  auto P = [&](std::size_t r, std::size_t c) -> BinStats& { return p[r * (cols + 1) + c]; };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      P(r + 1, c + 1) = grid[r * cols + c] + P(r, c + 1) + P(r + 1, c) - P(r, c);
    }
  }
  auto rect = [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    return P(r1, c1) - P(r0, c1) - P(r1, c0) + P(r0, c0);
  };

  const BinStats total = rect(0, rows, 0, cols);
  const double total_score = leaf_score(total);

  // A leaf is a rectangle [r0, r1) x [c0, c1).
  struct Rect {
    std::size_t r0, r1, c0, c1;
  };
  std::vector<Rect> best_leaves{{0, rows, 0, cols}};
  double best_gain = 0.0;
  bool found = false;

  // Best split of `half` along `axis` (0 = rows, 1 = cols); falls back to the
  // half itself.
  auto split_half = [&](const Rect& half, int axis, std::vector<Rect>& leaves) {
    const BinStats parent = rect(half.r0, half.r1, half.c0, half.c1);
    const double parent_score = leaf_score(parent);
    double best = 0.0;
    bool ok = false;
    Rect a{}, b{};
    const std::size_t lo = axis == 0 ? half.r0 : half.c0;
    const std::size_t hi = axis == 0 ? half.r1 : half.c1;
    for (std::size_t cut = lo + 1; cut < hi; ++cut) {
      Rect l = half, r = half;
      if (axis == 0) {
        l.r1 = cut;
        r.r0 = cut;
      } else {
        l.c1 = cut;
        r.c0 = cut;
      }
      const BinStats sl = rect(l.r0, l.r1, l.c0, l.c1);
      const BinStats sr = parent - sl;
      if (sl.count < msl || sr.count < msl) continue;
      const double gain = leaf_score(sl) + leaf_score(sr) - parent_score;
      if (significant(gain, parent_score) && (!ok || gain > best)) {
        best = gain;
        a = l;
        b = r;
        ok = true;
      }
    }
    if (ok) {
      leaves.push_back(a);
      leaves.push_back(b);
    } else {
      leaves.push_back(half);
    }
  };

  for (int axis = 0; axis < 2; ++axis) {
    const std::size_t n = axis == 0 ? rows : cols;
    for (std::size_t cut = 1; cut < n; ++cut) {
      Rect first{0, rows, 0, cols}, second{0, rows, 0, cols};
      if (axis == 0) {
        first.r1 = cut;
        second.r0 = cut;
      } else {
        first.c1 = cut;
        second.c0 = cut;
      }
      if (rect(first.r0, first.r1, first.c0, first.c1).count < msl ||
          rect(second.r0, second.r1, second.c0, second.c1).count < msl) {
        continue;
      }
      std::vector<Rect> leaves;
      split_half(first, 1 - axis, leaves);
      split_half(second, 1 - axis, leaves);
      double score = 0.0;
      for (const auto& l : leaves) score += leaf_score(rect(l.r0, l.r1, l.c0, l.c1));
      const double gain = score - total_score;
      if (significant(gain, total_score) && (!found || gain > best_gain)) {
        best_gain = gain;
        best_leaves = std::move(leaves);
        found = true;
      }
    }
  }

  std::vector<double> values(rows * cols, 0.0);
  for (const auto& l : best_leaves) {
    const double v = leaf_value(rect(l.r0, l.r1, l.c0, l.c1));
    for (std::size_t r = l.r0; r < l.r1; ++r) {
      for (std::size_t c = l.c0; c < l.c1; ++c) values[r * cols + c] = v;
    }
  }
  return values;
}

bool EarlyStopper::observe(int epoch, double loss) {
  if (loss < best_loss_ - tolerance_) {
    best_loss_ = loss;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

}  // namespace ebmkit
