#include "ebmkit/binning.hpp"

#include <algorithm>
#include <set>

#include "ebmkit/error.hpp"

namespace ebmkit {

BinIndex BinDefinition::missing_bin() const {
  if (!categorical) return static_cast<BinIndex>(cuts.size() + 1);
  auto it = std::lower_bound(categories.begin(), categories.end(), kMissingToken);
  return static_cast<BinIndex>(it - categories.begin());
}

BinIndex BinDefinition::index(double value) const {
  if (categorical) throw SchemaError("feature '" + feature + "' is categorical");
  if (is_missing(value)) return missing_bin();
  // number of cuts <= value, i.e. cuts strictly below or equal; equal goes up
  return static_cast<BinIndex>(std::upper_bound(cuts.begin(), cuts.end(), value) - cuts.begin());
}

BinIndex BinDefinition::index(std::string_view token, bool* unseen) const {
  if (!categorical) throw SchemaError("feature '" + feature + "' is continuous");
  auto it = std::lower_bound(categories.begin(), categories.end(), token);
  if (it != categories.end() && *it == token) {
    if (unseen) *unseen = false;
    return static_cast<BinIndex>(it - categories.begin());
  }
  if (unseen) *unseen = true;
  return missing_bin();
}

std::string BinDefinition::bin_label(BinIndex bin) const {
  if (categorical) return categories.at(bin);
  if (bin == missing_bin()) return std::string(kMissingToken);
  const std::string lo = bin == 0 ? "-inf" : format_double(cuts[bin - 1]);
  const std::string hi = bin == cuts.size() ? "inf" : format_double(cuts[bin]);
  return "[" + lo + ", " + hi + ")";
}

nlohmann::json BinDefinition::to_json() const {
  nlohmann::json j = {{"feature", feature}, {"kind", categorical ? "categorical" : "continuous"}};
  if (categorical) {
    j["categories"] = categories;
  } else {
    j["cuts"] = cuts;
    j["min"] = min_value;
    j["max"] = max_value;
  }
  return j;
}

BinDefinition BinDefinition::from_json(const nlohmann::json& j) {
  BinDefinition b;
  b.feature = j.at("feature").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "categorical" && kind != "continuous") {
    throw ModelFormatError("unknown bin kind '" + kind + "'");
  }
  b.categorical = kind == "categorical";
  if (b.categorical) {
    b.categories = j.at("categories").get<std::vector<std::string>>();
    if (!std::is_sorted(b.categories.begin(), b.categories.end())) {
      throw ModelFormatError("categories of '" + b.feature + "' are not sorted");
    }
  } else {
    b.cuts = j.at("cuts").get<std::vector<double>>();
    b.min_value = j.at("min").get<double>();
    b.max_value = j.at("max").get<double>();
    if (std::adjacent_find(b.cuts.begin(), b.cuts.end(), std::greater_equal<>()) != b.cuts.end()) {
      throw ModelFormatError("cut points of '" + b.feature + "' are not strictly increasing");
    }
  }
  return b;
}

BinDefinition fit_bins(std::span<const double> values, int max_bins, std::string feature) {
  if (max_bins < 2) throw ConfigError("max_bins must be at least 2");
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) {
    if (!is_missing(x)) v.push_back(x);
  }
  if (v.empty()) throw DataError("cannot fit bins for '" + feature + "': no non-missing values");
  std::sort(v.begin(), v.end());

  BinDefinition b;
  b.feature = std::move(feature);
  b.min_value = v.front();
  b.max_value = v.back();
  const std::size_t n = v.size();
  for (int q = 1; q < max_bins; ++q) {
    const std::size_t pos = static_cast<std::size_t>(q) * n / static_cast<std::size_t>(max_bins);
    const double cut = v[std::min(pos, n - 1)];
    if (cut <= v.front()) continue;
    if (!b.cuts.empty() && cut <= b.cuts.back()) continue;
    b.cuts.push_back(cut);
  }
  return b;
}

BinDefinition fit_categorical_bins(std::span<const std::string> tokens, std::string feature) {
  std::set<std::string> cats(tokens.begin(), tokens.end());
  cats.insert(std::string(kMissingToken));
  BinDefinition b;
  b.feature = std::move(feature);
  b.categorical = true;
  b.categories.assign(cats.begin(), cats.end());
  return b;
}

std::vector<BinDefinition> fit_feature_bins(const Cohort& train, const std::vector<std::string>& features,
                                            int max_bins) {
  std::vector<BinDefinition> out;
  const auto& schema = train.schema();
  for (const auto& f : features) {
    const auto kind = schema.column(f).kind;
    if (kind == ColumnKind::kContinuous) {
      out.push_back(fit_bins(train.numeric(f), max_bins, f));
    } else if (kind == ColumnKind::kCategorical) {
      out.push_back(fit_categorical_bins(train.tokens(f), f));
    } else {
      throw SchemaError("column '" + f + "' is not a feature");
    }
  }
  return out;
}

BinnedMatrix BinnedMatrix::subset(std::span<const std::size_t> row_indices) const {
  BinnedMatrix out;
  out.rows = row_indices.size();
  out.bins = bins;
  out.indices.resize(bins.size());
  for (std::size_t f = 0; f < bins.size(); ++f) {
    out.indices[f].reserve(row_indices.size());
    for (auto r : row_indices) out.indices[f].push_back(indices[f][r]);
  }
  return out;
}

BinnedMatrix bin_matrix(const Cohort& cohort, const std::vector<BinDefinition>& bins) {
  BinnedMatrix m;
  m.rows = cohort.rows();
  m.bins = bins;
  m.indices.resize(bins.size());
  const auto& schema = cohort.schema();
  for (std::size_t f = 0; f < bins.size(); ++f) {
    const auto& def = bins[f];
    const auto idx = schema.find(def.feature);
    if (!idx) throw SchemaError("binned feature '" + def.feature + "' is absent from the cohort");
    auto& out = m.indices[f];
    out.resize(m.rows);
    const auto kind = schema.columns()[*idx].kind;
    if (def.categorical) {
      if (kind != ColumnKind::kCategorical) {
        throw SchemaError("feature '" + def.feature + "' was binned as categorical");
      }
      const auto& toks = cohort.column(*idx).tokens;
      for (std::size_t r = 0; r < m.rows; ++r) {
        bool unseen = false;
        out[r] = def.index(toks[r], &unseen);
        if (unseen) ++m.unseen_categories;
      }
    } else {
      if (kind != ColumnKind::kContinuous) {
        throw SchemaError("feature '" + def.feature + "' was binned as continuous");
      }
      const auto& vals = cohort.column(*idx).numeric;
      for (std::size_t r = 0; r < m.rows; ++r) out[r] = def.index(vals[r]);
    }
  }
  return m;
}

}  // namespace ebmkit
