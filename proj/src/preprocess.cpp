#include "ebmkit/preprocess.hpp"

#include <algorithm>
#include <set>

#include "ebmkit/error.hpp"

namespace ebmkit {

std::string ExclusionRule::label() const {
  return feature + (predicate == Predicate::kBelow ? "<" : ">") + format_double(threshold);
}

ExclusionRuleSet ExclusionRuleSet::defaults() {
  using P = ExclusionRule::Predicate;
  return {{{std::string(kTimeToDeliveryColumn), P::kBelow, 0.0},
           {std::string(kBirthWeightColumn), P::kAbove, 8000.0},
           {std::string(kBmiColumn), P::kAbove, 120.0}}};
}

ExclusionRuleSet ExclusionRuleSet::defaults_for(const FeatureSchema& schema) {
  ExclusionRuleSet out;
  for (auto& r : defaults().rules) {
    if (schema.find(r.feature)) out.rules.push_back(std::move(r));
  }
  return out;
}

nlohmann::json ExclusionRuleSet::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rules) {
    arr.push_back({{"feature", r.feature},
                   {"predicate", r.predicate == ExclusionRule::Predicate::kBelow ? "below" : "above"},
                   {"value", r.threshold}});
  }
  return {{"rules", arr}};
}

ExclusionRuleSet ExclusionRuleSet::from_json(const nlohmann::json& j) {
  ExclusionRuleSet out;
  try {
    for (const auto& jr : j.at("rules")) {
      const auto pred = jr.at("predicate").get<std::string>();
      if (pred != "below" && pred != "above") {
        throw ConfigError("exclusion predicate must be 'below' or 'above', got '" + pred + "'");
      }
      out.rules.push_back({jr.at("feature").get<std::string>(),
                           pred == "below" ? ExclusionRule::Predicate::kBelow
                                           : ExclusionRule::Predicate::kAbove,
                           jr.at("value").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed exclusion rules: ") + e.what());
  }
  return out;
}

nlohmann::json ExclusionReport::to_json() const {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [label, n] : fired) counts[label] = n;
  return {{"input_rows", input_rows},
          {"retained_rows", retained_rows},
          {"excluded_rows", input_rows - retained_rows},
          {"fired", counts}};
}

std::pair<Cohort, ExclusionReport> apply_exclusions(const Cohort& cohort,
                                                    const ExclusionRuleSet& rules) {
  const auto& schema = cohort.schema();
  std::vector<std::span<const double>> values;
  for (const auto& r : rules.rules) {
    const auto idx = schema.find(r.feature);
    if (!idx) throw ConfigError("exclusion rule references unknown column '" + r.feature + "'");
    if (schema.columns()[*idx].kind != ColumnKind::kContinuous) {
      throw ConfigError("exclusion rule references non-continuous column '" + r.feature + "'");
    }
    values.push_back(cohort.column(*idx).numeric);
  }

  ExclusionReport report;
  report.input_rows = cohort.rows();
  for (const auto& r : rules.rules) report.fired.emplace_back(r.label(), 0);

  std::vector<std::size_t> keep;
  keep.reserve(cohort.rows());
  for (std::size_t row = 0; row < cohort.rows(); ++row) {
    bool drop = false;
    for (std::size_t k = 0; k < rules.rules.size(); ++k) {
      if (rules.rules[k].fires(values[k][row])) {
        ++report.fired[k].second;
        drop = true;
      }
    }
    if (!drop) keep.push_back(row);
  }
  report.retained_rows = keep.size();
  return {cohort.subset(keep), std::move(report)};
}

nlohmann::json ImputationStats::to_json() const { return means; }

ImputationStats ImputationStats::from_json(const nlohmann::json& j) {
  return {j.get<std::map<std::string, double>>()};
}

ImputationStats fit_imputation(const Cohort& cohort) {
  ImputationStats stats;
  for (const auto& c : cohort.schema().columns()) {
    if (c.kind != ColumnKind::kContinuous) continue;
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : cohort.numeric(c.name)) {
      if (!is_missing(v)) {
        sum += v;
        ++n;
      }
    }
    if (n == 0) throw DataError("cannot impute column '" + c.name + "': every value is missing");
    stats.means[c.name] = sum / static_cast<double>(n);
  }
  return stats;
}

Cohort apply_imputation(const Cohort& cohort, const ImputationStats& stats) {
  Cohort out = cohort;
  const auto& schema = cohort.schema();
  for (const auto& [name, m] : stats.means) {
    const auto idx = schema.find(name);
    if (!idx || schema.columns()[*idx].kind != ColumnKind::kContinuous) continue;
    for (double& v : out.mutable_column(*idx).numeric) {
      if (is_missing(v)) v = m;
    }
  }
  return out;
}

std::pair<Cohort, ImputationStats> impute_mean(const Cohort& cohort) {
  auto stats = fit_imputation(cohort);
  return {apply_imputation(cohort, stats), std::move(stats)};
}

DummyEncoder DummyEncoder::fit(const Cohort& train, const std::vector<std::string>& features) {
  DummyEncoder enc;
  const auto& schema = train.schema();
  for (const auto& f : features) {
    const auto& spec = schema.column(f);
    if (spec.kind == ColumnKind::kContinuous) {
      enc.features_.push_back(f);
      enc.categorical_.push_back(false);
      enc.categories_.emplace_back();
    } else if (spec.kind == ColumnKind::kCategorical) {
      const auto toks = train.tokens(f);
      std::set<std::string> seen(toks.begin(), toks.end());
      enc.features_.push_back(f);
      enc.categorical_.push_back(true);
      enc.categories_.emplace_back(seen.begin(), seen.end());
    } else {
      throw SchemaError("column '" + f + "' is not a feature");
    }
  }
  return enc;
}

std::vector<std::string> DummyEncoder::column_names() const {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (!categorical_[f]) {
      names.push_back(features_[f]);
    } else {
      for (const auto& cat : categories_[f]) names.push_back(features_[f] + "=" + cat);
    }
  }
  return names;
}

DesignMatrix DummyEncoder::encode(const Cohort& cohort) const {
  DesignMatrix m;
  m.column_names = column_names();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (!categorical_[f]) {
      m.is_indicator.push_back(false);
    } else {
      m.is_indicator.insert(m.is_indicator.end(), categories_[f].size(), true);
    }
  }
  m.rows = cohort.rows();
  const std::size_t width = m.cols();
  m.values.assign(m.rows * width, 0.0);

  std::size_t offset = 0;
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (!categorical_[f]) {
      const auto col = cohort.numeric(features_[f]);
      for (std::size_t r = 0; r < m.rows; ++r) {
        if (is_missing(col[r])) {
          throw DataError("column '" + features_[f] + "' has missing values; impute before encoding");
        }
        m.values[r * width + offset] = col[r];
      }
      ++offset;
      continue;
    }
    const auto& cats = categories_[f];
    const auto toks = cohort.tokens(features_[f]);
    std::set<std::string> unseen;
    for (std::size_t r = 0; r < m.rows; ++r) {
      auto it = std::lower_bound(cats.begin(), cats.end(), toks[r]);
      if (it != cats.end() && *it == toks[r]) {
        m.values[r * width + offset + static_cast<std::size_t>(it - cats.begin())] = 1.0;
      } else {
        unseen.insert(toks[r]);
      }
    }
    for (const auto& u : unseen) {
      m.warnings.push_back("column '" + features_[f] + "': category '" + u +
                           "' not seen in training; encoded as all zeros");
    }
    offset += cats.size();
  }
  return m;
}

nlohmann::json DummyEncoder::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    nlohmann::json jf = {{"feature", features_[f]}, {"categorical", bool(categorical_[f])}};
    if (categorical_[f]) jf["categories"] = categories_[f];
    arr.push_back(std::move(jf));
  }
  return arr;
}

DummyEncoder DummyEncoder::from_json(const nlohmann::json& j) {
  DummyEncoder enc;
  for (const auto& jf : j) {
    enc.features_.push_back(jf.at("feature").get<std::string>());
    const bool cat = jf.at("categorical").get<bool>();
    enc.categorical_.push_back(cat);
    enc.categories_.push_back(cat ? jf.at("categories").get<std::vector<std::string>>()
                                  : std::vector<std::string>{});
  }
  return enc;
}

DesignMatrix dummy_encode(const Cohort& cohort, const std::vector<std::string>& features) {
  return DummyEncoder::fit(cohort, features).encode(cohort);
}

}  // namespace ebmkit
