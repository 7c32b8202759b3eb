#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ebmkit/cohort.hpp"
#include "ebmkit/schema.hpp"

namespace testing {

inline ebmkit::FeatureSchema schema_of(std::initializer_list<std::pair<const char*, ebmkit::ColumnKind>> cols) {
  std::vector<ebmkit::ColumnSpec> specs;
  for (const auto& [name, kind] : cols) specs.push_back({name, kind, ""});
  return ebmkit::FeatureSchema(std::move(specs));
}

inline ebmkit::Cohort cohort_from(const std::string& csv, const ebmkit::FeatureSchema& schema) {
  std::istringstream in(csv);
  return ebmkit::parse_csv(in, schema);
}

// bmi (continuous), race (categorical), smm (label), hospital (group)
inline ebmkit::FeatureSchema small_schema() {
  using K = ebmkit::ColumnKind;
  return schema_of({{"bmi", K::kContinuous}, {"race", K::kCategorical}, {"smm", K::kLabel}, {"hospital", K::kGroupId}});
}

// Independent evaluation straight from the serialized JSON.
inline std::vector<double> logits_from_json(const std::string& text, const ebmkit::Cohort& cohort) {
  const auto j = nlohmann::json::parse(text);
  std::vector<std::vector<std::size_t>> bins;
  for (const auto& f : j["features"]) {
    const auto& b = f["bins"];
    const std::string name = b["feature"];
    std::vector<std::size_t> col(cohort.rows());
    if (b["kind"] == "categorical") {
      const auto cats = b["categories"].get<std::vector<std::string>>();
      const auto missing = std::find(cats.begin(), cats.end(), "Missing") - cats.begin();
      const auto tokens = cohort.tokens(name);
      for (std::size_t r = 0; r < cohort.rows(); ++r) {
        const auto it = std::find(cats.begin(), cats.end(), tokens[r]);
        col[r] = it == cats.end() ? static_cast<std::size_t>(missing) : static_cast<std::size_t>(it - cats.begin());
      }
    } else {
      const auto cuts = b["cuts"].get<std::vector<double>>();
      const auto values = cohort.numeric(name);
      for (std::size_t r = 0; r < cohort.rows(); ++r) {
        if (std::isnan(values[r])) {
          col[r] = cuts.size() + 1;
          continue;
        }
        std::size_t k = 0;
        for (double c : cuts) k += values[r] >= c ? 1 : 0;
        col[r] = k;
      }
    }
    bins.push_back(std::move(col));
  }
  std::vector<double> out(cohort.rows(), j["intercept"].get<double>());
  for (std::size_t r = 0; r < cohort.rows(); ++r) {
    for (std::size_t f = 0; f < bins.size(); ++f) out[r] += j["features"][f]["scores"][bins[f][r]].get<double>();
    for (const auto& p : j["pairs"]) {
      const std::size_t a = p["features"][0], b = p["features"][1];
      const std::size_t ga = p["maps"][0][bins[a][r]], gb = p["maps"][1][bins[b][r]];
      const std::size_t cols = p["shape"][1];
      out[r] += p["scores"][ga * cols + gb].get<double>();
    }
  }
  return out;
}

}  // namespace testing
