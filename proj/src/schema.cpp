#include "ebmkit/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ebmkit/error.hpp"

namespace ebmkit {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kContinuous: return "continuous";
    case ColumnKind::kCategorical: return "categorical";
    case ColumnKind::kLabel: return "label";
    case ColumnKind::kGroupId: return "group_id";
  }
  return "?";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "continuous") return ColumnKind::kContinuous;
  if (text == "categorical") return ColumnKind::kCategorical;
  if (text == "label") return ColumnKind::kLabel;
  if (text == "group_id") return ColumnKind::kGroupId;
  throw SchemaError("unknown column kind '" + std::string(text) + "'");
}

FeatureSchema::FeatureSchema(std::vector<ColumnSpec> columns,
                             std::map<std::string, std::vector<std::string>> outcome_allowlists)
    : columns_(std::move(columns)), allowlists_(std::move(outcome_allowlists)) {
  validate();
}

void FeatureSchema::validate() {
  std::set<std::string> seen;
  std::size_t groups = 0;
  std::size_t labels = 0;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& c = columns_[i];
    if (c.name.empty()) throw SchemaError("column " + std::to_string(i) + " has an empty name");
    if (!seen.insert(c.name).second) throw SchemaError("duplicate column '" + c.name + "'");
    if (c.kind == ColumnKind::kGroupId) {
      ++groups;
      group_index_ = i;
    }
    if (c.kind == ColumnKind::kLabel) ++labels;
  }
  if (groups != 1) {
    throw SchemaError("schema needs exactly one group_id column, found " + std::to_string(groups));
  }
  if (labels == 0) throw SchemaError("schema declares no label column");
  for (const auto& [outcome, features] : allowlists_) {
    auto oi = find(outcome);
    if (!oi || columns_[*oi].kind != ColumnKind::kLabel) {
      throw SchemaError("allowlist outcome '" + outcome + "' is not a label column");
    }
    for (const auto& f : features) {
      auto fi = find(f);
      if (!fi) throw SchemaError("allowlist for '" + outcome + "' names undeclared column '" + f + "'");
      const auto kind = columns_[*fi].kind;
      if (kind != ColumnKind::kContinuous && kind != ColumnKind::kCategorical) {
        throw SchemaError("allowlist for '" + outcome + "' names non-feature column '" + f + "'");
      }
    }
  }
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw SchemaError("unknown column '" + std::string(name) + "'");
}

std::vector<std::string> FeatureSchema::outcomes() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.kind == ColumnKind::kLabel) out.push_back(c.name);
  }
  return out;
}

std::vector<std::string> FeatureSchema::features_for(std::string_view outcome) const {
  const auto& label = columns_[index_of(outcome)];
  if (label.kind != ColumnKind::kLabel) {
    throw SchemaError("'" + std::string(outcome) + "' is not a label column");
  }
  auto it = allowlists_.find(std::string(outcome));
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.kind != ColumnKind::kContinuous && c.kind != ColumnKind::kCategorical) continue;
    if (it != allowlists_.end() &&
        std::find(it->second.begin(), it->second.end(), c.name) == it->second.end()) {
      continue;
    }
    out.push_back(c.name);
  }
  return out;
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns_) {
    nlohmann::json jc = {{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
    if (!c.unit.empty()) jc["unit"] = c.unit;
    cols.push_back(std::move(jc));
  }
  return {{"columns", cols}, {"outcome_allowlists", allowlists_}};
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  try {
    std::vector<ColumnSpec> cols;
    for (const auto& jc : j.at("columns")) {
      cols.push_back({jc.at("name").get<std::string>(),
                      parse_column_kind(jc.at("kind").get<std::string>()),
                      jc.value("unit", std::string{})});
    }
    std::map<std::string, std::vector<std::string>> allow;
    if (j.contains("outcome_allowlists")) {
      allow = j.at("outcome_allowlists").get<std::map<std::string, std::vector<std::string>>>();
    }
    return FeatureSchema(std::move(cols), std::move(allow));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
}

FeatureSchema FeatureSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace ebmkit
