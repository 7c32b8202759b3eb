#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ebmkit {

enum class ColumnKind { kContinuous, kCategorical, kLabel, kGroupId };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  std::string unit;
};

/// Ordered column declarations plus, for each outcome (label column), the
/// features that may be used to predict it.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<ColumnSpec> columns,
                std::map<std::string, std::vector<std::string>> outcome_allowlists = {});

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const std::map<std::string, std::vector<std::string>>& outcome_allowlists() const {
    return allowlists_;
  }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws SchemaError
  const ColumnSpec& column(std::string_view name) const { return columns_[index_of(name)]; }

  std::size_t group_column() const { return group_index_; }
  std::vector<std::string> outcomes() const;

  /// Predictor columns usable for `outcome`, in schema order. Without an
  /// allowlist entry every continuous and categorical column is usable.
  std::vector<std::string> features_for(std::string_view outcome) const;

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& j);
  static FeatureSchema load(const std::string& path);

 private:
  void validate();

  std::vector<ColumnSpec> columns_;
  std::map<std::string, std::vector<std::string>> allowlists_;
  std::size_t group_index_ = 0;
};

}  // namespace ebmkit
