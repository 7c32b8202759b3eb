#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebmkit/metrics.hpp"
#include "ebmkit/model.hpp"

namespace ebmkit {

// ---------------------------------------------------------------------------
// Shape exports

struct ShapeBin {
  double left = 0.0;
  double right = 0.0;
  double contribution = 0.0;
  double std = 0.0;
  double frequency = 0.0;  // share of training rows
};

struct CategoryBar {
  std::string category;
  double contribution = 0.0;
  double std = 0.0;
  double frequency = 0.0;
};

/// One feature's learned shape in plottable form. Continuous features list
/// contiguous value intervals (first left edge is the training minimum, last
/// right edge the maximum) plus the missing bucket; categorical features list
/// one bar per category, "Missing" included.
struct ShapeExport {
  std::string feature;
  std::string unit;
  bool categorical = false;
  std::vector<ShapeBin> bins;
  std::vector<CategoryBar> categories;
  CategoryBar missing;  // continuous only

  /// Contribution the model assigns to a raw value, using the same
  /// right-open intervals as binning. NaN looks up the missing bucket.
  double lookup(double value) const;
  double lookup(const std::string& token) const;

  nlohmann::json to_json() const;
  static ShapeExport from_json(const nlohmann::json& j);
  std::string to_csv() const;
};

ShapeExport export_shape(const EbmModel& model, const std::string& feature, const std::string& unit = {});

struct SvgOptions {
  int width = 640;
  int height = 400;
  std::string title;
  std::string x_label;  // defaults to the feature name and unit
  std::string y_label = "contribution to log-odds";
};

/// [min(contribution - std), max(contribution + std)] over every entry.
std::pair<double, double> shape_y_range(const ShapeExport& shape);

/// Step plot (continuous) or bar chart (categorical) with a shaded +/-1 std
/// band. Byte-identical output for identical input.
std::string render_shape_svg(const ShapeExport& shape, const SvgOptions& options = {});

// ---------------------------------------------------------------------------
// Calibration plot

struct CalibrationGeometry {
  double axis_max = 1.0;
  double left = 0, top = 0, right = 0, bottom = 0;  // plot area in pixels
  std::vector<std::pair<double, double>> markers;   // pixel centres, one per point

  std::pair<double, double> to_pixels(double predicted, double observed) const;
};

/// Both axes span [0, 1.1 * max(predicted, observed)].
CalibrationGeometry calibration_geometry(std::span<const CalibrationPoint> points, const SvgOptions& options = {});
std::string calibration_svg(std::span<const CalibrationPoint> points, const SvgOptions& options = {});

// ---------------------------------------------------------------------------
// Tables

struct ImportanceRow {
  int rank = 0;
  std::string feature;
  double importance = 0.0;
};

/// Ranked mean |log-odds contribution| over `cohort` (the training
/// population when no cohort is given), truncated to `top_k` rows.
std::vector<ImportanceRow> importance_table(const EbmModel& model, const Cohort* cohort, std::size_t top_k);
std::string format_importance_table(std::span<const ImportanceRow> rows);
std::string importance_csv(std::span<const ImportanceRow> rows);

/// "0.756 ± 0.020"
std::string format_auroc_cell(double mean, double std);

struct AurocCell {
  double mean = 0.0;
  double std = 0.0;
};

struct AurocTable {
  std::vector<std::string> outcomes;
  std::vector<std::string> models;
  std::vector<std::vector<std::optional<AurocCell>>> cells;  // [outcome][model]
  std::vector<std::optional<AurocCell>> mean_row;             // per model

  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// Rows are outcomes in first-seen order plus a "Mean AUROC" row; columns
/// are models in first-seen order. The mean row averages the per-outcome
/// means and, separately, the per-outcome stds. A model missing any outcome
/// gets no mean cell.
AurocTable auroc_table(std::span<const EvalReport> reports);

}  // namespace ebmkit
