#include "ebmkit/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "ebmkit/error.hpp"
#include "ebmkit/numeric.hpp"

namespace ebmkit {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string shortest(double v) { return format_double(v); }

}  // namespace

// ---------------------------------------------------------------------------

double ShapeExport::lookup(double value) const {
  if (categorical) throw Error("feature '" + feature + "' is categorical");
  if (std::isnan(value) || bins.empty()) return missing.contribution;
  // bins[k].left for k >= 1 are the cut points
  std::size_t k = 0;
  while (k + 1 < bins.size() && value >= bins[k + 1].left) ++k;
  return bins[k].contribution;
}

double ShapeExport::lookup(const std::string& token) const {
  if (!categorical) throw Error("feature '" + feature + "' is continuous");
  for (const auto& c : categories) {
    if (c.category == token) return c.contribution;
  }
  for (const auto& c : categories) {
    if (c.category == kMissingToken) return c.contribution;
  }
  return 0.0;
}

nlohmann::json ShapeExport::to_json() const {
  nlohmann::json j = {{"feature", feature}, {"unit", unit}, {"categorical", categorical}};
  if (categorical) {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& c : categories) {
      cats.push_back(
          {{"category", c.category}, {"contribution", c.contribution}, {"std", c.std}, {"frequency", c.frequency}});
    }
    j["categories"] = cats;
  } else {
    nlohmann::json bs = nlohmann::json::array();
    for (const auto& b : bins) {
      bs.push_back({{"left", b.left},
                    {"right", b.right},
                    {"contribution", b.contribution},
                    {"std", b.std},
                    {"frequency", b.frequency}});
    }
    j["bins"] = bs;
    j["missing"] = {{"contribution", missing.contribution}, {"std", missing.std}, {"frequency", missing.frequency}};
  }
  return j;
}

ShapeExport ShapeExport::from_json(const nlohmann::json& j) {
  ShapeExport s;
  try {
    s.feature = j.at("feature").get<std::string>();
    s.unit = j.value("unit", std::string{});
    s.categorical = j.at("categorical").get<bool>();
    if (s.categorical) {
      for (const auto& c : j.at("categories")) {
        s.categories.push_back({c.at("category").get<std::string>(), c.at("contribution").get<double>(),
                                c.at("std").get<double>(), c.at("frequency").get<double>()});
      }
    } else {
      for (const auto& b : j.at("bins")) {
        s.bins.push_back({b.at("left").get<double>(), b.at("right").get<double>(), b.at("contribution").get<double>(),
                          b.at("std").get<double>(), b.at("frequency").get<double>()});
      }
      const auto& m = j.at("missing");
      s.missing = {std::string(kMissingToken), m.at("contribution").get<double>(), m.at("std").get<double>(),
                   m.at("frequency").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed shape export: ") + e.what());
  }
  return s;
}

std::string ShapeExport::to_csv() const {
  std::ostringstream os;
  if (categorical) {
    os << "category,contribution,std,frequency\n";
    for (const auto& c : categories) {
      os << csv_field(c.category) << ',' << shortest(c.contribution) << ',' << shortest(c.std) << ','
         << shortest(c.frequency) << '\n';
    }
  } else {
    os << "left,right,contribution,std,frequency\n";
    for (const auto& b : bins) {
      os << shortest(b.left) << ',' << shortest(b.right) << ',' << shortest(b.contribution) << ','
         << shortest(b.std) << ',' << shortest(b.frequency) << '\n';
    }
    os << kMissingToken << ',' << kMissingToken << ',' << shortest(missing.contribution) << ','
       << shortest(missing.std) << ',' << shortest(missing.frequency) << '\n';
  }
  return os.str();
}

ShapeExport export_shape(const EbmModel& model, const std::string& feature, const std::string& unit) {
  const auto idx = model.find_feature(feature);
  if (!idx) {
    std::string names;
    for (const auto& f : model.features) names += (names.empty() ? "" : ", ") + f.name();
    throw Error("unknown feature '" + feature + "'; available: " + names);
  }
  const FeatureTerm& term = model.features[*idx];
  const BinDefinition& def = term.bins;
  const double total = std::accumulate(term.counts.begin(), term.counts.end(), 0.0);
  auto freq = [&](std::size_t b) { return total > 0.0 ? term.counts[b] / total : 0.0; };

  ShapeExport out;
  out.feature = feature;
  out.unit = unit;
  out.categorical = def.categorical;
  if (def.categorical) {
    for (std::size_t b = 0; b < def.categories.size(); ++b) {
      out.categories.push_back({def.categories[b], term.scores[b], term.stds[b], freq(b)});
    }
    return out;
  }
  const std::size_t nb = def.value_bins();
  for (std::size_t b = 0; b < nb; ++b) {
    const double left = b == 0 ? def.min_value : def.cuts[b - 1];
    const double right = b + 1 == nb ? std::max(def.max_value, left) : def.cuts[b];
    out.bins.push_back({left, right, term.scores[b], term.stds[b], freq(b)});
  }
  const auto m = def.missing_bin();
  out.missing = {std::string(kMissingToken), term.scores[m], term.stds[m], freq(m)};
  return out;
}

std::pair<double, double> shape_y_range(const ShapeExport& shape) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto add = [&](double c, double s) {
    lo = std::min(lo, c - s);
    hi = std::max(hi, c + s);
  };
  for (const auto& b : shape.bins) add(b.contribution, b.std);
  for (const auto& c : shape.categories) add(c.contribution, c.std);
  if (!shape.categorical) add(shape.missing.contribution, shape.missing.std);
  if (lo > hi) lo = hi = 0.0;
  return {lo, hi};
}

namespace {

struct Frame {
  double left, top, right, bottom;
  double x0, x1, y0, y1;

  double x(double v) const { return left + (v - x0) / (x1 - x0) * (right - left); }
  double y(double v) const { return bottom - (v - y0) / (y1 - y0) * (bottom - top); }
};

void header(std::ostringstream& os, const SvgOptions& o) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << o.width << "\" height=\""
     << o.height << "\" viewBox=\"0 0 " << o.width << ' ' << o.height << "\" font-family=\"sans-serif\" "
     << "font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!o.title.empty()) {
    os << "<text x=\"" << num(o.width / 2.0) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << xml_escape(o.title) << "</text>\n";
  }
}

void y_axis(std::ostringstream& os, const Frame& f, const std::string& label) {
  os << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.top) << "\" x2=\"" << num(f.left) << "\" y2=\""
     << num(f.bottom) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = f.y0 + (f.y1 - f.y0) * t / 4.0;
    os << "<line x1=\"" << num(f.left - 4) << "\" y1=\"" << num(f.y(v)) << "\" x2=\"" << num(f.left) << "\" y2=\""
       << num(f.y(v)) << "\" stroke=\"black\"/>"
       << "<text x=\"" << num(f.left - 6) << "\" y=\"" << num(f.y(v) + 4) << "\" text-anchor=\"end\">" << tick(v)
       << "</text>\n";
  }
  const double cy = (f.top + f.bottom) / 2.0;
  os << "<text x=\"16\" y=\"" << num(cy) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << num(cy)
     << ")\">" << xml_escape(label) << "</text>\n";
}

void x_axis(std::ostringstream& os, const Frame& f, const std::string& label, bool ticks) {
  os << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.bottom) << "\" x2=\"" << num(f.right) << "\" y2=\""
     << num(f.bottom) << "\" stroke=\"black\"/>\n";
  if (ticks) {
    for (int t = 0; t <= 4; ++t) {
      const double v = f.x0 + (f.x1 - f.x0) * t / 4.0;
      os << "<line x1=\"" << num(f.x(v)) << "\" y1=\"" << num(f.bottom) << "\" x2=\"" << num(f.x(v))
         << "\" y2=\"" << num(f.bottom + 4) << "\" stroke=\"black\"/>"
         << "<text x=\"" << num(f.x(v)) << "\" y=\"" << num(f.bottom + 16) << "\" text-anchor=\"middle\">"
         << tick(v) << "</text>\n";
    }
  }
  os << "<text x=\"" << num((f.left + f.right) / 2.0) << "\" y=\"" << num(f.bottom + 34)
     << "\" text-anchor=\"middle\">" << xml_escape(label) << "</text>\n";
}

std::string percent(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * f);
  return buf;
}

}  // namespace

std::string render_shape_svg(const ShapeExport& shape, const SvgOptions& options) {
  if (shape.bins.empty() && shape.categories.empty()) throw Error("cannot render an empty shape");
  std::ostringstream os;
  SvgOptions o = options;
  if (o.title.empty()) o.title = shape.feature;
  std::string xlabel = o.x_label;
  if (xlabel.empty()) xlabel = shape.unit.empty() ? shape.feature : shape.feature + " (" + shape.unit + ")";
  header(os, o);

  auto [lo, hi] = shape_y_range(shape);
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  const double pad = hi > lo ? 0.05 * (hi - lo) : 1.0;
  Frame f{70.0, 40.0, o.width - 20.0, o.height - (shape.categorical ? 70.0 : 60.0), 0, 1, lo - pad, hi + pad};

  if (!shape.categorical) {
    f.x0 = shape.bins.front().left;
    f.x1 = shape.bins.back().right;
    if (!(f.x1 > f.x0)) {
      f.x0 -= 0.5;
      f.x1 += 0.5;
    }
    os << "<g fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\">\n";
    for (const auto& b : shape.bins) {
      const double x = f.x(b.left), w = std::max(f.x(b.right) - x, 0.5);
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(f.y(b.contribution + b.std)) << "\" width=\"" << num(w)
         << "\" height=\"" << num(f.y(b.contribution - b.std) - f.y(b.contribution + b.std)) << "\"/>\n";
    }
    os << "</g>\n";
    os << "<path fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" d=\"M" << num(f.x(shape.bins.front().left))
       << ' ' << num(f.y(shape.bins.front().contribution));
    for (std::size_t k = 0; k < shape.bins.size(); ++k) {
      if (k > 0) os << " V" << num(f.y(shape.bins[k].contribution));
      os << " H" << num(f.x(shape.bins[k].right));
    }
    os << "\"/>\n";
    os << "<text x=\"" << num(f.right) << "\" y=\"" << num(o.height - 8.0) << "\" text-anchor=\"end\">Missing: "
       << tick(shape.missing.contribution) << " ± " << tick(shape.missing.std) << " ("
       << percent(shape.missing.frequency) << " of rows)</text>\n";
  } else {
    const double n = static_cast<double>(shape.categories.size());
    const double slot = (f.right - f.left) / n;
    for (std::size_t k = 0; k < shape.categories.size(); ++k) {
      const auto& c = shape.categories[k];
      const double cx = f.left + slot * (static_cast<double>(k) + 0.5);
      const double y0 = f.y(0.0), y1 = f.y(c.contribution);
      os << "<rect x=\"" << num(cx - slot * 0.3) << "\" y=\"" << num(std::min(y0, y1)) << "\" width=\""
         << num(slot * 0.6) << "\" height=\"" << num(std::abs(y1 - y0)) << "\" fill=\"#6baed6\"/>\n";
      os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(f.y(c.contribution - c.std)) << "\" x2=\"" << num(cx)
         << "\" y2=\"" << num(f.y(c.contribution + c.std)) << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << num(cx) << "\" y=\"" << num(f.bottom + 14) << "\" text-anchor=\"middle\">"
         << xml_escape(c.category) << "</text>"
         << "<text x=\"" << num(cx) << "\" y=\"" << num(f.bottom + 27) << "\" text-anchor=\"middle\" fill=\"#555\">"
         << percent(c.frequency) << "</text>\n";
    }
  }
  os << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.y(0.0)) << "\" x2=\"" << num(f.right) << "\" y2=\""
     << num(f.y(0.0)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  y_axis(os, f, o.y_label);
  if (shape.categorical) {
    // category names and frequencies take the tick rows
    os << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.bottom) << "\" x2=\"" << num(f.right) << "\" y2=\""
       << num(f.bottom) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << num((f.left + f.right) / 2.0) << "\" y=\"" << num(f.bottom + 48)
       << "\" text-anchor=\"middle\">" << xml_escape(xlabel) << "</text>\n";
  } else {
    x_axis(os, f, xlabel, true);
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------

std::pair<double, double> CalibrationGeometry::to_pixels(double predicted, double observed) const {
  return {left + predicted / axis_max * (right - left), bottom - observed / axis_max * (bottom - top)};
}

CalibrationGeometry calibration_geometry(std::span<const CalibrationPoint> points, const SvgOptions& options) {
  if (points.empty()) throw Error("calibration plot needs at least one point");
  CalibrationGeometry g;
  double m = 0.0;
  for (const auto& p : points) m = std::max({m, p.predicted, p.observed});
  g.axis_max = m > 0.0 ? 1.1 * m : 1.0;
  // square plot area
  const double side = std::min(options.width - 90.0, options.height - 100.0);
  g.left = 70.0;
  g.top = 40.0;
  g.right = g.left + side;
  g.bottom = g.top + side;
  for (const auto& p : points) g.markers.push_back(g.to_pixels(p.predicted, p.observed));
  return g;
}

std::string calibration_svg(std::span<const CalibrationPoint> points, const SvgOptions& options) {
  const CalibrationGeometry g = calibration_geometry(points, options);
  SvgOptions o = options;
  if (o.title.empty()) o.title = "Calibration";
  std::ostringstream os;
  header(os, o);
  const Frame f{g.left, g.top, g.right, g.bottom, 0.0, g.axis_max, 0.0, g.axis_max};
  os << "<line x1=\"" << num(f.x(0)) << "\" y1=\"" << num(f.y(0)) << "\" x2=\"" << num(f.x(g.axis_max))
     << "\" y2=\"" << num(f.y(g.axis_max)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"#08519c\" points=\"";
  for (std::size_t k = 0; k < g.markers.size(); ++k) {
    os << (k ? " " : "") << num(g.markers[k].first) << ',' << num(g.markers[k].second);
  }
  os << "\"/>\n";
  for (std::size_t k = 0; k < g.markers.size(); ++k) {
    os << "<circle cx=\"" << num(g.markers[k].first) << "\" cy=\"" << num(g.markers[k].second)
       << "\" r=\"3.5\" fill=\"#08519c\"><title>n=" << points[k].count << "</title></circle>\n";
  }
  y_axis(os, f, "observed rate");
  x_axis(os, f, "mean predicted probability", true);
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------

std::vector<ImportanceRow> importance_table(const EbmModel& model, const Cohort* cohort, std::size_t top_k) {
  const auto entries = cohort ? feature_importance(model, model.bin(*cohort)) : feature_importance(model);
  std::vector<ImportanceRow> rows;
  for (std::size_t i = 0; i < entries.size() && i < top_k; ++i) {
    rows.push_back({static_cast<int>(i + 1), entries[i].name, entries[i].importance});
  }
  return rows;
}

std::string format_importance_table(std::span<const ImportanceRow> rows) {
  std::size_t w = 7;
  for (const auto& r : rows) w = std::max(w, r.feature.size());
  std::ostringstream os;
  os << std::left << std::setw(4) << "rank" << "  " << std::setw(static_cast<int>(w)) << "feature"
     << "  mean |log-odds contribution|\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(4) << r.rank << "  " << std::setw(static_cast<int>(w)) << r.feature << "  "
       << std::fixed << std::setprecision(4) << r.importance << "\n";
  }
  return os.str();
}

std::string importance_csv(std::span<const ImportanceRow> rows) {
  std::ostringstream os;
  os << "rank,feature,importance\n";
  for (const auto& r : rows) os << r.rank << ',' << csv_field(r.feature) << ',' << shortest(r.importance) << '\n';
  return os.str();
}

std::string format_auroc_cell(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f ± %.3f", mean, std);
  return buf;
}

AurocTable auroc_table(std::span<const EvalReport> reports) {
  AurocTable t;
  for (const auto& r : reports) {
    if (std::find(t.outcomes.begin(), t.outcomes.end(), r.outcome) == t.outcomes.end()) t.outcomes.push_back(r.outcome);
    if (std::find(t.models.begin(), t.models.end(), r.model) == t.models.end()) t.models.push_back(r.model);
  }
  t.cells.assign(t.outcomes.size(), std::vector<std::optional<AurocCell>>(t.models.size()));
  for (const auto& r : reports) {
    const auto o = static_cast<std::size_t>(std::find(t.outcomes.begin(), t.outcomes.end(), r.outcome) - t.outcomes.begin());
    const auto m = static_cast<std::size_t>(std::find(t.models.begin(), t.models.end(), r.model) - t.models.begin());
    if (t.cells[o][m]) throw MetricError("two reports for model '" + r.model + "' on outcome '" + r.outcome + "'");
    t.cells[o][m] = AurocCell{r.auroc_mean, r.auroc_std};
  }
  t.mean_row.resize(t.models.size());
  for (std::size_t m = 0; m < t.models.size(); ++m) {
    std::vector<double> means, stds;
    for (std::size_t o = 0; o < t.outcomes.size(); ++o) {
      if (!t.cells[o][m]) break;
      means.push_back(t.cells[o][m]->mean);
      stds.push_back(t.cells[o][m]->std);
    }
    if (!means.empty() && means.size() == t.outcomes.size()) t.mean_row[m] = AurocCell{mean(means), mean(stds)};
  }
  return t;
}

std::string AurocTable::to_text() const {
  constexpr std::string_view kMeanRow = "Mean AUROC";
  std::size_t w0 = kMeanRow.size();
  for (const auto& o : outcomes) w0 = std::max(w0, o.size());
  std::vector<std::size_t> widths;
  for (const auto& m : models) widths.push_back(std::max<std::size_t>(m.size(), 13));
  auto cell = [](const std::optional<AurocCell>& c) { return c ? format_auroc_cell(c->mean, c->std) : std::string("-"); };
  // "±" is two bytes but one column
  auto pad = [](const std::string& s, std::size_t w) {
    std::size_t shown = 0;
    for (unsigned char ch : s) shown += (ch & 0xC0) != 0x80;
    return s + std::string(w > shown ? w - shown : 0, ' ');
  };
  std::ostringstream os;
  os << pad("", w0);
  for (std::size_t m = 0; m < models.size(); ++m) os << "  " << pad(models[m], widths[m]);
  os << "\n";
  auto line = [&](const std::string& name, const std::vector<std::optional<AurocCell>>& row) {
    std::string s = pad(name, w0);
    for (std::size_t m = 0; m < models.size(); ++m) s += "  " + pad(cell(row[m]), widths[m]);
    while (!s.empty() && s.back() == ' ') s.pop_back();
    os << s << "\n";
  };
  for (std::size_t o = 0; o < outcomes.size(); ++o) line(outcomes[o], cells[o]);
  line(std::string(kMeanRow), mean_row);
  return os.str();
}

nlohmann::json AurocTable::to_json() const {
  auto cell = [](const std::optional<AurocCell>& c) {
    return c ? nlohmann::json{{"mean", c->mean}, {"std", c->std}, {"text", format_auroc_cell(c->mean, c->std)}}
             : nlohmann::json(nullptr);
  };
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t o = 0; o < outcomes.size(); ++o) {
    nlohmann::json r = {{"outcome", outcomes[o]}};
    for (std::size_t m = 0; m < models.size(); ++m) r[models[m]] = cell(cells[o][m]);
    rows.push_back(r);
  }
  nlohmann::json mean = {{"outcome", "Mean AUROC"}};
  for (std::size_t m = 0; m < models.size(); ++m) mean[models[m]] = cell(mean_row[m]);
  rows.push_back(mean);
  return {{"models", models}, {"rows", rows}};
}

}  // namespace ebmkit
