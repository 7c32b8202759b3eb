#include "ebmkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ebmkit/error.hpp"
#include "ebmkit/numeric.hpp"
#include "ebmkit/preprocess.hpp"

namespace ebmkit {

double ShapeFunction::operator()(double x) const {
  double y = 0.0;
  if (!knots.empty()) {
    if (x <= knots.front().first) {
      y = knots.front().second;
    } else if (x >= knots.back().first) {
      y = knots.back().second;
    } else {
      auto hi = std::upper_bound(knots.begin(), knots.end(), x,
                                 [](double v, const auto& k) { return v < k.first; });
      auto lo = hi - 1;
      const double t = (x - lo->first) / (hi->first - lo->first);
      y = lo->second + t * (hi->second - lo->second);
    }
  }
  for (const auto& [at, jump] : steps) {
    if (x >= at) y += jump;
  }
  return y;
}

double ShapeFunction::operator()(const std::string& token) const {
  auto it = levels.find(token);
  return it == levels.end() ? 0.0 : it->second;
}

bool ShapeFunction::is_zero() const {
  auto zero = [](const auto& kv) { return kv.second == 0.0; };
  return std::all_of(knots.begin(), knots.end(), zero) && std::all_of(steps.begin(), steps.end(), zero) &&
         std::all_of(levels.begin(), levels.end(), zero);
}

double ContinuousMarginal::draw(Rng& rng) const {
  double v = 0.0;
  switch (kind) {
    case Kind::kNormal: v = location + scale * rng.normal(); break;
    case Kind::kLogNormal: v = location * std::exp(scale * rng.normal()); break;
    case Kind::kPoisson: v = static_cast<double>(rng.poisson(location)); break;
  }
  v = std::clamp(v, lower, upper);
  if (resolution >= 1.0) {
    v = std::round(v / resolution) * resolution;
  } else if (resolution > 0.0) {
    // divide by the integer scale so the result is the double nearest the decimal
    const double scale = std::round(1.0 / resolution);
    v = std::round(v * scale) / scale;
  }
  return v;
}

void SynthSpec::validate() const {
  if (outcome.empty()) throw ConfigError("synthetic spec needs an outcome name");
  if (hospitals.size() < 2) throw ConfigError("synthetic spec needs at least two hospitals");
  std::set<std::string> names;
  for (const auto& c : continuous) {
    if (!names.insert(c.name).second) throw ConfigError("duplicate feature '" + c.name + "'");
    if (c.kind != ContinuousMarginal::Kind::kPoisson && !(c.scale > 0.0)) {
      throw ConfigError("feature '" + c.name + "' needs a positive scale");
    }
    if (c.kind == ContinuousMarginal::Kind::kLogNormal && !(c.location > 0.0)) {
      throw ConfigError("log-normal feature '" + c.name + "' needs a positive median");
    }
    if (c.kind == ContinuousMarginal::Kind::kPoisson && !(c.location >= 0.0 && c.location < 30.0)) {
      throw ConfigError("Poisson feature '" + c.name + "' needs a mean in [0, 30)");
    }
    if (!(c.lower <= c.upper)) throw ConfigError("feature '" + c.name + "' has lower > upper");
    if (!(c.missing_rate >= 0.0 && c.missing_rate < 1.0)) {
      throw ConfigError("feature '" + c.name + "' missing rate must lie in [0, 1)");
    }
  }
  for (const auto& c : categorical) {
    if (!names.insert(c.name).second) throw ConfigError("duplicate feature '" + c.name + "'");
    if (c.tokens.empty() || c.tokens.size() != c.weights.size()) {
      throw ConfigError("categorical feature '" + c.name + "' needs one weight per token");
    }
    for (double w : c.weights) {
      if (!(w >= 0.0)) throw ConfigError("categorical feature '" + c.name + "' has a negative weight");
    }
    if (!(c.missing_rate >= 0.0 && c.missing_rate < 1.0)) {
      throw ConfigError("feature '" + c.name + "' missing rate must lie in [0, 1)");
    }
  }
  if (hospital_shift) {
    if (!names.insert(hospital_shift->unit_column).second) throw ConfigError("unit column clashes with a feature");
    if (hospital_shift->units_per_hospital < 1 || !(hospital_shift->sd >= 0.0)) {
      throw ConfigError("invalid hospital shift");
    }
  }
  for (const auto& [h, w] : hospitals) {
    if (h.empty() || !(w > 0.0)) throw ConfigError("hospitals need ids and positive sizes");
  }
  for (const auto& [name, shape] : truth.shapes) {
    if (!names.count(name)) throw ConfigError("truth shape for unknown feature '" + name + "'");
  }
  if (truth.pair) {
    for (const auto* f : {&truth.pair->first, &truth.pair->second}) {
      auto it = std::find_if(continuous.begin(), continuous.end(), [&](const auto& c) { return c.name == *f; });
      if (it == continuous.end()) throw ConfigError("interaction feature '" + *f + "' must be continuous");
    }
  }
  for (const auto& a : allowlist) {
    if (!names.count(a)) throw ConfigError("allowlist names unknown feature '" + a + "'");
  }
  if (!(truth.target_prevalence > 0.0 && truth.target_prevalence < 1.0)) {
    throw ConfigError("target prevalence must lie in (0, 1)");
  }
  if (!(error_rate >= 0.0 && error_rate < 1.0)) throw ConfigError("error rate must lie in [0, 1)");
}

FeatureSchema SynthSpec::schema() const {
  std::vector<ColumnSpec> cols;
  for (const auto& c : continuous) cols.push_back({c.name, ColumnKind::kContinuous, c.unit});
  for (const auto& c : categorical) cols.push_back({c.name, ColumnKind::kCategorical, ""});
  if (hospital_shift) cols.push_back({hospital_shift->unit_column, ColumnKind::kCategorical, ""});
  cols.push_back({outcome, ColumnKind::kLabel, ""});
  cols.push_back({group_column, ColumnKind::kGroupId, ""});
  std::map<std::string, std::vector<std::string>> allow;
  if (!allowlist.empty()) {
    allow[outcome] = allowlist;
    // the unit column is always usable, so site effects can be learned
    if (hospital_shift) allow[outcome].push_back(hospital_shift->unit_column);
  }
  return FeatureSchema(std::move(cols), std::move(allow));
}

namespace {

std::size_t draw_index(Rng& rng, std::span<const double> cumulative) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

std::vector<double> cumulative(std::span<const double> w) {
  std::vector<double> c(w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = s += w[i];
  return c;
}

// Covariates of one row before masking, plus their truth logit without the
// intercept.
struct RowDraw {
  std::size_t hospital = 0;
  std::vector<double> values;
  std::vector<std::size_t> tokens;
  std::size_t unit = 0;
  double logit = 0.0;
};

class Sampler {
 public:
  explicit Sampler(const SynthSpec& spec) : spec_(spec) {
    std::vector<double> hw;
    for (const auto& [h, w] : spec.hospitals) hw.push_back(w);
    hospital_cdf_ = cumulative(hw);
    for (const auto& c : spec.categorical) token_cdf_.push_back(cumulative(c.weights));
    for (const auto& c : spec.continuous) {
      auto it = spec.truth.shapes.find(c.name);
      cont_shapes_.push_back(it == spec.truth.shapes.end() ? nullptr : &it->second);
    }
    for (const auto& c : spec.categorical) {
      auto it = spec.truth.shapes.find(c.name);
      cat_shapes_.push_back(it == spec.truth.shapes.end() ? nullptr : &it->second);
    }
    if (spec.truth.pair) {
      for (std::size_t i = 0; i < spec.continuous.size(); ++i) {
        if (spec.continuous[i].name == spec.truth.pair->first) pair_a_ = i;
        if (spec.continuous[i].name == spec.truth.pair->second) pair_b_ = i;
      }
    }
    if (spec.hospital_shift) {
      // unit effects belong to the simulated world, not to one sample of it
      Rng world(0x5eed0f5172e5ULL);
      const auto units = spec.hospitals.size() * static_cast<std::size_t>(spec.hospital_shift->units_per_hospital);
      for (std::size_t u = 0; u < units; ++u) unit_offsets_.push_back(spec.hospital_shift->sd * world.normal());
    }
  }

  RowDraw draw(Rng& rng) const {
    RowDraw row;
    row.hospital = draw_index(rng, hospital_cdf_);
    row.values.resize(spec_.continuous.size());
    for (std::size_t i = 0; i < spec_.continuous.size(); ++i) {
      row.values[i] = spec_.continuous[i].draw(rng);
      if (cont_shapes_[i]) row.logit += (*cont_shapes_[i])(row.values[i]);
    }
    row.tokens.resize(spec_.categorical.size());
    for (std::size_t i = 0; i < spec_.categorical.size(); ++i) {
      row.tokens[i] = draw_index(rng, token_cdf_[i]);
      if (cat_shapes_[i]) row.logit += (*cat_shapes_[i])(spec_.categorical[i].tokens[row.tokens[i]]);
    }
    if (spec_.truth.pair) row.logit += (*spec_.truth.pair)(row.values[pair_a_], row.values[pair_b_]);
    if (spec_.hospital_shift) {
      const auto per = static_cast<std::size_t>(spec_.hospital_shift->units_per_hospital);
      row.unit = row.hospital * per + rng.below(per);
      row.logit += unit_offsets_[row.unit];
    }
    return row;
  }

 private:
  const SynthSpec& spec_;
  std::vector<double> hospital_cdf_;
  std::vector<std::vector<double>> token_cdf_;
  std::vector<const ShapeFunction*> cont_shapes_;
  std::vector<const ShapeFunction*> cat_shapes_;
  std::size_t pair_a_ = 0, pair_b_ = 0;
  std::vector<double> unit_offsets_;
};

}  // namespace

SyntheticCohort generate_synthetic(const SynthSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("synthetic cohort size must be at least 1");
  spec.validate();
  const FeatureSchema schema = spec.schema();
  const Sampler sampler(spec);
  Rng rng(seed);

  // columns that can receive an implausible value
  struct Corruption {
    std::size_t column;
    double base, span;
  };
  std::vector<Corruption> corruptions;
  for (std::size_t i = 0; i < spec.continuous.size(); ++i) {
    const auto& name = spec.continuous[i].name;
    if (name == kTimeToDeliveryColumn) corruptions.push_back({i, -0.1, -5.0});
    if (name == kBirthWeightColumn) corruptions.push_back({i, 8000.0 + 10.0, 2000.0});
    if (name == kBmiColumn) corruptions.push_back({i, 120.0 + 0.5, 40.0});
  }

  SyntheticCohort out{Cohort(schema), {}};
  out.true_logits.reserve(n);
  const std::size_t ncols = schema.columns().size();
  std::vector<double> nums(ncols, kMissing);
  std::vector<std::string> toks(ncols);
  const std::size_t label_col = schema.index_of(spec.outcome);
  const std::size_t group_col = schema.group_column();
  const std::size_t cat_offset = spec.continuous.size();

  for (std::size_t r = 0; r < n; ++r) {
    const RowDraw row = sampler.draw(rng);
    const double z = spec.truth.intercept + row.logit;
    out.true_logits.push_back(z);
    nums[label_col] = rng.bernoulli(sigmoid(z)) ? 1.0 : 0.0;
    toks[group_col] = spec.hospitals[row.hospital].first;

    for (std::size_t i = 0; i < spec.continuous.size(); ++i) {
      nums[i] = rng.bernoulli(spec.continuous[i].missing_rate) ? kMissing : row.values[i];
    }
    for (std::size_t i = 0; i < spec.categorical.size(); ++i) {
      const auto& c = spec.categorical[i];
      toks[cat_offset + i] = rng.bernoulli(c.missing_rate) ? std::string(kMissingToken) : c.tokens[row.tokens[i]];
    }
    if (spec.hospital_shift) {
      const auto per = static_cast<std::size_t>(spec.hospital_shift->units_per_hospital);
      toks[cat_offset + spec.categorical.size()] =
          spec.hospitals[row.hospital].first + "-U" + std::to_string(row.unit % per + 1);
    }
    if (!corruptions.empty() && rng.bernoulli(spec.error_rate)) {
      const auto& c = corruptions[rng.below(corruptions.size())];
      nums[c.column] = std::round((c.base + c.span * rng.uniform()) * 10.0) / 10.0;
    }
    out.cohort.append_row(static_cast<std::int64_t>(r), nums, toks);
  }
  return out;
}

double solve_intercept_for_prevalence(const SynthSpec& spec, double target, std::size_t sample,
                                      std::uint64_t seed) {
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("target prevalence must lie in (0, 1)");
  if (sample < 1) throw ConfigError("Monte-Carlo sample must hold at least one row");
  spec.validate();
  const Sampler sampler(spec);
  Rng rng(seed);
  std::vector<double> z(sample);
  for (auto& v : z) v = sampler.draw(rng).logit;

  auto prevalence = [&](double b) {
    double s = 0.0;
    for (double v : z) s += sigmoid(b + v);
    return s / static_cast<double>(z.size());
  };
  double lo = -10.0, hi = 10.0;
  while (prevalence(lo) > target) {
    if (lo <= -30.0) throw ConfigError("cannot bracket the intercept for the target prevalence");
    lo = std::max(-30.0, lo - 10.0);
  }
  while (prevalence(hi) < target) {
    if (hi >= 30.0) throw ConfigError("cannot bracket the intercept for the target prevalence");
    hi = std::min(30.0, hi + 10.0);
  }
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double p = prevalence(mid);
    if (std::abs(p - target) <= 1e-4 * 1e-3 || hi - lo < 1e-12) break;
    (p < target ? lo : hi) = mid;
  }
  return mid;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::string kind_name(ContinuousMarginal::Kind k) {
  switch (k) {
    case ContinuousMarginal::Kind::kNormal: return "normal";
    case ContinuousMarginal::Kind::kLogNormal: return "lognormal";
    case ContinuousMarginal::Kind::kPoisson: return "poisson";
  }
  return "?";
}

ContinuousMarginal::Kind parse_kind(const std::string& s) {
  if (s == "normal") return ContinuousMarginal::Kind::kNormal;
  if (s == "lognormal") return ContinuousMarginal::Kind::kLogNormal;
  if (s == "poisson") return ContinuousMarginal::Kind::kPoisson;
  throw ConfigError("unknown distribution '" + s + "'");
}

nlohmann::json shape_to_json(const ShapeFunction& s) {
  nlohmann::json j = nlohmann::json::object();
  if (!s.knots.empty()) j["knots"] = s.knots;
  if (!s.steps.empty()) j["steps"] = s.steps;
  if (!s.levels.empty()) j["levels"] = s.levels;
  return j;
}

ShapeFunction shape_from_json(const nlohmann::json& j) {
  ShapeFunction s;
  if (j.contains("knots")) s.knots = j.at("knots").get<std::vector<std::pair<double, double>>>();
  if (j.contains("steps")) s.steps = j.at("steps").get<std::vector<std::pair<double, double>>>();
  if (j.contains("levels")) s.levels = j.at("levels").get<std::map<std::string, double>>();
  if (!std::is_sorted(s.knots.begin(), s.knots.end())) throw ConfigError("shape knots must be ascending");
  return s;
}

}  // namespace

nlohmann::json SynthSpec::to_json() const {
  nlohmann::json cont = nlohmann::json::array();
  for (const auto& c : continuous) {
    cont.push_back({{"name", c.name},
                    {"unit", c.unit},
                    {"distribution", kind_name(c.kind)},
                    {"location", c.location},
                    {"scale", c.scale},
                    {"lower", c.lower},
                    {"upper", c.upper},
                    {"resolution", c.resolution},
                    {"missing_rate", c.missing_rate}});
  }
  nlohmann::json cat = nlohmann::json::array();
  for (const auto& c : categorical) {
    cat.push_back({{"name", c.name}, {"tokens", c.tokens}, {"weights", c.weights}, {"missing_rate", c.missing_rate}});
  }
  nlohmann::json shapes = nlohmann::json::object();
  for (const auto& [name, s] : truth.shapes) shapes[name] = shape_to_json(s);
  nlohmann::json jt = {{"intercept", truth.intercept}, {"target_prevalence", truth.target_prevalence}, {"shapes", shapes}};
  if (truth.pair) {
    jt["pair"] = {{"first", truth.pair->first},
                  {"second", truth.pair->second},
                  {"first_cut", truth.pair->first_cut},
                  {"second_cut", truth.pair->second_cut},
                  {"amplitude", truth.pair->amplitude}};
  }
  nlohmann::json hosp = nlohmann::json::array();
  for (const auto& [h, w] : hospitals) hosp.push_back({{"id", h}, {"size", w}});
  nlohmann::json j = {{"name", name},
                      {"outcome", outcome},
                      {"continuous", cont},
                      {"categorical", cat},
                      {"hospitals", hosp},
                      {"group_column", group_column},
                      {"allowlist", allowlist},
                      {"error_rate", error_rate},
                      {"truth", jt}};
  if (hospital_shift) {
    j["hospital_shift"] = {{"sd", hospital_shift->sd},
                           {"units_per_hospital", hospital_shift->units_per_hospital},
                           {"unit_column", hospital_shift->unit_column}};
  }
  return j;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.name = j.value("name", std::string{});
    s.outcome = j.at("outcome").get<std::string>();
    for (const auto& jc : j.at("continuous")) {
      ContinuousMarginal c;
      c.name = jc.at("name").get<std::string>();
      c.unit = jc.value("unit", std::string{});
      c.kind = parse_kind(jc.at("distribution").get<std::string>());
      c.location = jc.at("location").get<double>();
      c.scale = jc.value("scale", 1.0);
      c.lower = jc.value("lower", -1e300);
      c.upper = jc.value("upper", 1e300);
      c.resolution = jc.value("resolution", 0.0);
      c.missing_rate = jc.value("missing_rate", 0.0);
      s.continuous.push_back(std::move(c));
    }
    for (const auto& jc : j.at("categorical")) {
      s.categorical.push_back({jc.at("name").get<std::string>(), jc.at("tokens").get<std::vector<std::string>>(),
                               jc.at("weights").get<std::vector<double>>(), jc.value("missing_rate", 0.0)});
    }
    for (const auto& jh : j.at("hospitals")) {
      s.hospitals.emplace_back(jh.at("id").get<std::string>(), jh.at("size").get<double>());
    }
    s.group_column = j.value("group_column", std::string("hospital"));
    s.allowlist = j.value("allowlist", std::vector<std::string>{});
    s.error_rate = j.value("error_rate", 0.0);
    const auto& jt = j.at("truth");
    s.truth.intercept = jt.at("intercept").get<double>();
    s.truth.target_prevalence = jt.at("target_prevalence").get<double>();
    for (const auto& [name, js] : jt.at("shapes").items()) s.truth.shapes[name] = shape_from_json(js);
    if (jt.contains("pair")) {
      const auto& jp = jt.at("pair");
      s.truth.pair = PairInteraction{jp.at("first").get<std::string>(), jp.at("second").get<std::string>(),
                                     jp.at("first_cut").get<double>(), jp.at("second_cut").get<double>(),
                                     jp.at("amplitude").get<double>()};
    }
    if (j.contains("hospital_shift")) {
      const auto& jh = j.at("hospital_shift");
      s.hospital_shift = HospitalShift{jh.at("sd").get<double>(), jh.value("units_per_hospital", 2),
                                       jh.value("unit_column", std::string("delivery_unit"))};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

using Kind = ContinuousMarginal::Kind;

ContinuousMarginal marginal(std::string name, std::string unit, Kind kind, double location, double scale,
                            double lower, double upper, double resolution, double missing) {
  return {std::move(name), std::move(unit), kind, location, scale, lower, upper, resolution, missing};
}

// Obstetric-flavoured marginals shared by every preset. Values are
// illustrative ranges, not clinical reference data.
void add_common_marginals(SynthSpec& s) {
  s.continuous = {
      marginal("maternal_age", "years", Kind::kNormal, 29.5, 5.8, 14, 52, 1, 0.005),
      marginal(std::string(kBmiColumn), "kg/m^2", Kind::kLogNormal, 27.0, 0.22, 15, 75, 0.1, 0.03),
      marginal("maternal_height_cm", "cm", Kind::kNormal, 163.5, 7.0, 135, 195, 1, 0.02),
      marginal("gestational_weeks", "weeks", Kind::kNormal, 39.0, 1.6, 24, 42, 1, 0.005),
      marginal(std::string(kBirthWeightColumn), "g", Kind::kNormal, 3400, 500, 600, 6000, 10, 0.01),
      marginal(std::string(kTimeToDeliveryColumn), "h", Kind::kLogNormal, 7.0, 0.7, 0, 60, 0.1, 0.02),
      marginal("membrane_rupture_h", "h", Kind::kLogNormal, 5.0, 0.9, 0, 96, 0.1, 0.02),
      marginal("prev_stillbirths", "count", Kind::kPoisson, 0.04, 1.0, 0, 6, 1, 0.0),
  };
  s.categorical = {
      {"race", {"Asian", "Black", "Native American", "Other", "Pacific Islander", "White"},
       {0.15, 0.12, 0.04, 0.10, 0.03, 0.56}, 0.056},
      {"hispanic", {"No", "Yes"}, {0.82, 0.18}, 0.037},
      {"diabetes", {"No", "Yes"}, {0.92, 0.08}, 0.0},
      {"pre_pregnancy_hypertension", {"No", "Yes"}, {0.95, 0.05}, 0.0},
      {"preeclampsia_ghtn", {"No", "Yes"}, {0.91, 0.09}, 0.0},
      {"c_section", {"No", "Yes"}, {0.70, 0.30}, 0.0},
  };
  // twenty hospitals of unequal size
  for (int h = 1; h <= 20; ++h) {
    char id[8];
    std::snprintf(id, sizeof id, "H%02d", h);
    s.hospitals.emplace_back(id, 1.0 / std::pow(h, 0.7));
  }
  s.error_rate = 0.001;
}

ShapeFunction knots(std::vector<std::pair<double, double>> k, std::vector<std::pair<double, double>> steps = {}) {
  ShapeFunction s;
  s.knots = std::move(k);
  s.steps = std::move(steps);
  return s;
}

ShapeFunction levels(std::map<std::string, double> l) {
  ShapeFunction s;
  s.levels = std::move(l);
  return s;
}

SynthSpec smm() {
  SynthSpec s;
  s.name = "smm";
  s.outcome = "smm";
  add_common_marginals(s);
  auto& t = s.truth.shapes;
  t["preeclampsia_ghtn"] = levels({{"Yes", 1.3}});
  t[std::string(kTimeToDeliveryColumn)] = knots({{0, -0.3}, {6, 0}, {20, 0.6}, {40, 1.2}});
  t["c_section"] = levels({{"Yes", 0.9}});
  t[std::string(kBirthWeightColumn)] = knots({{1000, 0.8}, {2500, 0.2}, {3400, 0}, {4200, 0.2}, {5000, 0.6}});
  t["gestational_weeks"] = knots({{24, 1.0}, {34, 0.4}, {39, 0}, {42, 0.2}});
  t["maternal_age"] = knots({{14, 0.2}, {25, 0}, {35, 0.1}, {50, 0.5}}, {{35, 0.15}});
  t["race"] = levels({{"Black", 0.3}, {"Asian", 0.1}, {"Other", 0.05}});
  s.truth.pair = PairInteraction{"maternal_age", std::string(kBmiColumn), 30, 27, 0.3};
  s.truth.target_prevalence = 0.0140;
  return s;
}

SynthSpec shoulder_dystocia() {
  SynthSpec s;
  s.name = "shoulder_dystocia";
  s.outcome = "shoulder_dystocia";
  add_common_marginals(s);
  auto& t = s.truth.shapes;
  t[std::string(kBirthWeightColumn)] =
      knots({{1000, -2.0}, {3250, -0.6}, {4250, 0.9}, {5500, 1.8}}, {{4000, 0.4}});
  t["membrane_rupture_h"] = knots({{0, -0.4}, {3, 0}, {12, 0.5}, {40, 0.9}});
  t["maternal_height_cm"] = knots({{140, 0.9}, {155, 0.4}, {165, 0}, {180, -0.4}, {195, -0.6}});
  t["diabetes"] = levels({{"Yes", 0.6}});
  t["gestational_weeks"] = knots({{24, -1.0}, {37, -0.2}, {40, 0.1}, {42, 0.3}});
  t[std::string(kBmiColumn)] = knots({{15, -0.2}, {25, 0}, {40, 0.3}, {75, 0.5}});
  t["race"] = levels({{"Black", 0.2}, {"Asian", -0.2}, {"Pacific Islander", 0.2}});
  s.truth.pair = PairInteraction{std::string(kBirthWeightColumn), "maternal_height_cm", 3400, 163, 0.3};
  s.truth.target_prevalence = 0.0221;
  return s;
}

SynthSpec preterm_preeclampsia() {
  SynthSpec s;
  s.name = "preterm_preeclampsia";
  s.outcome = "preterm_preeclampsia";
  add_common_marginals(s);
  auto& t = s.truth.shapes;
  t[std::string(kBmiColumn)] = knots({{15, -1.2}, {22, -0.6}, {27, 0}, {35, 0.8}, {50, 1.6}, {75, 2.0}});
  t["prev_stillbirths"] = knots({{0, 0}, {1, 1.2}, {3, 1.8}});
  t["pre_pregnancy_hypertension"] = levels({{"Yes", 1.1}});
  t["maternal_age"] = knots({{14, 0.3}, {25, 0}, {38, 0.2}, {44, 0.4}, {52, 0.6}}, {{44, 0.6}});
  t["diabetes"] = levels({{"Yes", 0.4}});
  t["race"] = levels({{"Black", 0.3}, {"Native American", 0.2}});
  s.truth.pair = PairInteraction{"maternal_age", "maternal_height_cm", 30, 163, 0.25};
  s.truth.target_prevalence = 0.0205;
  // known before 37 weeks only
  s.allowlist = {"maternal_age", std::string(kBmiColumn), "maternal_height_cm", "prev_stillbirths", "race",
                 "hispanic", "diabetes", "pre_pregnancy_hypertension"};
  return s;
}

// Every allowlisted feature carries a strong shape so each one can be checked
// for recovery. Birth weight has a step at 4000 g; age is U-shaped.
SynthSpec oracle() {
  SynthSpec s;
  s.name = "oracle";
  s.outcome = "outcome";
  add_common_marginals(s);
  auto& t = s.truth.shapes;
  t[std::string(kBirthWeightColumn)] =
      knots({{1500, -2.0}, {2800, -0.9}, {3250, -0.6}, {4250, 0.6}, {5500, 1.4}}, {{4000, 0.5}});
  t["maternal_height_cm"] = knots({{140, 1.2}, {163, 0}, {190, -0.9}});
  t["maternal_age"] = knots({{14, 1.6}, {20, 0.8}, {28, 0}, {36, 0.8}, {44, 1.8}, {52, 2.4}});
  t[std::string(kBmiColumn)] = knots({{15, -1.0}, {27, 0}, {40, 1.0}, {75, 1.8}});
  t["membrane_rupture_h"] = knots({{0, -1.0}, {2, -0.7}, {6, 0}, {15, 0.7}, {40, 1.2}});
  t["race"] = levels({{"Black", 0.8}, {"Asian", -0.7}, {"Native American", 0.7}, {"Pacific Islander", -0.4},
                      {"Other", 0.3}});
  t["diabetes"] = levels({{"Yes", 0.8}});
  s.truth.pair = PairInteraction{"maternal_age", std::string(kBmiColumn), 29, 27, 0.5};
  s.truth.target_prevalence = 0.02;
  s.allowlist = {"maternal_age", std::string(kBmiColumn), "maternal_height_cm", std::string(kBirthWeightColumn),
                 "membrane_rupture_h", "race", "diabetes"};
  return s;
}

}  // namespace

std::vector<std::string> preset_names() { return {"smm", "shoulder_dystocia", "preterm_preeclampsia", "oracle"}; }

SynthSpec preset(const std::string& name) {
  SynthSpec s;
  if (name == "smm") {
    s = smm();
  } else if (name == "shoulder_dystocia") {
    s = shoulder_dystocia();
  } else if (name == "preterm_preeclampsia") {
    s = preterm_preeclampsia();
  } else if (name == "oracle") {
    s = oracle();
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  s.truth.intercept = solve_intercept_for_prevalence(s, s.truth.target_prevalence, 200000, 1);
  return s;
}

}  // namespace ebmkit
