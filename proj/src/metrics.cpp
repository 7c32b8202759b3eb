#include "ebmkit/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "ebmkit/error.hpp"
#include "ebmkit/logistic.hpp"
#include "ebmkit/model.hpp"
#include "ebmkit/numeric.hpp"
#include "ebmkit/train.hpp"

namespace ebmkit {

namespace {

void check_inputs(std::span<const double> scores, std::span<const double> labels, std::size_t& pos,
                  std::size_t& neg) {
  if (scores.size() != labels.size()) throw MetricError("score and label counts differ");
  pos = neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) {
      ++pos;
    } else if (labels[i] == 0.0) {
      ++neg;
    } else {
      throw MetricError("labels must be 0 or 1");
    }
    if (std::isnan(scores[i])) throw MetricError("score is NaN");
  }
  if (pos == 0 || neg == 0) throw MetricError("AUROC needs both positive and negative labels");
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const double> labels) {
  std::size_t pos = 0, neg = 0;
  check_inputs(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // sum of midranks of the positives
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double positives = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) positives += labels[order[j++]];
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += positives * midrank;
    i = j;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double auroc_bruteforce(std::span<const double> scores, std::span<const double> labels) {
  std::size_t pos = 0, neg = 0;
  check_inputs(scores, labels, pos, neg);
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

double log_loss(std::span<const double> probs, std::span<const double> labels) {
  if (probs.size() != labels.size()) throw MetricError("probability and label counts differ");
  if (probs.empty()) throw MetricError("log-loss of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    s -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return s / static_cast<double>(probs.size());
}

std::vector<CalibrationPoint> calibration_curve(std::span<const double> probs, std::span<const double> labels,
                                                int bins, CalibrationBinning binning) {
  if (probs.size() != labels.size()) throw MetricError("probability and label counts differ");
  if (bins < 1) throw MetricError("calibration needs at least one bin");
  if (probs.size() < static_cast<std::size_t>(bins)) throw MetricError("fewer rows than calibration bins");
  require_probabilities(probs);
  const std::size_t n = probs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });

  // bin boundaries as positions in sorted order
  std::vector<std::size_t> ends;
  if (binning == CalibrationBinning::kQuantile) {
    for (int b = 1; b <= bins; ++b) {
      std::size_t end = static_cast<std::size_t>(b) * n / static_cast<std::size_t>(bins);
      // keep ties together
      while (end > 0 && end < n && probs[order[end]] == probs[order[end - 1]]) ++end;
      if (end > (ends.empty() ? 0 : ends.back())) ends.push_back(end);
    }
  } else {
    std::size_t pos = 0;
    for (int b = 1; b <= bins; ++b) {
      const double hi = static_cast<double>(b) / bins;
      while (pos < n && (probs[order[pos]] < hi || b == bins)) ++pos;
      if (pos > (ends.empty() ? 0 : ends.back())) ends.push_back(pos);
    }
  }

  std::vector<CalibrationPoint> out;
  std::size_t begin = 0;
  for (std::size_t end : ends) {
    CalibrationPoint pt;
    double sp = 0.0, sy = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      sp += probs[order[k]];
      sy += labels[order[k]];
    }
    pt.count = end - begin;
    pt.predicted = sp / static_cast<double>(pt.count);
    pt.observed = sy / static_cast<double>(pt.count);
    out.push_back(pt);
    begin = end;
  }
  return out;
}

double max_calibration_error(std::span<const CalibrationPoint> points) {
  double m = 0.0;
  for (const auto& p : points) m = std::max(m, std::abs(p.observed - p.predicted));
  return m;
}

// ---------------------------------------------------------------------------

Recipe ebm_recipe(const TrainConfig& config, const std::string& outcome) {
  return [config, outcome](const Cohort& train, const Cohort& test) {
    const EbmModel model = train_ebm_pipeline(train, config, outcome, ExclusionRuleSet{}, nullptr);
    return predict_proba(model, test);
  };
}

Recipe lr_recipe(const std::string& outcome, const LrOptions& options) {
  return [options, outcome](const Cohort& train, const Cohort& test) {
    return predict_lr(train_lr_pipeline(train, outcome, options), test);
  };
}

Recipe external_scores_recipe(std::map<std::int64_t, double> scores) {
  return [scores = std::move(scores)](const Cohort&, const Cohort& test) {
    return align_scores(scores, test.row_ids());
  };
}

namespace {

bool all_probabilities(std::span<const double> s) {
  return std::all_of(s.begin(), s.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

void require_both_classes(std::span<const double> labels, const std::string& what) {
  const double pos = std::accumulate(labels.begin(), labels.end(), 0.0);
  if (pos == 0.0 || pos == static_cast<double>(labels.size())) {
    throw MetricError(what + " holds a single class; use a label-stratified split or fewer folds");
  }
}

}  // namespace

CvResult cv_evaluate(const Recipe& recipe, const Cohort& cohort, const std::string& outcome, int k,
                     std::uint64_t seed) {
  const auto folds = kfold(cohort, outcome, k, seed);
  CvResult res;
  bool probabilities = true;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const Cohort train = cohort.subset(folds[f].train);
    const Cohort test = cohort.subset(folds[f].validation);
    const auto labels = test.labels(outcome);
    require_both_classes(labels, "fold " + std::to_string(f + 1));
    const auto scores = recipe(train, test);
    if (scores.size() != test.rows()) throw MetricError("recipe returned the wrong number of scores");
    res.fold_aurocs.push_back(auroc(scores, labels));
    probabilities = probabilities && all_probabilities(scores);
    if (probabilities) res.fold_log_losses.push_back(log_loss(scores, labels));
  }
  if (!probabilities) res.fold_log_losses.clear();
  res.mean = mean(res.fold_aurocs);
  res.std = sample_std(res.fold_aurocs);
  return res;
}

namespace {

HoldoutResult run_holdout(const Recipe& recipe, const Cohort& cohort, const std::string& outcome,
                          std::vector<std::size_t> train_rows, std::vector<std::size_t> test_rows) {
  HoldoutResult res;
  const Cohort train = cohort.subset(train_rows);
  const Cohort test = cohort.subset(test_rows);
  require_both_classes(test.labels(outcome), "held-out set");
  res.scores = recipe(train, test);
  if (res.scores.size() != test.rows()) throw MetricError("recipe returned the wrong number of scores");
  const auto labels = test.labels(outcome);
  res.labels.assign(labels.begin(), labels.end());
  res.auroc = auroc(res.scores, res.labels);
  res.train_rows = std::move(train_rows);
  res.test_rows = std::move(test_rows);
  return res;
}

}  // namespace

HoldoutResult external_validate(const Recipe& recipe, const Cohort& cohort, const std::string& outcome,
                                std::uint64_t seed, double target_fraction) {
  HospitalSplit split = hospital_split(cohort, target_fraction, seed);
  HoldoutResult res = run_holdout(recipe, cohort, outcome, std::move(split.train_rows), std::move(split.test_rows));
  res.train_hospitals = std::move(split.chosen);
  return res;
}

HoldoutResult random_split_validate(const Recipe& recipe, const Cohort& cohort, const std::string& outcome,
                                    std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> train_rows, test_rows;
  outer_bag_split(cohort.labels(outcome), 1.0 - train_fraction, seed, train_rows, test_rows);
  return run_holdout(recipe, cohort, outcome, std::move(train_rows), std::move(test_rows));
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto c = line.find(',', start);
    out.push_back(trim(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start)));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

}  // namespace

std::map<std::int64_t, double> parse_external_scores(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::map<std::int64_t, double> out;
  std::size_t line_no = 0;
  std::size_t id_col = 0, score_col = 0;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (header) {
      auto id = std::find(cells.begin(), cells.end(), "row_id");
      auto sc = std::find(cells.begin(), cells.end(), "score");
      if (id == cells.end() || sc == cells.end()) throw DataError("score file header must name row_id and score", 1);
      id_col = static_cast<std::size_t>(id - cells.begin());
      score_col = static_cast<std::size_t>(sc - cells.begin());
      header = false;
      continue;
    }
    if (cells.size() <= std::max(id_col, score_col)) throw DataError("score file row is too short", line_no);
    std::int64_t id = 0;
    const auto idc = cells[id_col];
    if (std::from_chars(idc.data(), idc.data() + idc.size(), id).ec != std::errc{}) {
      throw DataError("bad row_id '" + std::string(idc) + "'", line_no);
    }
    double score = 0.0;
    const auto scc = cells[score_col];
    const auto r = std::from_chars(scc.data(), scc.data() + scc.size(), score);
    if (r.ec != std::errc{} || r.ptr != scc.data() + scc.size() || !std::isfinite(score)) {
      throw DataError("bad score '" + std::string(scc) + "'", line_no);
    }
    if (!out.emplace(id, score).second) throw DataError("duplicate row_id " + std::to_string(id), line_no);
  }
  if (header) throw DataError("score file is empty", 0);
  return out;
}

std::map<std::int64_t, double> ingest_external_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open score file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_external_scores(ss.str());
}

std::vector<double> align_scores(const std::map<std::int64_t, double>& scores,
                                 std::span<const std::int64_t> row_ids) {
  std::vector<double> out;
  out.reserve(row_ids.size());
  std::vector<std::int64_t> missing;
  for (auto id : row_ids) {
    auto it = scores.find(id);
    if (it == scores.end()) {
      missing.push_back(id);
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty()) {
    std::string msg = "external scores missing for " + std::to_string(missing.size()) + " row id(s):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + std::to_string(missing[i]);
    if (missing.size() > 20) msg += " ...";
    throw MetricError(msg);
  }
  return out;
}

void require_probabilities(std::span<const double> scores) {
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw MetricError("calibration needs probabilities in [0, 1]; got " + std::to_string(s));
    }
  }
}

// ---------------------------------------------------------------------------

nlohmann::json EvalReport::to_json() const {
  nlohmann::json cal = nlohmann::json::array();
  for (const auto& p : calibration) {
    cal.push_back({{"predicted", p.predicted}, {"observed", p.observed}, {"count", p.count}});
  }
  nlohmann::json j = {{"model", model},
                      {"outcome", outcome},
                      {"protocol", protocol},
                      {"auroc_mean", auroc_mean},
                      {"auroc_std", auroc_std},
                      {"fold_aurocs", fold_aurocs},
                      {"calibration", cal},
                      {"rows", rows},
                      {"metadata", metadata}};
  j["log_loss"] = log_loss ? nlohmann::json(*log_loss) : nlohmann::json(nullptr);
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.model = j.at("model").get<std::string>();
    r.outcome = j.at("outcome").get<std::string>();
    r.protocol = j.value("protocol", std::string{});
    r.auroc_mean = j.at("auroc_mean").get<double>();
    r.auroc_std = j.at("auroc_std").get<double>();
    r.fold_aurocs = j.value("fold_aurocs", std::vector<double>{});
    if (j.contains("log_loss") && !j.at("log_loss").is_null()) r.log_loss = j.at("log_loss").get<double>();
    for (const auto& p : j.value("calibration", nlohmann::json::array())) {
      r.calibration.push_back(
          {p.at("predicted").get<double>(), p.at("observed").get<double>(), p.at("count").get<std::size_t>()});
    }
    r.rows = j.value("rows", std::size_t{0});
    r.metadata = j.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw MetricError(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

std::string report_text(std::span<const EvalReport> reports) {
  std::size_t wm = 5, wo = 7, wp = 8;
  for (const auto& r : reports) {
    wm = std::max(wm, r.model.size());
    wo = std::max(wo, r.outcome.size());
    wp = std::max(wp, r.protocol.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(wm)) << "model" << "  " << std::setw(static_cast<int>(wo))
     << "outcome" << "  " << std::setw(static_cast<int>(wp)) << "protocol" << "  " << std::setw(15) << "AUROC"
     << "  " << std::setw(8) << "log-loss" << "  rows\n";
  for (const auto& r : reports) {
    std::ostringstream cell;
    cell << std::fixed << std::setprecision(3) << r.auroc_mean;
    if (r.fold_aurocs.size() > 1) cell << " ± " << r.auroc_std;
    std::ostringstream ll;
    if (r.log_loss) ll << std::fixed << std::setprecision(4) << *r.log_loss;
    else ll << "-";
    os << std::left << std::setw(static_cast<int>(wm)) << r.model << "  " << std::setw(static_cast<int>(wo))
       << r.outcome << "  " << std::setw(static_cast<int>(wp)) << r.protocol << "  " << std::setw(15)
       << cell.str() << "  " << std::setw(8) << ll.str() << "  " << r.rows << "\n";
  }
  return os.str();
}

}  // namespace ebmkit
