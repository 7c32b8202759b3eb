#include "ebmkit/model.hpp"

#include <algorithm>
#include <cmath>

#include "ebmkit/error.hpp"
#include "ebmkit/numeric.hpp"

namespace ebmkit {

std::string EbmModel::term_name(std::size_t term) const {
  if (term < features.size()) return features[term].name();
  const auto& p = pairs.at(term - features.size());
  return features[p.features[0]].name() + " x " + features[p.features[1]].name();
}

std::optional<std::size_t> EbmModel::find_feature(std::string_view name) const {
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (features[f].name() == name) return f;
  }
  return std::nullopt;
}

std::vector<BinDefinition> EbmModel::bin_definitions() const {
  std::vector<BinDefinition> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.bins);
  return out;
}

BinnedMatrix EbmModel::bin(const Cohort& cohort) const {
  if (meta.imputation) return bin_matrix(apply_imputation(cohort, *meta.imputation), bin_definitions());
  return bin_matrix(cohort, bin_definitions());
}

void EbmModel::term_contributions(const BinnedMatrix& binned, std::size_t row,
                                  std::span<double> out) const {
  for (std::size_t f = 0; f < features.size(); ++f) {
    out[f] = features[f].scores[binned.indices[f][row]];
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    out[features.size() + k] =
        p.scores[p.cell(binned.indices[p.features[0]][row], binned.indices[p.features[1]][row])];
  }
}

double EbmModel::sum_terms(std::span<const double> contributions) const {
  double total = intercept;
  for (double c : contributions) total += c;
  return total;
}

void EbmModel::validate() const {
  if (!std::isfinite(intercept)) throw ModelFormatError("intercept is not finite");
  for (const auto& f : features) {
    const auto n = f.bins.bin_count();
    if (f.scores.size() != n || f.stds.size() != n || f.counts.size() != n) {
      throw ModelFormatError("table sizes of '" + f.name() + "' do not match its bin count");
    }
    for (double s : f.stds) {
      if (!(s >= 0.0)) throw ModelFormatError("negative error bar in '" + f.name() + "'");
    }
  }
  for (const auto& p : pairs) {
    for (int k = 0; k < 2; ++k) {
      if (p.features[k] >= features.size()) throw ModelFormatError("pair references unknown feature");
      if (p.maps[k].size() != features[p.features[k]].bins.bin_count()) {
        throw ModelFormatError("pair map size does not match bin count");
      }
      for (auto g : p.maps[k]) {
        if (g >= p.shape[k]) throw ModelFormatError("pair map points outside the grid");
      }
    }
    const auto cells = p.shape[0] * p.shape[1];
    if (p.scores.size() != cells || p.stds.size() != cells || p.counts.size() != cells) {
      throw ModelFormatError("pair grid sizes are inconsistent");
    }
  }
}

double predict_logit(const EbmModel& model, const BinnedMatrix& binned, std::size_t row) {
  std::vector<double> contrib(model.term_count());
  model.term_contributions(binned, row, contrib);
  return model.sum_terms(contrib);
}

std::vector<double> predict_logit(const EbmModel& model, const BinnedMatrix& binned) {
  std::vector<double> out(binned.rows);
  std::vector<double> contrib(model.term_count());
  for (std::size_t r = 0; r < binned.rows; ++r) {
    model.term_contributions(binned, r, contrib);
    out[r] = model.sum_terms(contrib);
  }
  return out;
}

std::vector<double> predict_logit(const EbmModel& model, const Cohort& cohort) {
  return predict_logit(model, model.bin(cohort));
}

std::vector<double> predict_proba(const EbmModel& model, const BinnedMatrix& binned) {
  auto out = predict_logit(model, binned);
  for (double& v : out) v = sigmoid(v);
  return out;
}

std::vector<double> predict_proba(const EbmModel& model, const Cohort& cohort) {
  return predict_proba(model, model.bin(cohort));
}

std::vector<TermContribution> LocalExplanation::ranked() const {
  auto out = terms;
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::abs(a.contribution) > std::abs(b.contribution);
  });
  return out;
}

LocalExplanation local_explanation(const EbmModel& model, const BinnedMatrix& binned, std::size_t row) {
  std::vector<double> contrib(model.term_count());
  model.term_contributions(binned, row, contrib);
  LocalExplanation e;
  e.intercept = model.intercept;
  e.logit = model.sum_terms(contrib);
  e.probability = sigmoid(e.logit);
  for (std::size_t t = 0; t < contrib.size(); ++t) {
    e.terms.push_back({model.term_name(t), contrib[t], model.is_pair(t)});
  }
  return e;
}

namespace {

std::vector<ImportanceEntry> rank(std::vector<ImportanceEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.name < b.name;
  });
  return entries;
}

}  // namespace

std::vector<ImportanceEntry> feature_importance(const EbmModel& model, const BinnedMatrix& reference) {
  if (reference.rows == 0) throw DataError("feature importance needs a non-empty reference cohort");
  std::vector<double> sums(model.term_count(), 0.0);
  std::vector<double> contrib(model.term_count());
  for (std::size_t r = 0; r < reference.rows; ++r) {
    model.term_contributions(reference, r, contrib);
    for (std::size_t t = 0; t < contrib.size(); ++t) sums[t] += std::abs(contrib[t]);
  }
  std::vector<ImportanceEntry> entries;
  for (std::size_t t = 0; t < sums.size(); ++t) {
    entries.push_back({model.term_name(t), sums[t] / static_cast<double>(reference.rows), model.is_pair(t)});
  }
  return rank(std::move(entries));
}

std::vector<ImportanceEntry> feature_importance(const EbmModel& model) {
  std::vector<ImportanceEntry> entries;
  auto weighted = [](std::span<const double> scores, std::span<const double> counts) {
    double s = 0.0, n = 0.0;
    for (std::size_t b = 0; b < scores.size(); ++b) {
      s += counts[b] * std::abs(scores[b]);
      n += counts[b];
    }
    if (n <= 0.0) throw DataError("model carries no training counts");
    return s / n;
  };
  for (std::size_t f = 0; f < model.features.size(); ++f) {
    entries.push_back({model.term_name(f), weighted(model.features[f].scores, model.features[f].counts), false});
  }
  for (std::size_t k = 0; k < model.pairs.size(); ++k) {
    entries.push_back({model.term_name(model.features.size() + k),
                       weighted(model.pairs[k].scores, model.pairs[k].counts), true});
  }
  return rank(std::move(entries));
}

nlohmann::json model_to_json(const EbmModel& model) {
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : model.features) {
    feats.push_back({{"bins", f.bins.to_json()},
                     {"scores", f.scores},
                     {"stds", f.stds},
                     {"counts", f.counts}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : model.pairs) {
    pairs.push_back({{"features", {p.features[0], p.features[1]}},
                     {"maps", {p.maps[0], p.maps[1]}},
                     {"shape", {p.shape[0], p.shape[1]}},
                     {"scores", p.scores},
                     {"stds", p.stds},
                     {"counts", p.counts}});
  }
  nlohmann::json meta = {{"outcome", model.meta.outcome},
                         {"seed", model.meta.seed},
                         {"train_prevalence", model.meta.train_prevalence},
                         {"train_rows", model.meta.train_rows},
                         {"config", model.meta.config}};
  if (model.meta.imputation) meta["imputation"] = model.meta.imputation->to_json();
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"kind", "ebm"},
          {"link", "logit"},
          {"intercept", model.intercept},
          {"features", feats},
          {"pairs", pairs},
          {"metadata", meta}};
}

std::string model_kind(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != kModelFormat) {
    throw ModelFormatError("not an ebmkit model file");
  }
  const int version = j.value("version", -1);
  if (version != kModelVersion) {
    throw ModelFormatError("unsupported model version " + std::to_string(version) + " (expected " +
                           std::to_string(kModelVersion) + ")");
  }
  return j.at("kind").get<std::string>();
}

nlohmann::json parse_model_file(std::string_view bytes) {
  try {
    return nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("corrupted model payload: ") + e.what());
  }
}

EbmModel model_from_json(const nlohmann::json& j) {
  if (model_kind(j) != "ebm") throw ModelFormatError("model kind is not 'ebm'");
  try {
    if (j.at("link").get<std::string>() != "logit") throw ModelFormatError("unsupported link");
    EbmModel m;
    m.intercept = j.at("intercept").get<double>();
    for (const auto& jf : j.at("features")) {
      m.features.push_back({BinDefinition::from_json(jf.at("bins")),
                            jf.at("scores").get<std::vector<double>>(),
                            jf.at("stds").get<std::vector<double>>(),
                            jf.at("counts").get<std::vector<double>>()});
    }
    for (const auto& jp : j.at("pairs")) {
      PairTerm p;
      for (int k = 0; k < 2; ++k) {
        p.features[k] = jp.at("features").at(k).get<std::size_t>();
        p.maps[k] = jp.at("maps").at(k).get<std::vector<BinIndex>>();
        p.shape[k] = jp.at("shape").at(k).get<std::size_t>();
      }
      p.scores = jp.at("scores").get<std::vector<double>>();
      p.stds = jp.at("stds").get<std::vector<double>>();
      p.counts = jp.at("counts").get<std::vector<double>>();
      m.pairs.push_back(std::move(p));
    }
    const auto& jm = j.at("metadata");
    m.meta.outcome = jm.at("outcome").get<std::string>();
    m.meta.seed = jm.at("seed").get<std::uint64_t>();
    m.meta.train_prevalence = jm.at("train_prevalence").get<double>();
    m.meta.train_rows = jm.at("train_rows").get<std::size_t>();
    m.meta.config = jm.at("config");
    if (jm.contains("imputation")) m.meta.imputation = ImputationStats::from_json(jm.at("imputation"));
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model: ") + e.what());
  }
}

std::string serialize(const EbmModel& model) { return model_to_json(model).dump(1) + "\n"; }

EbmModel deserialize(std::string_view bytes) { return model_from_json(parse_model_file(bytes)); }

}  // namespace ebmkit
