#include "ebmkit/logistic.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ebmkit/error.hpp"
#include "ebmkit/model.hpp"
#include "ebmkit/numeric.hpp"

namespace ebmkit {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const Matrix> as_matrix(const DesignMatrix& d) {
  return {d.values.data(), static_cast<Eigen::Index>(d.rows), static_cast<Eigen::Index>(d.cols())};
}

void check_labels(const DesignMatrix& design, std::span<const double> labels) {
  if (labels.size() != design.rows) throw DataError("label count does not match design rows");
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw DataError("labels must be 0 or 1");
  }
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Objective {
  const Matrix& x;
  const Eigen::VectorXd& y;
  double l2;

  double value(const Eigen::VectorXd& w, double b) const {
    const Eigen::VectorXd z = (x * w).array() + b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(z[i]) - y[i] * z[i];
    return s / static_cast<double>(x.rows()) + 0.5 * l2 * w.squaredNorm();
  }
};

}  // namespace

double lr_objective(std::span<const double> weights, double bias, const DesignMatrix& design,
                    std::span<const double> labels, double l2) {
  if (weights.size() != design.cols()) throw DataError("weight count does not match design width");
  check_labels(design, labels);
  const Matrix x = as_matrix(design);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return Objective{x, y, l2}.value(w, bias);
}

std::vector<double> lr_gradient(std::span<const double> weights, double bias, const DesignMatrix& design,
                                std::span<const double> labels, double l2) {
  if (weights.size() != design.cols()) throw DataError("weight count does not match design width");
  check_labels(design, labels);
  const auto x = as_matrix(design);
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  const Eigen::Map<const Eigen::VectorXd> y(labels.data(), static_cast<Eigen::Index>(labels.size()));
  Eigen::VectorXd r = (x * w).array() + bias;
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = sigmoid(r[i]) - y[i];
  const double n = static_cast<double>(design.rows);
  const Eigen::VectorXd gw = x.transpose() * r / n + l2 * w;
  std::vector<double> g(gw.data(), gw.data() + gw.size());
  g.push_back(r.sum() / n);
  return g;
}

LrModel fit_lr(const DesignMatrix& design, std::span<const double> labels, const LrOptions& options) {
  if (!(options.l2 >= 0.0) || !(options.tol > 0.0)) throw ConfigError("l2 must be >= 0 and tol > 0");
  if (design.rows == 0) throw DataError("cannot fit logistic regression on zero rows");
  check_labels(design, labels);
  for (double v : design.values) {
    if (!std::isfinite(v)) throw DataError("design matrix holds a missing or non-finite value");
  }
  const auto d = static_cast<Eigen::Index>(design.cols());
  const double n = static_cast<double>(design.rows);

  LrModel model;
  model.columns = design.column_names;
  model.l2 = options.l2;
  model.column_means.assign(design.cols(), 0.0);
  model.column_stds.assign(design.cols(), 1.0);

  Matrix x = as_matrix(design);
  for (Eigen::Index c = 0; c < d; ++c) {
    if (design.is_indicator[static_cast<std::size_t>(c)]) continue;
    const double mu = x.col(c).mean();
    const double sd = std::sqrt((x.col(c).array() - mu).square().sum() / n);
    model.column_means[static_cast<std::size_t>(c)] = mu;
    model.column_stds[static_cast<std::size_t>(c)] = sd > 0.0 ? sd : 1.0;
    x.col(c) = (x.col(c).array() - mu) / model.column_stds[static_cast<std::size_t>(c)];
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  const Objective obj{x, y, options.l2};

  // start at the prevalence so the l2 -> infinity limit is exact
  const double prev = std::clamp(y.mean(), 1e-12, 1.0 - 1e-12);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = logit(prev);
  double f = obj.value(w, b);

  Eigen::VectorXd p(x.rows());
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd z = (x * w).array() + b;
    for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = sigmoid(z[i]);
    const Eigen::VectorXd r = p - y;
    Eigen::VectorXd g(d + 1);
    g.head(d) = x.transpose() * r / n + options.l2 * w;
    g[d] = r.sum() / n;
    if (g.norm() <= options.tol) break;

    const Eigen::VectorXd h = (p.array() * (1.0 - p.array())).matrix();
    Matrix hess(d + 1, d + 1);
    hess.topLeftCorner(d, d) = x.transpose() * h.asDiagonal() * x / n;
    hess.topLeftCorner(d, d).diagonal().array() += options.l2;
    const Eigen::VectorXd xh = x.transpose() * h / n;
    hess.block(0, d, d, 1) = xh;
    hess.block(d, 0, 1, d) = xh.transpose();
    hess(d, d) = h.sum() / n;
    // tiny ridge keeps the solve defined when l2 = 0 and a column is constant
    hess.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(-g);

    double t = 1.0;
    double f_new = f;
    Eigen::VectorXd w_new = w;
    double b_new = b;
    const double slope = g.dot(step);
    for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
      w_new = w + t * step.head(d);
      b_new = b + t * step[d];
      f_new = obj.value(w_new, b_new);
      if (f_new <= f + 1e-4 * t * slope) break;
    }
    if (!(f_new <= f)) break;  // no descent possible at machine precision
    w = w_new;
    b = b_new;
    f = f_new;
  }
  model.iterations = iter;

  // fold the standardization back into raw-scale weights
  model.weights.resize(design.cols());
  model.bias = b;
  for (Eigen::Index c = 0; c < d; ++c) {
    const auto k = static_cast<std::size_t>(c);
    model.weights[k] = w[c] / model.column_stds[k];
    model.bias -= model.weights[k] * model.column_means[k];
  }
  for (double v : model.weights) {
    if (!std::isfinite(v)) throw Error("logistic regression diverged; increase l2");
  }
  return model;
}

std::vector<double> predict_lr_logit(const LrModel& model, const DesignMatrix& design) {
  if (design.cols() != model.weights.size()) {
    throw DataError("design has " + std::to_string(design.cols()) + " columns, model expects " +
                    std::to_string(model.weights.size()));
  }
  std::vector<double> out(design.rows);
  for (std::size_t r = 0; r < design.rows; ++r) {
    double z = model.bias;
    const auto row = design.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) z += model.weights[c] * row[c];
    out[r] = z;
  }
  return out;
}

std::vector<double> predict_lr(const LrModel& model, const DesignMatrix& design) {
  auto z = predict_lr_logit(model, design);
  for (double& v : z) v = sigmoid(v);
  return z;
}

std::vector<double> predict_lr(const LrModel& model, const Cohort& cohort) {
  if (!model.encoder) throw ModelFormatError("logistic model has no stored encoder");
  const Cohort imputed = model.imputation ? apply_imputation(cohort, *model.imputation) : cohort;
  return predict_lr(model, model.encoder->encode(imputed));
}

LrModel train_lr_pipeline(const Cohort& train, const std::string& outcome, const LrOptions& options) {
  const auto features = train.schema().features_for(outcome);
  if (features.empty()) throw SchemaError("no usable features for outcome '" + outcome + "'");
  auto [imputed, stats] = impute_mean(train);
  DummyEncoder encoder = DummyEncoder::fit(imputed, features);
  const DesignMatrix design = encoder.encode(imputed);
  LrModel model = fit_lr(design, imputed.labels(outcome), options);
  model.outcome = outcome;
  model.encoder = std::move(encoder);
  model.imputation = std::move(stats);
  return model;
}

nlohmann::json lr_to_json(const LrModel& m) {
  nlohmann::json j = {{"format", "ebmkit-model"}, {"version", 1},        {"kind", "lr"},
                      {"link", "logit"},          {"columns", m.columns}, {"weights", m.weights},
                      {"bias", m.bias},           {"l2", m.l2},           {"column_means", m.column_means},
                      {"column_stds", m.column_stds}};
  nlohmann::json meta = {{"outcome", m.outcome}, {"iterations", m.iterations}};
  if (m.encoder) meta["encoder"] = m.encoder->to_json();
  if (m.imputation) meta["imputation"] = m.imputation->to_json();
  j["metadata"] = meta;
  return j;
}

LrModel lr_from_json(const nlohmann::json& j) {
  if (model_kind(j) != "lr") throw ModelFormatError("not a logistic regression model");
  LrModel m;
  try {
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.l2 = j.at("l2").get<double>();
    m.column_means = j.at("column_means").get<std::vector<double>>();
    m.column_stds = j.at("column_stds").get<std::vector<double>>();
    const auto& meta = j.at("metadata");
    m.outcome = meta.value("outcome", std::string{});
    m.iterations = meta.value("iterations", 0);
    if (meta.contains("encoder")) m.encoder = DummyEncoder::from_json(meta.at("encoder"));
    if (meta.contains("imputation")) m.imputation = ImputationStats::from_json(meta.at("imputation"));
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed logistic model: ") + e.what());
  }
  if (m.weights.size() != m.columns.size()) throw ModelFormatError("weight count does not match columns");
  for (double v : m.weights) {
    if (!std::isfinite(v)) throw ModelFormatError("non-finite weight");
  }
  return m;
}

std::string serialize(const LrModel& model) { return lr_to_json(model).dump(1) + "\n"; }

}  // namespace ebmkit
