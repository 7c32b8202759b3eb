#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebmkit/cohort.hpp"
#include "ebmkit/rng.hpp"

namespace ebmkit {

/// Piecewise-linear curve through `knots` (flat beyond the end knots), plus
/// step jumps that apply from their position upward. Categorical shapes use
/// `levels` instead; unlisted tokens contribute zero.
struct ShapeFunction {
  std::vector<std::pair<double, double>> knots;
  std::vector<std::pair<double, double>> steps;
  std::map<std::string, double> levels;

  double operator()(double x) const;
  double operator()(const std::string& token) const;
  bool is_zero() const;
};

/// Checkerboard interaction: +amplitude when both features sit on the same
/// side of their cuts, -amplitude otherwise.
struct PairInteraction {
  std::string first;
  std::string second;
  double first_cut = 0.0;
  double second_cut = 0.0;
  double amplitude = 0.0;

  double operator()(double a, double b) const { return (a >= first_cut) == (b >= second_cut) ? amplitude : -amplitude; }
};

/// Ground-truth additive risk model: logit = intercept + sum of shapes (+ pair).
struct TruthModel {
  double intercept = 0.0;
  std::map<std::string, ShapeFunction> shapes;
  std::optional<PairInteraction> pair;
  double target_prevalence = 0.02;
};

struct ContinuousMarginal {
  enum class Kind { kNormal, kLogNormal, kPoisson };

  std::string name;
  std::string unit;
  Kind kind = Kind::kNormal;
  double location = 0.0;  // normal mean, log-normal median, Poisson mean
  double scale = 1.0;     // normal sd, log-normal sigma (log scale); unused for Poisson
  double lower = -1e300;
  double upper = 1e300;
  double resolution = 0.0;  // values rounded to this step when positive
  double missing_rate = 0.0;

  double draw(Rng& rng) const;
};

struct CategoricalMarginal {
  std::string name;
  std::vector<std::string> tokens;
  std::vector<double> weights;
  double missing_rate = 0.0;
};

/// Site effects that only a model seeing the same hospitals can learn: each
/// hospital gets `units_per_hospital` delivery units recorded in a
/// categorical column, and each unit shifts the log-odds by N(0, sd).
struct HospitalShift {
  double sd = 0.0;
  int units_per_hospital = 2;
  std::string unit_column = "delivery_unit";
};

struct SynthSpec {
  std::string name;
  std::string outcome;
  std::vector<ContinuousMarginal> continuous;
  std::vector<CategoricalMarginal> categorical;
  std::vector<std::pair<std::string, double>> hospitals;  // id, relative size
  std::string group_column = "hospital";
  std::vector<std::string> allowlist;  // empty: every feature
  double error_rate = 0.0;             // rows given an implausible value after labeling
  std::optional<HospitalShift> hospital_shift;
  TruthModel truth;

  void validate() const;
  FeatureSchema schema() const;

  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
};

struct SyntheticCohort {
  Cohort cohort;
  std::vector<double> true_logits;  // computed from the values before masking
};

/// Draws `n` rows: covariates from the marginals, hospital by relative size,
/// label ~ Bernoulli(sigmoid(truth logit)), then missingness masking and
/// implausible-row injection. Deterministic in (spec, n, seed).
SyntheticCohort generate_synthetic(const SynthSpec& spec, std::size_t n, std::uint64_t seed);

/// Bisection on the intercept until the mean predicted prevalence over a
/// fixed Monte-Carlo sample of covariates is within 1e-4 of `target`.
double solve_intercept_for_prevalence(const SynthSpec& spec, double target, std::size_t sample,
                                      std::uint64_t seed);

/// Built-in specs: "smm", "shoulder_dystocia", "preterm_preeclampsia", and
/// "oracle" (strong additive shapes with a step, one interaction, ~2%
/// prevalence). Intercepts are solved for the target prevalence.
SynthSpec preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace ebmkit
