#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "ebmkit/error.hpp"
#include "ebmkit/numeric.hpp"
#include "ebmkit/preprocess.hpp"
#include "ebmkit/split.hpp"
#include "ebmkit/synth.hpp"
#include "helpers.hpp"

using namespace ebmkit;
using testing::cohort_from;
using testing::small_schema;
using K = ColumnKind;

TEST_SUITE("schema") {
  TEST_CASE("rejects duplicate names and missing group column") {
    CHECK_THROWS_AS(testing::schema_of({{"a", K::kContinuous}, {"a", K::kLabel}, {"h", K::kGroupId}}), SchemaError);
    CHECK_THROWS_AS(testing::schema_of({{"a", K::kContinuous}, {"y", K::kLabel}}), SchemaError);
    CHECK_THROWS_AS(testing::schema_of({{"a", K::kContinuous}, {"y", K::kLabel}, {"h", K::kGroupId}, {"g", K::kGroupId}}),
                    SchemaError);
  }

  TEST_CASE("allowlists name declared features of a declared outcome") {
    std::vector<ColumnSpec> cols = {{"a", K::kContinuous, ""}, {"b", K::kCategorical, ""}, {"y", K::kLabel, ""},
                                    {"h", K::kGroupId, ""}};
    CHECK_THROWS_AS(FeatureSchema(cols, {{"y", {"zzz"}}}), SchemaError);
    CHECK_THROWS_AS(FeatureSchema(cols, {{"a", {"b"}}}), SchemaError);
    CHECK_THROWS_AS(FeatureSchema(cols, {{"y", {"h"}}}), SchemaError);
    const FeatureSchema s(cols, {{"y", {"b"}}});
    CHECK(s.features_for("y") == std::vector<std::string>{"b"});
    const FeatureSchema open(cols);
    CHECK(open.features_for("y") == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("json roundtrip") {
    std::vector<ColumnSpec> cols = {{"a", K::kContinuous, "kg"}, {"y", K::kLabel, ""}, {"h", K::kGroupId, ""}};
    const FeatureSchema s(cols, {{"y", {"a"}}});
    const FeatureSchema back = FeatureSchema::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    CHECK(back.column("a").unit == "kg");
  }
}

TEST_SUITE("load_csv") {
  TEST_CASE("parses a row") {
    const Cohort c = cohort_from("bmi,race,smm,hospital\n31.2,White,0,H3\n", small_schema());
    REQUIRE(c.rows() == 1);
    CHECK(c.numeric("bmi")[0] == 31.2);
    CHECK(c.tokens("race")[0] == "White");
    CHECK(c.labels("smm")[0] == 0.0);
    CHECK(c.groups()[0] == "H3");
  }

  TEST_CASE("empty cells become missing") {
    const Cohort c = cohort_from("bmi,race,smm,hospital\n,,1,H1\n", small_schema());
    CHECK(is_missing(c.numeric("bmi")[0]));
    CHECK(c.tokens("race")[0] == "Missing");
  }

  TEST_CASE("columns may come in any order; quotes are honoured") {
    const Cohort c = cohort_from("hospital,smm,race,bmi\n\"H,1\",1,\"A \"\"x\"\"\",20\n", small_schema());
    CHECK(c.groups()[0] == "H,1");
    CHECK(c.tokens("race")[0] == "A \"x\"");
    CHECK(c.numeric("bmi")[0] == 20.0);
  }

  TEST_CASE("header missing a column names it") {
    try {
      cohort_from("bmi,race,smm\n1,A,0\n", small_schema());
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("hospital") != std::string::npos);
    }
  }

  TEST_CASE("bad numeric cell reports its line") {
    try {
      cohort_from("bmi,race,smm,hospital\n1,A,0,H1\nabc,A,0,H1\n", small_schema());
      FAIL("expected a data error");
    } catch (const DataError& e) {
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(cohort_from("bmi,race,smm,hospital\n1,A,2,H1\n", small_schema()), DataError);
    CHECK_THROWS_AS(cohort_from("bmi,race,smm,hospital\n1,A,1,\n", small_schema()), DataError);
  }

  TEST_CASE("write_csv then parse_csv is the identity") {
    const Cohort c = cohort_from("bmi,race,smm,hospital\n0.1,A,0,H1\n,Missing,1,H2\n1e-300,\"x,y\",0,H1\n",
                                 small_schema());
    std::ostringstream out;
    write_csv(out, c);
    const Cohort back = cohort_from(out.str(), small_schema());
    REQUIRE(back.rows() == 3);
    CHECK(back.numeric("bmi")[0] == 0.1);
    CHECK(is_missing(back.numeric("bmi")[1]));
    CHECK(back.numeric("bmi")[2] == 1e-300);
    CHECK(back.tokens("race")[2] == "x,y");
  }
}

namespace {

// 10 rows: a fixture that exercises every default exclusion rule
Cohort exclusion_fixture() {
  const auto schema = testing::schema_of({{"maternal_bmi", K::kContinuous},
                                          {"birth_weight_g", K::kContinuous},
                                          {"time_to_delivery_h", K::kContinuous},
                                          {"y", K::kLabel},
                                          {"hospital", K::kGroupId}});
  return cohort_from(
      "maternal_bmi,birth_weight_g,time_to_delivery_h,y,hospital\n"
      "25,3000,5,0,H1\n"    // kept
      "130,3000,5,0,H1\n"   // BMI over 120
      "120,3000,5,1,H1\n"   // exactly 120 is kept
      "25,8500,5,0,H1\n"    // over 8000 g
      "25,8000,5,0,H2\n"    // exactly 8000 is kept
      "25,3000,-1,0,H2\n"   // negative duration
      "25,3000,0,0,H2\n"    // zero duration is kept
      ",,,0,H2\n"           // all missing: rules never fire
      "121,9000,-3,1,H2\n"  // fires all three
      "30,3500,12,0,H2\n",  // kept
      schema);
}

}  // namespace

TEST_SUITE("exclusions") {
  TEST_CASE("default rules drop exactly the implausible rows") {
    const Cohort c = exclusion_fixture();
    auto [kept, report] = apply_exclusions(c, ExclusionRuleSet::defaults());
    CHECK(report.input_rows == 10);
    CHECK(report.retained_rows == 6);
    std::vector<std::int64_t> ids(kept.row_ids().begin(), kept.row_ids().end());
    CHECK(ids == std::vector<std::int64_t>{0, 2, 4, 6, 7, 9});
    std::map<std::string, std::size_t> fired(report.fired.begin(), report.fired.end());
    CHECK(fired.at("maternal_bmi>120") == 2);
    CHECK(fired.at("birth_weight_g>8000") == 2);
    CHECK(fired.at("time_to_delivery_h<0") == 2);
  }

  TEST_CASE("idempotent") {
    auto [once, r1] = apply_exclusions(exclusion_fixture(), ExclusionRuleSet::defaults());
    auto [twice, r2] = apply_exclusions(once, ExclusionRuleSet::defaults());
    CHECK(twice.row_ids() == once.row_ids());
    CHECK(r2.retained_rows == r2.input_rows);
  }

  TEST_CASE("rule on a categorical or unknown column is a configuration error") {
    ExclusionRuleSet rules;
    rules.rules.push_back({"race", ExclusionRule::Predicate::kAbove, 1.0});
    const Cohort c = cohort_from("bmi,race,smm,hospital\n1,A,0,H1\n", small_schema());
    CHECK_THROWS_AS(apply_exclusions(c, rules), ConfigError);
    rules.rules[0].feature = "nope";
    CHECK_THROWS_AS(apply_exclusions(c, rules), ConfigError);
  }

  TEST_CASE("rule set json roundtrip") {
    const auto rules = ExclusionRuleSet::defaults();
    CHECK(ExclusionRuleSet::from_json(rules.to_json()).to_json() == rules.to_json());
  }
}

TEST_SUITE("imputation") {
  TEST_CASE("column [1, 2, missing, 3] imputes 2") {
    const Cohort c = cohort_from("bmi,race,smm,hospital\n1,A,0,H\n2,A,0,H\n,A,1,H\n3,A,0,H\n", small_schema());
    auto [imp, stats] = impute_mean(c);
    CHECK(stats.means.at("bmi") == 2.0);
    const auto v = imp.numeric("bmi");
    CHECK(std::vector<double>(v.begin(), v.end()) == std::vector<double>{1, 2, 2, 3});
  }

  TEST_CASE("test rows use training means") {
    const Cohort train = cohort_from("bmi,race,smm,hospital\n28,A,0,H\n28.8,A,1,H\n", small_schema());
    const Cohort test = cohort_from("bmi,race,smm,hospital\n,A,0,H\n40,A,1,H\n", small_schema());
    const auto stats = fit_imputation(train);
    const Cohort t = apply_imputation(test, stats);
    CHECK(t.numeric("bmi")[0] == doctest::Approx(28.4).epsilon(1e-15));
    CHECK(t.numeric("bmi")[1] == 40.0);
  }

  TEST_CASE("non-missing values untouched and post-imputation mean equals the recorded mean") {
    const Cohort c = cohort_from("bmi,race,smm,hospital\n0.1,A,0,H\n,A,0,H\n0.7,A,1,H\n,A,0,H\n0.35,A,0,H\n",
                                 small_schema());
    auto [imp, stats] = impute_mean(c);
    CHECK(imp.numeric("bmi")[0] == 0.1);
    CHECK(imp.numeric("bmi")[2] == 0.7);
    CHECK(std::abs(mean(imp.numeric("bmi")) - stats.means.at("bmi")) <= 1e-12);
  }

  TEST_CASE("all-missing column names itself") {
    const Cohort c = cohort_from("bmi,race,smm,hospital\n,A,0,H\n", small_schema());
    try {
      impute_mean(c);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("bmi") != std::string::npos);
    }
  }
}

TEST_SUITE("dummy_encode") {
  TEST_CASE("one indicator per category, lexicographic") {
    const Cohort c = cohort_from("bmi,race,smm,hospital\n1,B,0,H\n2,A,0,H\n3,Missing,1,H\n", small_schema());
    const DesignMatrix d = dummy_encode(c, {"bmi", "race"});
    CHECK(d.column_names == std::vector<std::string>{"bmi", "race=A", "race=B", "race=Missing"});
    CHECK(d.at(0, 1) == 0.0);
    CHECK(d.at(0, 2) == 1.0);
    CHECK(d.at(0, 3) == 0.0);
  }

  TEST_CASE("3 + 2 categories and one continuous give 6 columns") {
    const auto schema = testing::schema_of(
        {{"x", K::kContinuous}, {"a", K::kCategorical}, {"b", K::kCategorical}, {"y", K::kLabel}, {"h", K::kGroupId}});
    const Cohort c = cohort_from("x,a,b,y,h\n1,p,u,0,H\n2,q,v,1,H\n3,r,u,0,H\n", schema);
    CHECK(dummy_encode(c, {"x", "a", "b"}).cols() == 6);
  }

  TEST_CASE("unseen test category encodes to zeros with a warning") {
    const Cohort train = cohort_from("bmi,race,smm,hospital\n1,A,0,H\n2,B,0,H\n3,Missing,1,H\n", small_schema());
    const Cohort test = cohort_from("bmi,race,smm,hospital\n1,Z,0,H\n", small_schema());
    const auto enc = DummyEncoder::fit(train, {"race"});
    const DesignMatrix d = enc.encode(test);
    CHECK(d.cols() == 3);
    CHECK(d.at(0, 0) + d.at(0, 1) + d.at(0, 2) == 0.0);
    CHECK(d.warnings.size() == 1);
  }
}

namespace {

Cohort hospital_cohort(const std::vector<std::pair<std::string, int>>& sizes) {
  const auto schema = testing::schema_of({{"x", K::kContinuous}, {"y", K::kLabel}, {"hospital", K::kGroupId}});
  std::string csv = "x,y,hospital\n";
  int i = 0;
  for (const auto& [h, n] : sizes) {
    for (int k = 0; k < n; ++k) csv += std::to_string(i) + "," + std::to_string(i++ % 2) + "," + h + "\n";
  }
  return cohort_from(csv, schema);
}

// Independent oracle: enumerate every proper subset and apply the stated
// objective and tie rules.
std::set<std::string> brute_force(const std::vector<std::pair<std::string, std::size_t>>& sizes, double target) {
  std::vector<std::pair<std::string, std::size_t>> s = sizes;
  std::sort(s.begin(), s.end());
  std::size_t total = 0;
  for (auto& [h, n] : s) total += n;
  std::set<std::string> best;
  double best_gap = 1e300;
  std::size_t best_n = 0;
  const std::size_t m = s.size();
  for (std::uint64_t mask = 1; mask + 1 < (1ULL << m); ++mask) {
    std::set<std::string> chosen;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask >> i & 1) {
        chosen.insert(s[i].first);
        n += s[i].second;
      }
    }
    const double gap = std::abs(static_cast<double>(n) - target * static_cast<double>(total));
    const bool better = gap < best_gap - 1e-9 || (std::abs(gap - best_gap) <= 1e-9 &&
                                                  (n > best_n || (n == best_n && chosen < best)));
    if (better) {
      best = chosen;
      best_gap = gap;
      best_n = n;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("hospital_split") {
  TEST_CASE("50/30/20 picks H1 and H2: ties go to the larger train side") {
    const auto split = hospital_split(hospital_cohort({{"H1", 50}, {"H2", 30}, {"H3", 20}}), 0.75, 0);
    CHECK(split.chosen == std::set<std::string>{"H1", "H2"});
    CHECK(split.train_fraction == doctest::Approx(0.8));
  }

  TEST_CASE("75/25 matches exactly") {
    const auto split = hospital_split(hospital_cohort({{"H1", 75}, {"H2", 25}}), 0.75, 0);
    CHECK(split.chosen == std::set<std::string>{"H1"});
    CHECK(split.train_fraction == 0.75);
  }

  TEST_CASE("rows partition and no hospital straddles") {
    const Cohort c = hospital_cohort({{"A", 13}, {"B", 7}, {"C", 22}, {"D", 5}, {"E", 9}});
    const auto split = hospital_split(c, 0.75, 0);
    std::vector<std::size_t> all = split.train_rows;
    all.insert(all.end(), split.test_rows.begin(), split.test_rows.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(c.rows());
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
    for (auto r : split.train_rows) CHECK(split.chosen.count(c.groups()[r]) == 1);
    for (auto r : split.test_rows) CHECK(split.chosen.count(c.groups()[r]) == 0);
  }

  TEST_CASE("exhaustive search equals the brute-force oracle on random size sets") {
    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t m = 2 + rng.below(11);
      std::vector<std::pair<std::string, std::size_t>> sizes;
      for (std::size_t i = 0; i < m; ++i) {
        sizes.emplace_back("H" + std::to_string(i), 1 + rng.below(trial % 3 == 0 ? 4 : 200));
      }
      const double target = 0.05 + 0.9 * rng.uniform();
      CHECK(choose_hospitals_exhaustive(sizes, target) == brute_force(sizes, target));
    }
  }

  TEST_CASE("greedy stays close to the target with 22 hospitals") {
    const SynthSpec spec = preset("smm");
    std::vector<std::pair<std::string, std::size_t>> sizes;
    Rng rng(3);
    for (int h = 0; h < 22; ++h) {
      sizes.emplace_back("H" + std::to_string(h), static_cast<std::size_t>(4000.0 / std::pow(h + 1, 0.7)));
    }
    std::size_t total = 0;
    for (auto& [h, n] : sizes) total += n;
    const auto chosen = choose_hospitals_greedy(sizes, 0.75, 1);
    std::size_t n = 0;
    for (auto& [h, s] : sizes) n += chosen.count(h) ? s : 0;
    CHECK(std::abs(static_cast<double>(n) / static_cast<double>(total) - 0.75) <= 0.05);

    // and on a 15-hospital subsample it matches the exhaustive optimum's gap closely
    std::vector<std::pair<std::string, std::size_t>> sub(sizes.begin(), sizes.begin() + 15);
    std::size_t sub_total = 0;
    for (auto& [h, s] : sub) sub_total += s;
    auto gap = [&](const std::set<std::string>& set) {
      std::size_t k = 0;
      for (auto& [h, s] : sub) k += set.count(h) ? s : 0;
      return std::abs(static_cast<double>(k) / static_cast<double>(sub_total) - 0.75);
    };
    CHECK(gap(choose_hospitals_greedy(sub, 0.75, 2)) <= gap(choose_hospitals_exhaustive(sub, 0.75)) + 0.01);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(hospital_split(hospital_cohort({{"H1", 10}}), 0.75, 0), DataError);
    CHECK_THROWS_AS(hospital_split(hospital_cohort({{"H1", 10}, {"H2", 5}}), 1.0, 0), ConfigError);
  }
}

TEST_SUITE("kfold") {
  TEST_CASE("n=10 with 2 positives and k=5") {
    std::vector<double> y(10, 0.0);
    y[3] = y[8] = 1.0;
    const auto folds = kfold(y, 5, 0);
    REQUIRE(folds.size() == 5);
    int folds_with_positive = 0;
    for (const auto& f : folds) {
      CHECK(f.validation.size() == 2);
      double pos = 0;
      for (auto r : f.validation) pos += y[r];
      CHECK(pos <= 1.0);
      folds_with_positive += pos > 0;
    }
    CHECK(folds_with_positive == 2);
  }

  TEST_CASE("partition, stratification bound and determinism") {
    Rng rng(9);
    std::vector<double> y(503);
    for (auto& v : y) v = rng.bernoulli(0.07) ? 1.0 : 0.0;
    const double total_pos = std::accumulate(y.begin(), y.end(), 0.0);
    const auto folds = kfold(y, 5, 42);
    std::vector<int> seen(y.size(), 0);
    for (const auto& f : folds) {
      double pos = 0;
      for (auto r : f.validation) {
        ++seen[r];
        pos += y[r];
      }
      CHECK(std::abs(pos - total_pos / 5.0) <= 1.0);
      CHECK(f.train.size() + f.validation.size() == y.size());
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    const auto again = kfold(y, 5, 42);
    for (std::size_t i = 0; i < folds.size(); ++i) CHECK(again[i].validation == folds[i].validation);
  }

  TEST_CASE("fewer positives than folds still partitions; k < 2 is an error") {
    std::vector<double> y(20, 0.0);
    y[0] = 1.0;
    const auto folds = kfold(y, 5, 0);
    int holding = 0;
    for (const auto& f : folds) {
      CHECK(f.validation.size() == 4);
      holding += std::count(f.validation.begin(), f.validation.end(), std::size_t{0});
    }
    CHECK(holding == 1);
    CHECK_THROWS(kfold(y, 1, 0));
    CHECK_THROWS(kfold(std::vector<double>{1, 0, 1}, 5, 0));
  }
}

TEST_SUITE("synthetic") {
  TEST_CASE("zero shapes: intercept is the closed-form logit") {
    SynthSpec spec = preset("oracle");
    spec.truth.shapes.clear();
    spec.truth.pair.reset();
    CHECK(std::abs(solve_intercept_for_prevalence(spec, 0.5, 1000, 0)) <= 1e-6);
    CHECK(solve_intercept_for_prevalence(spec, 0.0140, 1000, 0) == doctest::Approx(std::log(0.014 / 0.986)).epsilon(1e-4));
    CHECK(logit(0.0140) == doctest::Approx(-4.254).epsilon(1e-3));
  }

  TEST_CASE("solved intercept hits the target on its Monte-Carlo sample") {
    const SynthSpec spec = preset("preterm_preeclampsia");
    const auto data = generate_synthetic(spec, 200000, 1234);
    double p = 0;
    for (double z : data.true_logits) p += sigmoid(z);
    CHECK(p / 200000.0 == doctest::Approx(0.0205).epsilon(0.05));
  }

  TEST_CASE("preset prevalences at n=100000") {
    for (const auto& [name, target] : std::vector<std::pair<std::string, double>>{
             {"smm", 0.0140}, {"shoulder_dystocia", 0.0221}, {"preterm_preeclampsia", 0.0205}, {"oracle", 0.02}}) {
      const SynthSpec spec = preset(name);
      const auto data = generate_synthetic(spec, 100000, 7);
      const double prev = mean(data.cohort.labels(spec.outcome));
      INFO(name << " prevalence " << prev);
      CHECK(std::abs(prev - target) <= 0.002);
    }
  }

  TEST_CASE("structure: hospitals, a step, one interaction, missingness") {
    const SynthSpec spec = preset("smm");
    std::set<std::string> hospitals;
    for (const auto& [h, w] : spec.hospitals) hospitals.insert(h);
    CHECK(hospitals.size() >= 10);
    CHECK(spec.truth.pair.has_value());
    const SynthSpec oracle = preset("oracle");
    bool has_step = false;
    for (const auto& [n, s] : oracle.truth.shapes) has_step = has_step || !s.steps.empty();
    CHECK(has_step);
    const auto data = generate_synthetic(spec, 20000, 3);
    const auto race = data.cohort.tokens("race");
    const auto missing = std::count(race.begin(), race.end(), std::string("Missing"));
    CHECK(missing / 20000.0 == doctest::Approx(0.056).epsilon(0.15));
  }

  TEST_CASE("byte-reproducible for a fixed seed; n=0 rejected, n=1 well-formed") {
    const SynthSpec spec = preset("shoulder_dystocia");
    std::ostringstream a, b, c;
    write_csv(a, generate_synthetic(spec, 500, 11).cohort);
    write_csv(b, generate_synthetic(spec, 500, 11).cohort);
    write_csv(c, generate_synthetic(spec, 500, 12).cohort);
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
    CHECK_THROWS_AS(generate_synthetic(spec, 0, 1), ConfigError);
    const auto one = generate_synthetic(spec, 1, 1);
    CHECK(one.cohort.rows() == 1);
    CHECK_NOTHROW(one.cohort.validate());
  }

  TEST_CASE("invalid distribution parameters are configuration errors") {
    SynthSpec spec = preset("oracle");
    spec.continuous[0].scale = -1.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = preset("oracle");
    spec.continuous[0].missing_rate = 1.5;
    CHECK_THROWS_AS(generate_synthetic(spec, 10, 1), ConfigError);
    CHECK_THROWS_AS(preset("nope"), ConfigError);
  }

  TEST_CASE("spec json roundtrip keeps the generated cohort") {
    SynthSpec spec = preset("smm");
    spec.hospital_shift = HospitalShift{0.5};
    const SynthSpec back = SynthSpec::from_json(spec.to_json());
    CHECK(back.to_json() == spec.to_json());
    std::ostringstream a, b;
    write_csv(a, generate_synthetic(spec, 300, 4).cohort);
    write_csv(b, generate_synthetic(back, 300, 4).cohort);
    CHECK(a.str() == b.str());
  }

  TEST_CASE("truth logits are finite and match the shapes") {
    SynthSpec spec = preset("oracle");
    spec.error_rate = 0.0;
    for (auto& c : spec.continuous) c.missing_rate = 0.0;
    for (auto& c : spec.categorical) c.missing_rate = 0.0;
    const auto data = generate_synthetic(spec, 200, 8);
    for (std::size_t r = 0; r < 200; ++r) {
      double z = spec.truth.intercept;
      for (const auto& [name, shape] : spec.truth.shapes) {
        const auto& col = spec.schema().column(name);
        z += col.kind == ColumnKind::kContinuous ? shape(data.cohort.numeric(name)[r]) : shape(data.cohort.tokens(name)[r]);
      }
      z += (*spec.truth.pair)(data.cohort.numeric(spec.truth.pair->first)[r],
                              data.cohort.numeric(spec.truth.pair->second)[r]);
      REQUIRE(std::isfinite(data.true_logits[r]));
      CHECK(data.true_logits[r] == doctest::Approx(z).epsilon(1e-12));
    }
  }
}
