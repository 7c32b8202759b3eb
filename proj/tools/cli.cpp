#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "ebmkit/error.hpp"
#include "ebmkit/logistic.hpp"
#include "ebmkit/metrics.hpp"
#include "ebmkit/numeric.hpp"
#include "ebmkit/reporting.hpp"
#include "ebmkit/synth.hpp"
#include "ebmkit/train.hpp"

namespace fs = std::filesystem;

namespace ebmkit::cli {

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw Error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Shared flags ---------------------------------------------------------------

struct TrainFlags {
  std::string config_path;
  bool fast = false;
  std::uint64_t seed = 0;
  int outer_bags = 0, inner_bags = 0, min_samples_leaf = 0, interactions = 0, max_leaves = 0, max_epochs = 0,
      patience = 0, max_bins = 0, max_interaction_bins = 0, threads = 0, verbosity = 0;
  double learning_rate = 0, validation_fraction = 0, tolerance = 0, l2 = 1e-4;
  std::vector<CLI::Option*> options;  // flag overrides, in declaration order
  CLI::Option* seed_opt = nullptr;
  CLI::Option* l2_opt = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON file of training settings; flags take precedence")
        ->check(CLI::ExistingFile);
    app.add_flag("--fast", fast, "Quick profile: 3 outer bags, 1 inner bag");
    seed_opt = app.add_option("--seed", seed, "Seed for every random stage");
    auto add = [&](const char* name, auto& target, const char* help) {
      options.push_back(app.add_option(name, target, help));
    };
    add("--outer-bags", outer_bags, "Outer bags (default 25)");
    add("--inner-bags", inner_bags, "Inner bags (default 25)");
    add("--min-samples-leaf", min_samples_leaf, "Minimum rows per leaf (default 25)");
    add("--interactions", interactions, "Pair terms kept (default 20)");
    add("--learning-rate", learning_rate, "Boosting learning rate (default 0.01)");
    add("--max-leaves", max_leaves, "Leaves per tree (default 3)");
    add("--max-epochs", max_epochs, "Boosting epoch cap per stage (default 5000)");
    add("--patience", patience, "Early-stopping patience in epochs (default 50)");
    add("--tolerance", tolerance, "Minimum validation-loss improvement (default 1e-4)");
    add("--validation-fraction", validation_fraction, "Held-out share per outer bag (default 0.15)");
    add("--max-bins", max_bins, "Bins per continuous feature (default 256)");
    add("--max-interaction-bins", max_interaction_bins, "Bins per feature in pair grids (default 32)");
    add("--threads", threads, "Worker threads, 0 for all cores (default 0)");
    app.add_flag("-v,--verbose", verbosity, "Training progress on stderr (repeat for more)");
    l2_opt = app.add_option("--l2", l2, "Logistic regression L2 strength (default 1e-4)");
  }

  TrainConfig config() const {
    TrainConfig c = fast ? TrainConfig::fast() : TrainConfig{};
    if (!config_path.empty()) {
      nlohmann::json j = read_json(config_path);
      j.erase("l2");
      c = TrainConfig::from_json(j, c);
    }
    const std::vector<std::function<void()>> apply = {
        [&] { c.outer_bags = outer_bags; },
        [&] { c.inner_bags = inner_bags; },
        [&] { c.min_samples_leaf = min_samples_leaf; },
        [&] { c.interactions = interactions; },
        [&] { c.learning_rate = learning_rate; },
        [&] { c.max_leaves = max_leaves; },
        [&] { c.max_epochs = max_epochs; },
        [&] { c.early_stop_patience = patience; },
        [&] { c.early_stop_tolerance = tolerance; },
        [&] { c.validation_fraction = validation_fraction; },
        [&] { c.max_bins = max_bins; },
        [&] { c.max_interaction_bins = max_interaction_bins; },
        [&] { c.threads = threads; },
    };
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (options[i]->count() > 0) apply[i]();
    }
    if (seed_opt->count() > 0) c.seed = seed;
    if (verbosity > 0) c.verbosity = verbosity;
    c.validate();
    return c;
  }

  LrOptions lr_options() const {
    LrOptions o;
    if (!config_path.empty()) {
      const auto j = read_json(config_path);
      if (j.contains("l2")) o.l2 = j.at("l2").get<double>();
    }
    if (l2_opt->count() > 0) o.l2 = l2;
    return o;
  }
};

struct DataFlags {
  std::string data, schema, outcome, exclusions;
  bool no_exclusions = false;

  void attach(CLI::App& app, bool required) {
    app.add_option("--data", data, "Cohort CSV")->check(CLI::ExistingFile)->required(required);
    app.add_option("--schema", schema, "Schema JSON")->check(CLI::ExistingFile)->required(required);
    auto* o = app.add_option("--outcome", outcome, "Label column to model");
    if (required) o->required();
  }

  void attach_exclusions(CLI::App& app) {
    app.add_option("--exclusions", exclusions, "JSON file of exclusion rules (default: built-in rules)")
        ->check(CLI::ExistingFile);
    app.add_flag("--no-exclusions", no_exclusions, "Skip row exclusion");
  }

  ExclusionRuleSet rules(const FeatureSchema& schema) const {
    if (no_exclusions) return {};
    if (!exclusions.empty()) return ExclusionRuleSet::from_json(read_json(exclusions));
    return ExclusionRuleSet::defaults_for(schema);
  }
};

void check_outcome(const FeatureSchema& schema, const std::string& outcome) {
  const auto idx = schema.find(outcome);
  if (!idx) throw SchemaError("outcome column '" + outcome + "' is not in the schema");
  if (schema.columns()[*idx].kind != ColumnKind::kLabel) throw SchemaError("column '" + outcome + "' is not a label");
}

Cohort load_and_exclude(const DataFlags& d, std::ostream& err, ExclusionReport* report = nullptr) {
  const FeatureSchema schema = FeatureSchema::load(d.schema);
  if (!d.outcome.empty()) check_outcome(schema, d.outcome);
  Cohort cohort = load_csv(d.data, schema);
  auto [kept, rep] = apply_exclusions(cohort, d.rules(schema));
  err << "loaded " << rep.input_rows << " rows, kept " << rep.retained_rows << "\n";
  for (const auto& [rule, n] : rep.fired) {
    if (n > 0) err << "  excluded by " << rule << ": " << n << "\n";
  }
  if (report) *report = rep;
  return kept;
}

std::string unit_of(const FeatureSchema* schema, const std::string& feature) {
  if (!schema) return {};
  const auto idx = schema->find(feature);
  return idx ? schema->columns()[*idx].unit : std::string{};
}

// synth ----------------------------------------------------------------------

struct SynthCmd {
  std::string preset_name, spec_path, out;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  double shift_sd = -1.0;

  void attach(CLI::App& app) {
    auto* p = app.add_option("--preset", preset_name, "Built-in spec")->check(CLI::IsMember(preset_names()));
    auto* s = app.add_option("--spec", spec_path, "Synthetic spec JSON")->check(CLI::ExistingFile);
    p->excludes(s);
    app.add_option("--n", n, "Rows to draw")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--hospital-shift", shift_sd, "Add per-hospital delivery units with N(0, sd) log-odds shifts");
    app.add_option("--out", out, "Output directory")->required();
  }

  int run(std::ostream& err) const {
    if (preset_name.empty() == spec_path.empty()) throw ConfigError("give exactly one of --preset or --spec");
    SynthSpec spec;
    if (!preset_name.empty()) {
      spec = preset(preset_name);
    } else {
      spec = SynthSpec::from_json(read_json(spec_path));
    }
    if (shift_sd >= 0.0) spec.hospital_shift = HospitalShift{shift_sd};
    fs::create_directories(out);
    const SyntheticCohort data = generate_synthetic(spec, n, seed);
    std::ostringstream csv;
    write_csv(csv, data.cohort);
    write_file_atomic(path_in(out, "cohort.csv"), csv.str());
    write_file_atomic(path_in(out, "schema.json"), data.cohort.schema().to_json().dump(1) + "\n");
    nlohmann::json truth = spec.to_json();
    truth["generated"] = {{"rows", n}, {"seed", seed}};
    write_file_atomic(path_in(out, "truth.json"), truth.dump(1) + "\n");
    err << "wrote " << n << " rows, " << spec.outcome << " prevalence "
        << mean(data.cohort.labels(spec.outcome)) << "\n";
    return kExitOk;
  }
};

// train ----------------------------------------------------------------------

struct TrainCmd {
  DataFlags data;
  TrainFlags train;
  std::string kind = "ebm", out, report;

  void attach(CLI::App& app) {
    data.attach(app, true);
    data.attach_exclusions(app);
    train.attach(app);
    app.add_option("--kind", kind, "Model kind")->check(CLI::IsMember({"ebm", "lr"}));
    app.add_option("--out", out, "Model file to write")->required();
    app.add_option("--report", report, "Also write the exclusion report (JSON)");
  }

  int run(std::ostream& err) const {
    const TrainConfig config = train.config();
    ExclusionReport excl;
    const Cohort cohort = load_and_exclude(data, err, &excl);
    std::string bytes;
    if (kind == "ebm") {
      EbmModel model = train_ebm_pipeline(cohort, config, data.outcome, ExclusionRuleSet{}, nullptr);
      err << "trained EBM: " << model.features.size() << " features, " << model.pairs.size() << " pairs\n";
      bytes = serialize(model);
    } else {
      LrModel model = train_lr_pipeline(cohort, data.outcome, train.lr_options());
      err << "trained logistic regression: " << model.weights.size() << " columns, " << model.iterations
          << " Newton steps\n";
      bytes = serialize(model);
    }
    write_file_atomic(out, bytes);
    if (!report.empty()) write_file_atomic(report, excl.to_json().dump(1) + "\n");
    return kExitOk;
  }
};

// evaluate -------------------------------------------------------------------

std::vector<double> score_with_model_file(const std::string& path, const Cohort& cohort) {
  const auto j = parse_model_file(read_file(path));
  if (model_kind(j) == "lr") return predict_lr(lr_from_json(j), cohort);
  return predict_proba(model_from_json(j), cohort);
}

struct EvaluateCmd {
  DataFlags data;
  TrainFlags train;
  std::string models = "ebm,lr", split = "hospital", external, model_file, out;
  std::string external_name = "external";
  int folds = 5, calibration_bins = 10;
  double train_fraction = 0.75;
  bool uniform = false;

  void attach(CLI::App& app) {
    data.attach(app, true);
    data.attach_exclusions(app);
    train.attach(app);
    app.add_option("--models", models, "Comma-separated recipes to train: ebm, lr");
    app.add_option("--split", split, "Protocol")->check(CLI::IsMember({"hospital", "cv", "random", "all"}));
    app.add_option("--folds", folds, "Folds for --split cv")->check(CLI::Range(2, 100));
    app.add_option("--train-fraction", train_fraction, "Training share for hospital and random splits");
    app.add_option("--external-scores", external, "CSV of row_id,score from another model")
        ->check(CLI::ExistingFile);
    app.add_option("--external-name", external_name, "Column name for --external-scores");
    app.add_option("--model", model_file, "Score the whole cohort with a trained model file instead of training")
        ->check(CLI::ExistingFile);
    app.add_option("--calibration-bins", calibration_bins, "Calibration bins")->check(CLI::Range(1, 1000));
    app.add_flag("--uniform-calibration", uniform, "Equal-width calibration bins instead of equal-frequency");
    app.add_option("--out", out, "Output directory")->required();
  }

  EvalReport holdout_report(const std::string& name, const std::string& protocol, const HoldoutResult& r,
                            std::ostream& err) const {
    EvalReport rep;
    rep.model = name;
    rep.outcome = data.outcome;
    rep.protocol = protocol;
    rep.auroc_mean = r.auroc;
    rep.fold_aurocs = {r.auroc};
    rep.rows = r.test_rows.size();
    if (std::all_of(r.scores.begin(), r.scores.end(), [](double s) { return s >= 0.0 && s <= 1.0; })) {
      rep.log_loss = log_loss(r.scores, r.labels);
      rep.calibration = calibration_curve(r.scores, r.labels, calibration_bins,
                                          uniform ? CalibrationBinning::kUniform : CalibrationBinning::kQuantile);
    } else {
      err << name << ": scores outside [0, 1], calibration skipped\n";
    }
    rep.metadata["train_rows"] = r.train_rows.size();
    if (!r.train_hospitals.empty()) rep.metadata["train_hospitals"] = r.train_hospitals;
    return rep;
  }

  int run(std::ostream& out_stream, std::ostream& err) const {
    const TrainConfig config = train.config();
    fs::create_directories(out);
    const Cohort cohort = load_and_exclude(data, err);
    std::vector<std::pair<std::string, Recipe>> recipes;
    std::vector<EvalReport> reports;

    if (!model_file.empty()) {
      HoldoutResult r;
      r.scores = score_with_model_file(model_file, cohort);
      const auto y = cohort.labels(data.outcome);
      r.labels.assign(y.begin(), y.end());
      r.auroc = auroc(r.scores, r.labels);
      r.test_rows.resize(cohort.rows());
      reports.push_back(holdout_report(fs::path(model_file).stem().string(), "model-file", r, err));
    } else {
      std::stringstream ss(models);
      for (std::string m; std::getline(ss, m, ',');) {
        if (m == "ebm") {
          recipes.emplace_back("EBM", ebm_recipe(config, data.outcome));
        } else if (m == "lr") {
          recipes.emplace_back("LR", lr_recipe(data.outcome, train.lr_options()));
        } else if (!m.empty()) {
          throw ConfigError("unknown model recipe '" + m + "'");
        }
      }
    }
    if (!external.empty()) recipes.emplace_back(external_name, external_scores_recipe(ingest_external_scores(external)));

    const bool all = split == "all";
    for (const auto& [name, recipe] : recipes) {
      if (all || split == "hospital") {
        err << name << ": hospital split\n";
        const auto r = external_validate(recipe, cohort, data.outcome, config.seed, train_fraction);
        reports.push_back(holdout_report(name, "hospital", r, err));
      }
      if (all || split == "random") {
        err << name << ": random split\n";
        const auto r = random_split_validate(recipe, cohort, data.outcome, config.seed, train_fraction);
        reports.push_back(holdout_report(name, "random", r, err));
      }
      if (all || split == "cv") {
        err << name << ": " << folds << "-fold cross-validation\n";
        const auto r = cv_evaluate(recipe, cohort, data.outcome, folds, config.seed);
        EvalReport rep;
        rep.model = name;
        rep.outcome = data.outcome;
        rep.protocol = "cv" + std::to_string(folds) + " (fold std)";
        rep.auroc_mean = r.mean;
        rep.auroc_std = r.std;
        rep.fold_aurocs = r.fold_aurocs;
        if (!r.fold_log_losses.empty()) rep.log_loss = mean(r.fold_log_losses);
        rep.rows = cohort.rows();
        reports.push_back(rep);
      }
    }

    nlohmann::json jr = nlohmann::json::array();
    for (const auto& r : reports) jr.push_back(r.to_json());
    write_file_atomic(path_in(out, "report.json"), jr.dump(1) + "\n");

    std::string text = report_text(reports);
    std::map<std::string, std::vector<EvalReport>> by_protocol;
    for (const auto& r : reports) by_protocol[r.protocol].push_back(r);
    for (const auto& [protocol, rs] : by_protocol) {
      text += "\nAUROC, " + protocol + "\n" + auroc_table(rs).to_text();
    }
    write_file_atomic(path_in(out, "report.txt"), text);
    out_stream << text;

    for (const auto& r : reports) {
      if (r.calibration.empty()) continue;
      SvgOptions o;
      o.title = "Calibration: " + r.model + ", " + r.outcome + " (" + r.protocol + ")";
      write_file_atomic(path_in(out, "calibration_" + r.model + "_" + r.protocol + ".svg"),
                        calibration_svg(r.calibration, o));
    }
    return kExitOk;
  }
};

// explain --------------------------------------------------------------------

struct ExplainCmd {
  std::string model_path, data, schema, row_file, out;
  std::vector<std::string> features;
  bool all_features = false;
  std::size_t top = 0;

  void attach(CLI::App& app) {
    app.add_option("--model", model_path, "EBM model file")->check(CLI::ExistingFile)->required();
    app.add_option("--schema", schema, "Schema JSON (units, and required with --data or --row)")
        ->check(CLI::ExistingFile);
    app.add_option("--data", data, "Reference cohort CSV for importance (default: training population)")
        ->check(CLI::ExistingFile);
    app.add_option("--feature", features, "Export this feature's shape (repeatable)");
    app.add_flag("--all-features", all_features, "Export every feature's shape");
    app.add_option("--top", top, "Importance table rows");
    app.add_option("--row", row_file, "CSV of rows (cohort layout) to explain term by term")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out, "Output directory")->required();
  }

  int run(std::ostream& out_stream, std::ostream& err) const {
    if ((!data.empty() || !row_file.empty()) && schema.empty()) throw ConfigError("--data and --row need --schema");
    const auto j = parse_model_file(read_file(model_path));
    if (model_kind(j) != "ebm") throw ConfigError("explain works on EBM models only");
    const EbmModel model = model_from_json(j);
    std::optional<FeatureSchema> fs_schema;
    if (!schema.empty()) fs_schema = FeatureSchema::load(schema);
    const FeatureSchema* sp = fs_schema ? &*fs_schema : nullptr;
    fs::create_directories(out);

    std::vector<std::string> names = features;
    if (all_features) {
      names.clear();
      for (const auto& f : model.features) names.push_back(f.name());
    }
    for (const auto& f : names) {
      const ShapeExport shape = export_shape(model, f, unit_of(sp, f));
      write_file_atomic(path_in(out, "shape_" + f + ".json"), shape.to_json().dump(1) + "\n");
      write_file_atomic(path_in(out, "shape_" + f + ".csv"), shape.to_csv());
      write_file_atomic(path_in(out, "shape_" + f + ".svg"), render_shape_svg(shape));
      err << "exported shape of " << f << "\n";
    }

    if (top > 0) {
      std::optional<Cohort> reference;
      if (!data.empty()) reference = load_csv(data, *fs_schema);
      const auto rows = importance_table(model, reference ? &*reference : nullptr, top);
      const std::string text = format_importance_table(rows);
      write_file_atomic(path_in(out, "importance.txt"), text);
      write_file_atomic(path_in(out, "importance.csv"), importance_csv(rows));
      out_stream << text;
    }

    if (!row_file.empty()) {
      const Cohort rows = load_csv(row_file, *fs_schema);
      const BinnedMatrix binned = model.bin(rows);
      nlohmann::json jr = nlohmann::json::array();
      std::ostringstream text;
      for (std::size_t r = 0; r < rows.rows(); ++r) {
        const LocalExplanation e = local_explanation(model, binned, r);
        text << "row " << rows.row_ids()[r] << ": logit " << format_double(e.logit) << " = intercept "
             << format_double(e.intercept);
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& t : e.terms) {
          text << "\n  + " << format_double(t.contribution) << "  " << t.name;
          terms.push_back({{"term", t.name}, {"contribution", t.contribution}});
        }
        text << "\n  probability " << format_double(e.probability) << "\n";
        jr.push_back({{"row_id", rows.row_ids()[r]},
                      {"intercept", e.intercept},
                      {"terms", terms},
                      {"logit", e.logit},
                      {"probability", e.probability}});
      }
      write_file_atomic(path_in(out, "explanations.json"), jr.dump(1) + "\n");
      out_stream << text.str();
    }
    if (names.empty() && top == 0 && row_file.empty()) err << "nothing requested; see --help\n";
    return kExitOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explainable boosting machines for tabular clinical risk models", "ebmkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  SynthCmd synth;
  TrainCmd train;
  EvaluateCmd evaluate;
  ExplainCmd explain;
  synth.attach(*app.add_subcommand("synth", "Generate a synthetic cohort with a known risk model"));
  train.attach(*app.add_subcommand("train", "Fit an EBM or logistic regression model"));
  evaluate.attach(*app.add_subcommand("evaluate", "Hospital-split, random-split or cross-validated evaluation"));
  explain.attach(*app.add_subcommand("explain", "Shape exports, importance tables and per-row explanations"));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") return synth.run(err);
    if (cmd == "train") return train.run(err);
    if (cmd == "evaluate") return evaluate.run(out, err);
    return explain.run(out, err);
  } catch (const MetricError& e) {
    err << "metric error: " << e.what() << "\n";
    return kExitMetric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace ebmkit::cli
