#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vsr/vsr.hpp"

namespace vsr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  std::vector<std::string> predictions;
  std::string values;
  std::string survey;
  std::string corpus;
  std::string plan;
  std::string model;
  std::string scale;
  std::string metric = "interval";
  std::string exclude;
  std::string out = ".";
  double grid_step = 0.001;
  std::optional<double> temperature;
  bool per_class = false;
  bool validity = false;
  int bins = 15;
  long long rank = 0;
  std::uint64_t seed = 0;
};

fs::path output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) throw IoError("cannot create output directory " + cfg.out);
  return fs::path(cfg.out);
}

void write_json(const fs::path& path, const json& doc) { csv::write_file(path.string(), doc.dump(2) + "\n"); }

std::vector<PredictionRecord> load_predictions(const RunConfig& cfg) {
  std::vector<PredictionRecord> all;
  for (const auto& path : cfg.predictions) {
    auto part = parse_predictions(path);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return all;
}

/// Records of the requested model, or of the only model present.
std::pair<std::string, std::vector<PredictionRecord>> single_model(const RunConfig& cfg,
                                                                    const std::vector<PredictionRecord>& all) {
  auto models = split_by_model(all);
  if (models.empty()) fail(ErrorKind::EmptyInput, "no prediction records");
  if (!cfg.model.empty()) {
    auto it = models.find(cfg.model);
    if (it == models.end()) fail(ErrorKind::InvalidArgument, "model '" + cfg.model + "' not found");
    return *it;
  }
  if (models.size() > 1) fail(ErrorKind::InvalidArgument, "several models present; pick one with --model");
  return *models.begin();
}

std::vector<PredictionRecord> maybe_rescale(const RunConfig& cfg, const std::vector<PredictionRecord>& records) {
  if (!cfg.temperature) return records;
  return calibrated(records, *cfg.temperature);
}

json theoretical_json(const ValueModel& vm, std::vector<std::string>& warnings) {
  json out = json::object();
  for (Label cls : {Label::Pos, Label::Neg}) {
    const std::string name(to_string(cls));
    try {
      const double tau = theoretical_threshold(vm, cls);
      out[name] = {{"gamma", cost_ratio(vm, cls)}, {"tau", tau}, {"tau_effective", std::max(tau, 0.5)}};
    } catch (const Error& e) {
      out[name] = nullptr;
      warnings.push_back(std::string("theoretical threshold for ") + name + ": " + e.what());
    }
  }
  return out;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out) {
  const auto all = load_predictions(cfg);
  const auto [model_id, records] = single_model(cfg, all);
  const auto model = fit_temperature(records);
  std::vector<std::string> warnings;
  if (model.at_search_bound) warnings.push_back("temperature hit the search bound [e^-4, e^4]");

  json doc = report::to_json(model);
  doc["schema_version"] = report::kSchemaVersion;
  doc["model_id"] = model_id;
  doc["records"] = records.size();
  doc["bins"] = cfg.bins;
  doc["ece_before"] = expected_calibration_error(records, cfg.bins, 1.0);
  doc["ece_after"] = expected_calibration_error(records, cfg.bins, model.temperature);
  doc["warnings"] = warnings;
  const auto dir = output_dir(cfg);
  write_json(dir / "calibration.json", doc);
  out << "temperature " << model.temperature << " (nll " << model.fit_nll << ")\n";
  return kExitOk;
}

int cmd_curve(const RunConfig& cfg, std::ostream& out) {
  const auto vm = parse_value_model(cfg.values);
  const auto all = load_predictions(cfg);
  auto [model_id, raw] = single_model(cfg, all);
  const auto records = maybe_rescale(cfg, raw);
  const auto curve = sweep(records, vm, cfg.grid_step);

  std::vector<std::string> warnings;
  json summary;
  summary["schema_version"] = report::kSchemaVersion;
  summary["model_id"] = model_id;
  summary["records"] = records.size();
  summary["grid_step"] = cfg.grid_step;
  summary["value_model"] = to_json(vm);
  summary["temperature"] = cfg.temperature ? json(*cfg.temperature) : json(nullptr);
  summary["optimum"] = report::to_json(curve.argmax);
  summary["reject_all"] = report::to_json(curve.reject_all);
  summary["theoretical"] = theoretical_json(vm, warnings);
  if (cfg.per_class) summary["per_class_optimum"] = report::to_json(sweep_per_class(records, vm, cfg.grid_step).argmax);
  summary["warnings"] = warnings;

  const auto dir = output_dir(cfg);
  csv::write_file((dir / "curve.csv").string(), report::curve_csv(curve));
  csv::write_file((dir / "curve.svg").string(), report::curve_svg(curve, "V(tau): " + model_id));
  write_json(dir / "summary.json", summary);
  out << "optimum tau " << curve.argmax.tau() << (curve.argmax.policy.reject_all ? " (reject all)" : "")
      << " value " << curve.argmax.total_value << " rejection rate " << curve.argmax.rejection_rate << "\n";
  return kExitOk;
}

int cmd_threshold(const RunConfig& cfg, std::ostream& out) {
  const auto vm = parse_value_model(cfg.values);
  std::vector<std::string> warnings;
  json doc;
  doc["schema_version"] = report::kSchemaVersion;
  doc["value_model"] = to_json(vm);
  doc["theoretical"] = theoretical_json(vm, warnings);
  if (!cfg.predictions.empty()) {
    const auto all = load_predictions(cfg);
    auto [model_id, raw] = single_model(cfg, all);
    const auto records = maybe_rescale(cfg, raw);
    doc["model_id"] = model_id;
    doc["empirical"] = report::to_json(sweep(records, vm, cfg.grid_step).argmax);
    if (cfg.per_class) doc["empirical_per_class"] = report::to_json(sweep_per_class(records, vm, cfg.grid_step).argmax);
  }
  doc["warnings"] = warnings;
  const auto dir = output_dir(cfg);
  write_json(dir / "threshold.json", doc);
  for (const auto& [cls, v] : doc["theoretical"].items())
    out << cls << ": " << (v.is_null() ? std::string("undefined") : v["tau"].dump()) << "\n";
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  const auto vm = parse_value_model(cfg.values);
  const auto all = maybe_rescale(cfg, load_predictions(cfg));
  const auto comparison = compare_models(split_by_model(all), vm, cfg.grid_step);
  json doc = report::to_json(comparison);
  doc["schema_version"] = report::kSchemaVersion;
  doc["grid_step"] = cfg.grid_step;
  doc["value_model"] = to_json(vm);
  const auto dir = output_dir(cfg);
  write_json(dir / "comparison.json", doc);
  out << "best by value: " << comparison.by_value.front() << ", best by accuracy: " << comparison.by_accuracy.front()
      << (comparison.rankings_diverge ? " (rankings diverge)" : "") << "\n";
  return kExitOk;
}

int cmd_survey(const RunConfig& cfg, std::ostream& out) {
  const auto responses = parse_survey(cfg.survey);
  std::optional<Scale> filter;
  if (!cfg.scale.empty()) {
    filter = parse_scale(cfg.scale);
    if (!filter) fail(ErrorKind::InvalidArgument, "unknown scale '" + cfg.scale + "'");
  }
  const auto metric = stats::parse_alpha_metric(cfg.metric);
  if (!metric) fail(ErrorKind::InvalidArgument, "unknown alpha metric '" + cfg.metric + "'");

  std::map<Scale, std::set<std::string>> questions;
  for (const auto& r : responses)
    if (!filter || r.scale == *filter) questions[r.scale].insert(r.question_id);
  if (questions.empty()) fail(ErrorKind::EmptyInput, "no survey responses for the requested scale");

  const auto normalized = normalize_responses(responses);
  std::vector<ScenarioValueTable> tables;
  for (const auto& [scale, qs] : questions) tables.push_back(build_scenario_table(normalized, scale, qs, *metric));

  const bool both = tables.size() == 2;
  if (cfg.validity && !both) fail(ErrorKind::InvalidArgument, "--validity needs responses on both scales");

  json values = json::object(), reliability = json::object();
  std::vector<std::string> warnings;
  json scale_values = json::object(), scale_alpha = json::object();
  for (const auto& t : tables) {
    const std::string name(to_string(t.scale));
    json v = json::object(), a = json::object();
    for (const auto& [sc, e] : t.scenarios) {
      v[std::string(to_string(sc))] = report::optional_number(e.value);
      a[std::string(to_string(sc))] = {{"alpha", report::optional_number(e.alpha)},
                                       {"band", e.alpha ? json(std::string(stats::alpha_band(*e.alpha))) : json(nullptr)}};
    }
    a["ALL"] = {{"alpha", report::optional_number(t.overall_alpha)},
                {"band", t.overall_alpha ? json(std::string(stats::alpha_band(*t.overall_alpha))) : json(nullptr)}};
    scale_values[name] = report::to_json(t);
    scale_alpha[name] = a;
    warnings.insert(warnings.end(), t.warnings.begin(), t.warnings.end());
  }
  values["schema_version"] = report::kSchemaVersion;
  values["tables"] = scale_values;
  reliability["schema_version"] = report::kSchemaVersion;
  reliability["metric"] = cfg.metric;
  reliability["scales"] = scale_alpha;
  reliability["warnings"] = warnings;

  const auto dir = output_dir(cfg);
  if (both) {
    const auto* me = &tables[0];
    const auto* s100 = &tables[1];
    if (me->scale != Scale::ME) std::swap(me, s100);
    json validity;
    validity["schema_version"] = report::kSchemaVersion;
    try {
      validity["report"] = report::to_json(convergent_validity(medians_only(me->medians), medians_only(s100->medians)));
      write_json(dir / "validity.json", validity);
    } catch (const Error& e) {
      if (cfg.validity) throw;
      warnings.push_back(std::string("validity skipped: ") + e.what());
      reliability["warnings"] = warnings;
    }
  }
  write_json(dir / "scenario_values.json", values);
  write_json(dir / "reliability.json", reliability);
  csv::write_file((dir / "scenario_values.csv").string(), report::scenario_table_csv(tables));
  for (const auto& t : tables) {
    out << to_string(t.scale) << ":";
    for (const auto& [sc, e] : t.scenarios)
      out << " " << to_string(sc) << "=" << (e.value ? csv::format_short(*e.value) : std::string("n/a"));
    out << "\n";
  }
  return kExitOk;
}

int cmd_sample(const RunConfig& cfg, std::ostream& out) {
  const auto docs = corpus::parse_corpus_csv(csv::read_file(cfg.corpus));
  const auto plan = corpus::parse_strata_plan_json(csv::read_file(cfg.plan));
  corpus::SamplerOptions opt;
  opt.seed = cfg.seed;
  if (cfg.rank > 0) opt.rank = cfg.rank;
  if (!cfg.exclude.empty()) opt.exclude = cfg.exclude;
  const auto result = corpus::select_representatives(docs, plan, opt);

  json meta;
  meta["schema_version"] = report::kSchemaVersion;
  meta["seed"] = cfg.seed;
  meta["selections"] = result.selections.size();
  json strata = json::array();
  for (const auto& s : result.strata) {
    strata.push_back({{"name", s.name},
                      {"documents", s.documents},
                      {"k", s.k},
                      {"k_pinned", s.pinned},
                      {"svd_rank", s.rank},
                      {"silhouette", report::optional_number(s.silhouette)}});
  }
  meta["strata"] = strata;
  meta["defaults"] = {{"tokenizer", "lowercase, split on non-alphanumerics, drop tokens shorter than 2"},
                      {"svd_rank", cfg.rank > 0 ? json(cfg.rank) : json("min(100, vocabulary, documents - 1)")},
                      {"k_search", "[2, 25] unless pinned"}};
  const auto dir = output_dir(cfg);
  csv::write_file((dir / "selections.csv").string(), corpus::write_selections_csv(result.selections));
  write_json(dir / "sample_meta.json", meta);
  out << result.selections.size() << " documents selected\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Value-sensitive rejection of classifier decisions", "vsr"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", cfg.out, "Output directory"); };
  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--grid-step", cfg.grid_step, "Threshold grid step in (0, 0.25]");
  };
  auto add_temperature = [&](CLI::App* sub) {
    sub->add_option("--temperature", cfg.temperature, "Rescale logits by this temperature first");
  };

  auto* calibrate = app.add_subcommand("calibrate", "Fit temperature scaling on raw-logit predictions");
  calibrate->add_option("--predictions", cfg.predictions, "Prediction file(s)")->required();
  calibrate->add_option("--model", cfg.model, "Model id when the file holds several");
  calibrate->add_option("--bins", cfg.bins, "ECE bins over [0.5, 1]");
  add_out(calibrate);

  auto* curve = app.add_subcommand("curve", "Total value over the rejection-threshold grid");
  curve->add_option("--predictions", cfg.predictions, "Prediction file(s)")->required();
  curve->add_option("--values", cfg.values, "Value model JSON")->required();
  curve->add_option("--model", cfg.model, "Model id when the file holds several");
  curve->add_flag("--per-class", cfg.per_class, "Also search separate positive/negative thresholds");
  add_grid(curve);
  add_temperature(curve);
  add_out(curve);

  auto* threshold = app.add_subcommand("threshold", "Theoretical (and optionally empirical) optimal thresholds");
  threshold->add_option("--values", cfg.values, "Value model JSON")->required();
  threshold->add_option("--predictions", cfg.predictions, "Prediction file(s)");
  threshold->add_option("--model", cfg.model, "Model id when the file holds several");
  threshold->add_flag("--per-class", cfg.per_class, "Also search separate positive/negative thresholds");
  add_grid(threshold);
  add_temperature(threshold);
  add_out(threshold);

  auto* compare = app.add_subcommand("compare", "Rank models by delivered value and by accuracy");
  compare->add_option("--predictions", cfg.predictions, "Prediction file(s)")->required();
  compare->add_option("--values", cfg.values, "Value model JSON")->required();
  add_grid(compare);
  add_temperature(compare);
  add_out(compare);

  auto* survey = app.add_subcommand("survey", "Scenario values, reliability and validity from survey responses");
  survey->add_option("--survey", cfg.survey, "Survey responses CSV")->required();
  survey->add_option("--scale", cfg.scale, "Restrict to one scale (me|s100)");
  survey->add_option("--metric", cfg.metric, "Krippendorff metric (nominal|ordinal|interval|ratio)");
  survey->add_flag("--validity", cfg.validity, "Require the convergent-validity report");
  add_out(survey);

  auto* sample = app.add_subcommand("sample", "Select representative documents per stratum");
  sample->add_option("--corpus", cfg.corpus, "Corpus CSV")->required();
  sample->add_option("--plan", cfg.plan, "Strata plan JSON")->required();
  sample->add_option("--seed", cfg.seed, "Random seed");
  sample->add_option("--rank", cfg.rank, "SVD rank override");
  sample->add_option("--exclude", cfg.exclude, "Drop documents whose text matches this regex");
  add_out(sample);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    if (!(cfg.grid_step > 0.0) || cfg.grid_step > 0.25) fail(ErrorKind::BadStep, "--grid-step must lie in (0, 0.25]");
    if (calibrate->parsed()) return cmd_calibrate(cfg, out);
    if (curve->parsed()) return cmd_curve(cfg, out);
    if (threshold->parsed()) return cmd_threshold(cfg, out);
    if (compare->parsed()) return cmd_compare(cfg, out);
    if (survey->parsed()) return cmd_survey(cfg, out);
    if (sample->parsed()) return cmd_sample(cfg, out);
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::regex_error& e) {
    err << "error: InvalidArgument: bad --exclude pattern: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace vsr::cli
