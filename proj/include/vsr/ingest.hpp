#pragma once

#include <cmath>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vsr/csv.hpp"
#include "vsr/error.hpp"
#include "vsr/types.hpp"

namespace vsr {

enum class InputFormat { Csv, Json };

namespace detail {

inline std::string_view strip_bom(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  return text;
}

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline double finite_number(std::string_view field, std::size_t line, std::string_view column) {
  auto v = csv::parse_double(field);
  if (!v || !std::isfinite(*v))
    fail(ErrorKind::MalformedRow, at_line(line) + std::string(column) + " is not a finite number");
  return *v;
}

/// Shared checks for one prediction row, regardless of source format.
inline PredictionRecord make_prediction(std::string model_id, std::string item_id, std::string_view kind,
                                        std::optional<double> score_a, std::optional<double> score_b,
                                        std::string_view truth, std::size_t line) {
  if (model_id.empty() || item_id.empty())
    fail(ErrorKind::MalformedRow, at_line(line) + "model_id and item_id must be non-empty");
  auto k = parse_score_kind(kind);
  if (!k) fail(ErrorKind::MalformedRow, at_line(line) + "unknown score_kind '" + std::string(kind) + "'");
  auto label = parse_label(truth);
  if (!label) fail(ErrorKind::MalformedRow, at_line(line) + "unknown true_label '" + std::string(truth) + "'");
  if (!score_a || !std::isfinite(*score_a))
    fail(ErrorKind::MalformedRow, at_line(line) + "score_a must be a finite number");

  if (*k == ScoreKind::Probability) {
    if (score_b) fail(ErrorKind::MalformedRow, at_line(line) + "score_b must be empty for probability records");
    if (*score_a < 0.0 || *score_a > 1.0)
      fail(ErrorKind::OutOfRangeProbability, at_line(line) + "p_pos " + csv::format_exact(*score_a));
    return PredictionRecord::probability(std::move(model_id), std::move(item_id), *score_a, *label);
  }
  if (!score_b || !std::isfinite(*score_b))
    fail(ErrorKind::MalformedRow, at_line(line) + "raw_logits records need a finite score_b");
  return PredictionRecord::logits(std::move(model_id), std::move(item_id), *score_a, *score_b, *label);
}

inline void check_unique(const std::vector<PredictionRecord>& records, const std::vector<std::size_t>& lines) {
  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!seen.emplace(records[i].model_id, records[i].item_id).second)
      fail(ErrorKind::DuplicateKey,
           at_line(lines[i]) + "(" + records[i].model_id + ", " + records[i].item_id + ") appears twice");
  }
}

inline bool parse_bool(std::string_view s, bool& out) {
  if (s.empty() || s == "false" || s == "0" || s == "no" || s == "FALSE" || s == "False") {
    out = false;
    return true;
  }
  if (s == "true" || s == "1" || s == "yes" || s == "TRUE" || s == "True") {
    out = true;
    return true;
  }
  return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Predictions

inline std::vector<PredictionRecord> parse_predictions_csv(std::string_view text) {
  auto rows = csv::parse(detail::strip_bom(text));
  if (rows.empty()) return {};
  const csv::Header header(rows[0],
                           {"model_id", "item_id", "score_kind", "score_a", "score_b", "true_label"});

  std::vector<PredictionRecord> records;
  std::vector<std::size_t> lines;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size())
      fail(ErrorKind::MalformedRow, detail::at_line(row.line) + "expected " + std::to_string(header.size()) +
                                        " fields, got " + std::to_string(row.fields.size()));
    auto number = [&](std::string_view column) -> std::optional<double> {
      const auto& f = header.get(row, column);
      if (f.empty()) return std::nullopt;
      return detail::finite_number(f, row.line, column);
    };
    records.push_back(detail::make_prediction(header.get(row, "model_id"), header.get(row, "item_id"),
                                              header.get(row, "score_kind"), number("score_a"),
                                              number("score_b"), header.get(row, "true_label"), row.line));
    lines.push_back(row.line);
  }
  detail::check_unique(records, lines);
  return records;
}

/// JSON form: an array of objects with the same keys as the CSV columns.
/// `score_b` may be omitted or null for probability records. The reported
/// "line" of an error is the 1-based array index.
inline std::vector<PredictionRecord> parse_predictions_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::strip_bom(text));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::MalformedRow, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) fail(ErrorKind::MalformedRow, "expected a JSON array of prediction objects");

  std::vector<PredictionRecord> records;
  std::vector<std::size_t> lines;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    const std::size_t line = i + 1;
    if (!obj.is_object()) fail(ErrorKind::MalformedRow, detail::at_line(line) + "expected an object");
    auto str = [&](const char* key) -> std::string {
      if (!obj.contains(key) || !obj[key].is_string())
        fail(ErrorKind::MalformedRow, detail::at_line(line) + "missing string field '" + key + "'");
      return obj[key].get<std::string>();
    };
    auto num = [&](const char* key) -> std::optional<double> {
      if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
      if (!obj[key].is_number())
        fail(ErrorKind::MalformedRow, detail::at_line(line) + "field '" + key + "' is not a number");
      return obj[key].get<double>();
    };
    records.push_back(detail::make_prediction(str("model_id"), str("item_id"), str("score_kind"), num("score_a"),
                                              num("score_b"), str("true_label"), line));
    lines.push_back(line);
  }
  detail::check_unique(records, lines);
  return records;
}

inline std::vector<PredictionRecord> parse_predictions(const std::string& path, InputFormat format) {
  const auto text = csv::read_file(path);
  return format == InputFormat::Csv ? parse_predictions_csv(text) : parse_predictions_json(text);
}

/// Picks the format from the file extension (".json" or anything else as CSV).
inline std::vector<PredictionRecord> parse_predictions(const std::string& path) {
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return parse_predictions(path, json ? InputFormat::Json : InputFormat::Csv);
}

inline std::string write_predictions_csv(const std::vector<PredictionRecord>& records) {
  std::string out = "model_id,item_id,score_kind,score_a,score_b,true_label\n";
  for (const auto& r : records) {
    csv::append_row(out, {r.model_id, r.item_id, std::string(to_string(r.score_kind)), csv::format_exact(r.score_a),
                          r.score_b ? csv::format_exact(*r.score_b) : std::string(),
                          std::string(to_string(r.true_label))});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Survey responses

inline std::vector<SurveyResponse> parse_survey_csv(std::string_view text) {
  auto rows = csv::parse(detail::strip_bom(text));
  if (rows.empty()) fail(ErrorKind::MalformedRow, "line 1: missing header row");
  const csv::Header header(rows[0], {"participant_id", "scale", "question_id", "scenario", "hateful_judgment",
                                     "stance", "magnitude", "excluded"});

  std::vector<SurveyResponse> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto where = detail::at_line(row.line);
    if (row.fields.size() != header.size())
      fail(ErrorKind::MalformedRow, where + "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(row.fields.size()));
    SurveyResponse s;
    s.participant_id = header.get(row, "participant_id");
    s.question_id = header.get(row, "question_id");
    if (s.participant_id.empty() || s.question_id.empty())
      fail(ErrorKind::MalformedRow, where + "participant_id and question_id must be non-empty");

    auto field = [&](std::string_view column) -> const std::string& { return header.get(row, column); };
    auto bad = [&](std::string_view column) {
      fail(ErrorKind::MalformedRow, where + "invalid " + std::string(column) + " '" + field(column) + "'");
    };
    if (auto v = parse_scale(field("scale"))) s.scale = *v; else bad("scale");
    if (auto v = parse_scenario(field("scenario"))) s.scenario = *v; else bad("scenario");
    if (auto v = parse_judgment(field("hateful_judgment"))) s.hateful_judgment = *v; else bad("hateful_judgment");
    if (auto v = parse_stance(field("stance"))) s.stance = *v; else bad("stance");
    if (!detail::parse_bool(field("excluded"), s.excluded)) bad("excluded");

    const auto& mag = field("magnitude");
    if (!mag.empty()) s.magnitude = detail::finite_number(mag, row.line, "magnitude");

    if (s.stance == Stance::Neutral && s.magnitude)
      fail(ErrorKind::MagnitudePresentForNeutral, where + "neutral stance must not carry a magnitude");
    if (s.stance != Stance::Neutral && !s.magnitude)
      fail(ErrorKind::MagnitudeMissingForNonNeutral, where + std::string(to_string(s.stance)) + " needs a magnitude");
    if (s.magnitude) {
      if (*s.magnitude <= 0.0) fail(ErrorKind::MalformedRow, where + "magnitude must be positive");
      if (s.scale == Scale::S100 && (*s.magnitude < 1.0 || *s.magnitude > 100.0))
        fail(ErrorKind::MalformedRow, where + "S100 magnitude must lie in [1, 100]");
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<SurveyResponse> parse_survey(const std::string& path) {
  return parse_survey_csv(csv::read_file(path));
}

inline std::string write_survey_csv(const std::vector<SurveyResponse>& responses) {
  std::string out = "participant_id,scale,question_id,scenario,hateful_judgment,stance,magnitude,excluded\n";
  for (const auto& s : responses) {
    csv::append_row(out, {s.participant_id, std::string(to_string(s.scale)), s.question_id,
                          std::string(to_string(s.scenario)), std::string(to_string(s.hateful_judgment)),
                          std::string(to_string(s.stance)), s.magnitude ? csv::format_exact(*s.magnitude) : "",
                          s.excluded ? "true" : "false"});
  }
  return out;
}

/// Responses from participants who passed the quality checks.
inline std::vector<SurveyResponse> included_responses(const std::vector<SurveyResponse>& responses) {
  std::vector<SurveyResponse> out;
  for (const auto& s : responses)
    if (!s.excluded) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Value model

inline ValueModel value_model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorKind::MalformedRow, "value model must be a JSON object");
  auto get = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_number())
      fail(ErrorKind::MalformedRow, std::string("value model needs numeric '") + key + "'");
    return doc[key].get<double>();
  };
  ValueModel vm{get("v_tp"), get("v_tn"), get("v_fp"), get("v_fn"), get("v_r")};
  vm.validate();
  return vm;
}

inline ValueModel parse_value_model_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::strip_bom(text));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::MalformedRow, std::string("invalid JSON: ") + e.what());
  }
  return value_model_from_json(doc);
}

inline ValueModel parse_value_model(const std::string& path) {
  return parse_value_model_json(csv::read_file(path));
}

inline nlohmann::json to_json(const ValueModel& vm) {
  return {{"v_tp", vm.v_tp}, {"v_tn", vm.v_tn}, {"v_fp", vm.v_fp}, {"v_fn", vm.v_fn}, {"v_r", vm.v_r}};
}

}  // namespace vsr
