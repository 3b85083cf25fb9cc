#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vsr/error.hpp"
#include "vsr/stats.hpp"
#include "vsr/types.hpp"

namespace vsr {

struct NormalizedResponse {
  std::string participant_id;
  std::string question_id;
  Scenario scenario = Scenario::TP;
  Scale scale = Scale::ME;
  double signed_value = 0.0;  // in [-100, 100]
};

/// agree -> +magnitude, disagree -> -magnitude, neutral -> 0.
inline double signed_value(Stance stance, std::optional<double> magnitude) {
  switch (stance) {
    case Stance::Agree: return magnitude.value_or(0.0);
    case Stance::Disagree: return -magnitude.value_or(0.0);
    case Stance::Neutral: return 0.0;
  }
  return 0.0;
}

inline NormalizedResponse sign_converted(const SurveyResponse& s) {
  return {s.participant_id, s.question_id, s.scenario, s.scale, signed_value(s.stance, s.magnitude)};
}

/// Divides one ME participant's signed values by their largest absolute
/// value and multiplies by 100. All-neutral participants stay at zero.
inline std::vector<NormalizedResponse> normalize_me(std::span<const SurveyResponse> responses) {
  std::vector<NormalizedResponse> out;
  if (responses.empty()) return out;
  for (const auto& s : responses) {
    if (s.participant_id != responses.front().participant_id)
      fail(ErrorKind::InvalidArgument, "normalize_me expects responses of a single participant");
    if (s.scale != Scale::ME) fail(ErrorKind::InvalidArgument, "normalize_me expects ME responses only");
    out.push_back(sign_converted(s));
  }
  double max_abs = 0.0;
  for (const auto& r : out) max_abs = std::max(max_abs, std::abs(r.signed_value));
  if (max_abs == 0.0 || max_abs == 100.0) return out;
  for (auto& r : out) r.signed_value = std::clamp(r.signed_value / max_abs * 100.0, -100.0, 100.0);
  return out;
}

/// Sign conversion for every included response, plus per-participant
/// normalization of the ME scale. Excluded responses are dropped; input
/// order is otherwise preserved.
inline std::vector<NormalizedResponse> normalize_responses(std::span<const SurveyResponse> responses) {
  std::map<std::string, std::vector<std::size_t>> me_rows;
  for (std::size_t i = 0; i < responses.size(); ++i)
    if (!responses[i].excluded && responses[i].scale == Scale::ME) me_rows[responses[i].participant_id].push_back(i);

  std::vector<std::optional<NormalizedResponse>> slots(responses.size());
  for (const auto& [pid, rows] : me_rows) {
    std::vector<SurveyResponse> mine;
    for (auto i : rows) mine.push_back(responses[i]);
    auto norm = normalize_me(mine);
    for (std::size_t k = 0; k < rows.size(); ++k) slots[rows[k]] = std::move(norm[k]);
  }
  std::vector<NormalizedResponse> out;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (responses[i].excluded) continue;
    if (responses[i].scale == Scale::S100) out.push_back(sign_converted(responses[i]));
    else out.push_back(std::move(*slots[i]));
  }
  return out;
}

/// Median; an even count gives the mean of the two central values.
inline double median(std::vector<double> v) {
  if (v.empty()) fail(ErrorKind::EmptyInput, "median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2.0;
}

struct QuestionSummary {
  Scenario scenario = Scenario::TP;
  double median = 0.0;
  std::size_t responses = 0;
};

/// Per-question medians for one scale. Every id in `expected_questions`
/// must have at least one response (EmptyQuestion otherwise).
inline std::map<std::string, QuestionSummary> question_medians(std::span<const NormalizedResponse> responses,
                                                               Scale scale,
                                                               const std::set<std::string>& expected_questions = {}) {
  std::map<std::string, std::vector<double>> values;
  std::map<std::string, Scenario> scenario_of;
  for (const auto& r : responses) {
    if (r.scale != scale) continue;
    auto [it, inserted] = scenario_of.emplace(r.question_id, r.scenario);
    if (!inserted && it->second != r.scenario)
      fail(ErrorKind::InvalidArgument, "question '" + r.question_id + "' is tagged with two scenarios");
    values[r.question_id].push_back(r.signed_value);
  }
  for (const auto& q : expected_questions)
    if (!values.count(q))
      fail(ErrorKind::EmptyQuestion, "question '" + q + "' has no " + std::string(to_string(scale)) + " responses");

  std::map<std::string, QuestionSummary> out;
  for (auto& [q, v] : values) out[q] = {scenario_of[q], median(v), v.size()};
  return out;
}

/// Scenario value = mean of the scenario's question medians.
inline std::map<Scenario, double> scenario_values(const std::map<std::string, QuestionSummary>& medians) {
  std::map<Scenario, std::pair<double, std::size_t>> acc;
  for (const auto& [q, s] : medians) {
    acc[s.scenario].first += s.median;
    acc[s.scenario].second += 1;
  }
  std::map<Scenario, double> out;
  for (const auto& [sc, p] : acc) out[sc] = p.first / static_cast<double>(p.second);
  return out;
}

struct ScenarioEntry {
  std::optional<double> value;
  std::optional<double> alpha;
  std::size_t questions = 0;
};

struct ScenarioValueTable {
  Scale scale = Scale::ME;
  std::map<Scenario, ScenarioEntry> scenarios;
  std::optional<double> overall_alpha;
  std::map<std::string, QuestionSummary> medians;
  std::size_t participants = 0;
  std::vector<std::string> warnings;
};

/// Participants x questions matrix of signed values for one scale.
inline stats::RatingMatrix rating_matrix(std::span<const NormalizedResponse> responses, Scale scale,
                                         const std::vector<std::string>& questions) {
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < questions.size(); ++j) col[questions[j]] = j;
  std::map<std::string, std::vector<std::optional<double>>> rows;
  for (const auto& r : responses) {
    if (r.scale != scale) continue;
    auto it = col.find(r.question_id);
    if (it == col.end()) continue;
    auto& row = rows[r.participant_id];
    row.resize(questions.size());
    row[it->second] = r.signed_value;
  }
  stats::RatingMatrix m;
  for (auto& [pid, row] : rows) m.push_back(std::move(row));
  return m;
}

/// Scenario values and Krippendorff's alpha, per scenario and over all
/// questions, for one scale. Alpha failures are reported as absent values
/// with a warning.
inline ScenarioValueTable build_scenario_table(std::span<const NormalizedResponse> responses, Scale scale,
                                               const std::set<std::string>& expected_questions = {},
                                               stats::AlphaMetric metric = stats::AlphaMetric::Interval) {
  ScenarioValueTable table;
  table.scale = scale;
  table.medians = question_medians(responses, scale, expected_questions);
  const auto values = scenario_values(table.medians);

  std::set<std::string> participants;
  for (const auto& r : responses)
    if (r.scale == scale) participants.insert(r.participant_id);
  table.participants = participants.size();

  auto alpha_of = [&](const std::vector<std::string>& questions, const std::string& label) -> std::optional<double> {
    try {
      return stats::krippendorff_alpha(rating_matrix(responses, scale, questions), metric);
    } catch (const Error& e) {
      table.warnings.push_back(std::string(to_string(scale)) + " " + label + " alpha: " + e.what());
      return std::nullopt;
    }
  };

  std::vector<std::string> all_questions;
  for (Scenario sc : kScenarios) {
    std::vector<std::string> qs;
    for (const auto& [q, s] : table.medians)
      if (s.scenario == sc) qs.push_back(q);
    ScenarioEntry entry;
    entry.questions = qs.size();
    if (auto it = values.find(sc); it != values.end()) entry.value = it->second;
    if (!qs.empty()) entry.alpha = alpha_of(qs, std::string(to_string(sc)));
    table.scenarios[sc] = entry;
    all_questions.insert(all_questions.end(), qs.begin(), qs.end());
  }
  if (!all_questions.empty()) table.overall_alpha = alpha_of(all_questions, "overall");
  return table;
}

struct ValidityReport {
  std::size_t questions = 0;
  double spearman = 0.0;
  double kendall = 0.0;
  double mann_whitney_u = 0.0;
  double mann_whitney_p = 1.0;
};

/// Rank agreement between the two scales' per-question medians.
inline ValidityReport convergent_validity(const std::map<std::string, double>& me_medians,
                                          const std::map<std::string, double>& s100_medians) {
  std::set<std::string> a, b;
  for (const auto& [q, v] : me_medians) a.insert(q);
  for (const auto& [q, v] : s100_medians) b.insert(q);
  if (a != b) fail(ErrorKind::QuestionSetMismatch, "ME and S100 cover different questions");
  std::vector<double> x, y;
  for (const auto& [q, v] : me_medians) {
    x.push_back(v);
    y.push_back(s100_medians.at(q));
  }
  ValidityReport r;
  r.questions = x.size();
  r.spearman = stats::spearman(x, y);
  r.kendall = stats::kendall_tau_b(x, y);
  const auto mw = stats::mann_whitney_u(x, y);
  r.mann_whitney_u = mw.u;
  r.mann_whitney_p = mw.p;
  return r;
}

inline std::map<std::string, double> medians_only(const std::map<std::string, QuestionSummary>& m) {
  std::map<std::string, double> out;
  for (const auto& [q, s] : m) out[q] = s.median;
  return out;
}

}  // namespace vsr
