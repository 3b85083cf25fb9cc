#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "vsr/calibrate.hpp"
#include "vsr/csv.hpp"
#include "vsr/reject.hpp"
#include "vsr/survey.hpp"

namespace vsr::report {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const OutcomeCounts& c) {
  json accepted, rejected;
  for (Outcome o : kOutcomes) {
    accepted[std::string(to_string(o))] = c.accepted_of(o);
    rejected[std::string(to_string(o))] = c.rejected_of(o);
  }
  return {{"accepted", accepted}, {"rejected", rejected}};
}

inline json to_json(const ThresholdReport& r) {
  return {{"tau", r.tau()},
          {"tau_pos", r.policy.tau_pos},
          {"tau_neg", r.policy.tau_neg},
          {"reject_all", r.policy.reject_all},
          {"total_value", r.total_value},
          {"rejection_rate", r.rejection_rate},
          {"accepted_accuracy", optional_number(r.accepted_accuracy)},
          {"counts", to_json(r.counts)}};
}

inline json to_json(const CalibrationModel& m) {
  return {{"temperature", m.temperature},
          {"fit_nll", m.fit_nll},
          {"nll_at_unit_temperature", m.unit_nll},
          {"at_search_bound", m.at_search_bound}};
}

inline json to_json(const ModelComparison& c) {
  json models = json::array();
  for (const auto& m : c.models) {
    models.push_back({{"model_id", m.model_id},
                      {"tau_opt", m.optimum.tau()},
                      {"reject_all", m.optimum.policy.reject_all},
                      {"value_at_opt", m.optimum.total_value},
                      {"accepted_accuracy_at_opt", optional_number(m.optimum.accepted_accuracy)},
                      {"rejection_rate_at_opt", m.optimum.rejection_rate},
                      {"accuracy", m.accuracy}});
  }
  return {{"models", models},
          {"ranking_by_value", c.by_value},
          {"ranking_by_accuracy", c.by_accuracy},
          {"rankings_diverge", c.rankings_diverge}};
}

inline json to_json(const ScenarioValueTable& t) {
  json scenarios = json::object();
  for (const auto& [sc, e] : t.scenarios) {
    scenarios[std::string(to_string(sc))] = {
        {"value", optional_number(e.value)}, {"alpha", optional_number(e.alpha)}, {"questions", e.questions}};
  }
  json medians = json::object();
  for (const auto& [q, s] : t.medians)
    medians[q] = {{"scenario", std::string(to_string(s.scenario))}, {"median", s.median}, {"responses", s.responses}};
  return {{"scale", std::string(to_string(t.scale))},
          {"participants", t.participants},
          {"scenarios", scenarios},
          {"overall_alpha", optional_number(t.overall_alpha)},
          {"question_medians", medians},
          {"warnings", t.warnings}};
}

inline json to_json(const ValidityReport& v) {
  return {{"questions", v.questions},
          {"spearman", v.spearman},
          {"kendall_tau_b", v.kendall},
          {"mann_whitney_u", v.mann_whitney_u},
          {"mann_whitney_p", v.mann_whitney_p}};
}

inline std::string curve_csv(const ValueCurve& curve) {
  std::string out =
      "tau,reject_all,total_value,rejection_rate,accepted_accuracy,"
      "accepted_tp,accepted_tn,accepted_fp,accepted_fn,rejected_tp,rejected_tn,rejected_fp,rejected_fn\n";
  auto row = [&](const ThresholdReport& r) {
    std::vector<std::string> f = {csv::format_short(r.tau()), r.policy.reject_all ? "true" : "false",
                                  csv::format_short(r.total_value), csv::format_short(r.rejection_rate),
                                  r.accepted_accuracy ? csv::format_short(*r.accepted_accuracy) : ""};
    for (Outcome o : kOutcomes) f.push_back(std::to_string(r.counts.accepted_of(o)));
    for (Outcome o : kOutcomes) f.push_back(std::to_string(r.counts.rejected_of(o)));
    csv::append_row(out, f);
  };
  for (const auto& p : curve.points) row(p);
  row(curve.reject_all);
  return out;
}

inline std::string scenario_table_csv(const std::vector<ScenarioValueTable>& tables) {
  std::string out = "scale,scenario,value,alpha,questions\n";
  for (const auto& t : tables) {
    for (const auto& [sc, e] : t.scenarios) {
      csv::append_row(out, {std::string(to_string(t.scale)), std::string(to_string(sc)),
                            e.value ? csv::format_short(*e.value) : "", e.alpha ? csv::format_short(*e.alpha) : "",
                            std::to_string(e.questions)});
    }
    csv::append_row(out, {std::string(to_string(t.scale)), "ALL", "",
                          t.overall_alpha ? csv::format_short(*t.overall_alpha) : "", std::to_string(t.medians.size())});
  }
  return out;
}

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Self-contained SVG line chart of V(tau) with a diamond at the optimum.
inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string curve_svg(const ValueCurve& curve, const std::string& title) {
  constexpr double width = 720, height = 420;
  constexpr double left = 80, right = 30, top = 50, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  double lo = curve.reject_all.total_value, hi = lo;
  for (const auto& p : curve.points) {
    lo = std::min(lo, p.total_value);
    hi = std::max(hi, p.total_value);
  }
  if (hi == lo) {
    hi += 1.0;
    lo -= 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto x_of = [&](double tau) { return left + (tau - 0.5) / 0.5 * plot_w; };
  auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };
  using detail::fixed;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(height, 0) +
       "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  s += "<text x=\"" + fixed(width / 2) + "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\" fill=\"#222222\">" + xml_escape(title) + "</text>\n";

  // Axes and grid.
  s += "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double tau = 0.5 + 0.1 * i;
    s += "<line x1=\"" + fixed(x_of(tau)) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(x_of(tau)) + "\" y2=\"" +
         fixed(top + plot_h) + "\"/>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double v = lo + (hi - lo) * i / 5.0;
    s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y_of(v)) + "\" x2=\"" + fixed(left + plot_w) + "\" y2=\"" +
         fixed(y_of(v)) + "\"/>\n";
  }
  s += "</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444444\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double tau = 0.5 + 0.1 * i;
    s += "<text x=\"" + fixed(x_of(tau)) + "\" y=\"" + fixed(top + plot_h + 18) + "\" text-anchor=\"middle\">" +
         fixed(tau, 1) + "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double v = lo + (hi - lo) * i / 5.0;
    s += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(y_of(v) + 4) + "\" text-anchor=\"end\">" +
         csv::format_short(v) + "</text>\n";
  }
  s += "<text x=\"" + fixed(left + plot_w / 2) + "\" y=\"" + fixed(height - 16) +
       "\" text-anchor=\"middle\" font-size=\"13\">rejection threshold</text>\n";
  s += "<text x=\"18\" y=\"" + fixed(top + plot_h / 2) + "\" text-anchor=\"middle\" font-size=\"13\" "
       "transform=\"rotate(-90 18 " + fixed(top + plot_h / 2) + ")\">total value</text>\n";
  s += "</g>\n";
  if (lo < 0.0 && hi > 0.0)
    s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y_of(0)) + "\" x2=\"" + fixed(left + plot_w) + "\" y2=\"" +
         fixed(y_of(0)) + "\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";
  s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(plot_w) + "\" height=\"" +
       fixed(plot_h) + "\" fill=\"none\" stroke=\"#444444\"/>\n";

  s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (i) s += ' ';
    s += fixed(x_of(curve.points[i].tau())) + "," + fixed(y_of(curve.points[i].total_value));
  }
  s += "\"/>\n";

  // Reject-all sentinel drawn just inside the right edge.
  const double sx = x_of(1.0), sy = y_of(curve.reject_all.total_value);
  s += "<circle cx=\"" + fixed(sx) + "\" cy=\"" + fixed(sy) + "\" r=\"4\" fill=\"none\" stroke=\"#d62728\" "
       "stroke-width=\"1.5\"/>\n";

  const auto& best = curve.argmax;
  const double bx = best.policy.reject_all ? sx : x_of(best.tau());
  const double by = y_of(best.total_value);
  s += "<polygon points=\"" + fixed(bx) + "," + fixed(by - 7) + " " + fixed(bx + 7) + "," + fixed(by) + " " +
       fixed(bx) + "," + fixed(by + 7) + " " + fixed(bx - 7) + "," + fixed(by) +
       "\" fill=\"#ff7f0e\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
  s += "<text x=\"" + fixed(std::min(bx + 10, left + plot_w - 120)) + "\" y=\"" + fixed(std::max(by - 10, top + 14)) +
       "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222222\">" +
       (best.policy.reject_all ? std::string("reject all") : "tau=" + detail::fixed(best.tau(), 3)) +
       " V=" + csv::format_short(best.total_value) + "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace vsr::report
