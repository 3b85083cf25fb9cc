#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vsr/error.hpp"
#include "vsr/types.hpp"

namespace vsr {

enum class Decision { Accept, Reject };

/// Per-class rejection thresholds. A single threshold sets both.
struct RejectionPolicy {
  double tau_pos = 0.5;
  double tau_neg = 0.5;
  bool reject_all = false;

  static RejectionPolicy single(double tau) { return {tau, tau, false}; }
  static RejectionPolicy per_class(double tau_pos, double tau_neg) { return {tau_pos, tau_neg, false}; }
  static RejectionPolicy reject_everything() { return {1.0, 1.0, true}; }

  double threshold_for(Label predicted) const { return predicted == Label::Pos ? tau_pos : tau_neg; }

  bool operator==(const RejectionPolicy&) const = default;
};

/// Accept iff the confidence reaches the threshold of the predicted class.
inline Decision decide(double confidence, Label predicted, const RejectionPolicy& policy) {
  if (policy.reject_all) return Decision::Reject;
  return confidence >= policy.threshold_for(predicted) ? Decision::Accept : Decision::Reject;
}

inline Label predicted_label(Outcome o) {
  return (o == Outcome::TP || o == Outcome::FP) ? Label::Pos : Label::Neg;
}

struct OutcomeCounts {
  std::array<std::size_t, 4> accepted{};
  std::array<std::size_t, 4> rejected{};

  std::size_t& accepted_of(Outcome o) { return accepted[static_cast<std::size_t>(o)]; }
  std::size_t& rejected_of(Outcome o) { return rejected[static_cast<std::size_t>(o)]; }
  std::size_t accepted_of(Outcome o) const { return accepted[static_cast<std::size_t>(o)]; }
  std::size_t rejected_of(Outcome o) const { return rejected[static_cast<std::size_t>(o)]; }

  std::size_t accepted_total() const { return accepted[0] + accepted[1] + accepted[2] + accepted[3]; }
  std::size_t rejected_total() const { return rejected[0] + rejected[1] + rejected[2] + rejected[3]; }
  std::size_t total() const { return accepted_total() + rejected_total(); }

  bool operator==(const OutcomeCounts&) const = default;
};

/// Total value from outcome counts:
///   sum over accepted outcomes p of (V_p - V_r) N_p
/// + sum over rejected outcomes q of (V_r - V_q) N_q
inline double total_value(const OutcomeCounts& counts, const ValueModel& vm) {
  double v = 0.0;
  for (Outcome o : kOutcomes) {
    v += (vm.of(o) - vm.v_r) * static_cast<double>(counts.accepted_of(o));
    v += (vm.v_r - vm.of(o)) * static_cast<double>(counts.rejected_of(o));
  }
  return v;
}

struct ThresholdReport {
  RejectionPolicy policy;
  double total_value = 0.0;
  double rejection_rate = 0.0;
  std::optional<double> accepted_accuracy;  // absent when nothing is accepted
  OutcomeCounts counts;

  double tau() const { return policy.tau_pos; }
};

inline ThresholdReport make_report(const RejectionPolicy& policy, const OutcomeCounts& counts, const ValueModel& vm) {
  ThresholdReport r;
  r.policy = policy;
  r.counts = counts;
  r.total_value = total_value(counts, vm);
  r.rejection_rate = static_cast<double>(counts.rejected_total()) / static_cast<double>(counts.total());
  const std::size_t acc = counts.accepted_total();
  if (acc > 0) {
    const std::size_t right = counts.accepted_of(Outcome::TP) + counts.accepted_of(Outcome::TN);
    r.accepted_accuracy = static_cast<double>(right) / static_cast<double>(acc);
  }
  return r;
}

inline ThresholdReport value_at(std::span<const PredictionRecord> records, const ValueModel& vm,
                                const RejectionPolicy& policy) {
  if (records.empty()) fail(ErrorKind::EmptyInput, "no prediction records");
  OutcomeCounts counts;
  for (const auto& r : records) {
    const Outcome o = classify_outcome(r);
    if (decide(r.confidence(), r.predicted(), policy) == Decision::Accept) ++counts.accepted_of(o);
    else ++counts.rejected_of(o);
  }
  return make_report(policy, counts, vm);
}

/// Threshold grid 0.5, 0.5 + step, ..., 1.0, rounded to 12 decimals.
inline std::vector<double> threshold_grid(double step) {
  if (!(step > 0.0) || step > 0.25) fail(ErrorKind::BadStep, "grid step must lie in (0, 0.25]");
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    double tau = std::round((0.5 + static_cast<double>(i) * step) * 1e12) / 1e12;
    if (tau > 1.0) break;
    grid.push_back(tau);
  }
  if (grid.back() < 1.0) grid.push_back(1.0);
  return grid;
}

/// Confidences sorted per outcome; counts at a threshold are binary searches.
class ScoredSet {
 public:
  explicit ScoredSet(std::span<const PredictionRecord> records) {
    for (const auto& r : records) by_outcome_[static_cast<std::size_t>(classify_outcome(r))].push_back(r.confidence());
    for (auto& v : by_outcome_) std::sort(v.begin(), v.end());
    size_ = records.size();
  }

  std::size_t size() const { return size_; }

  OutcomeCounts counts(const RejectionPolicy& policy) const {
    OutcomeCounts c;
    for (Outcome o : kOutcomes) {
      const auto& v = by_outcome_[static_cast<std::size_t>(o)];
      std::size_t acc = 0;
      if (!policy.reject_all) {
        const double tau = policy.threshold_for(predicted_label(o));
        acc = static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), tau));
      }
      c.accepted_of(o) = acc;
      c.rejected_of(o) = v.size() - acc;
    }
    return c;
  }

 private:
  std::array<std::vector<double>, 4> by_outcome_;
  std::size_t size_ = 0;
};

struct ValueCurve {
  std::vector<ThresholdReport> points;  // single-threshold grid, increasing tau
  ThresholdReport reject_all;           // every prediction rejected
  ThresholdReport argmax;               // best of points and reject_all; ties go to the smallest tau
};

inline ValueCurve sweep(std::span<const PredictionRecord> records, const ValueModel& vm, double grid_step) {
  if (records.empty()) fail(ErrorKind::EmptyInput, "no prediction records");
  const auto grid = threshold_grid(grid_step);
  const ScoredSet scored(records);
  ValueCurve curve;
  curve.points.reserve(grid.size());
  for (double tau : grid) {
    const auto policy = RejectionPolicy::single(tau);
    curve.points.push_back(make_report(policy, scored.counts(policy), vm));
  }
  const auto sentinel = RejectionPolicy::reject_everything();
  curve.reject_all = make_report(sentinel, scored.counts(sentinel), vm);

  curve.argmax = curve.points.front();
  for (const auto& p : curve.points)
    if (p.total_value > curve.argmax.total_value) curve.argmax = p;
  if (curve.reject_all.total_value > curve.argmax.total_value) curve.argmax = curve.reject_all;
  return curve;
}

struct PerClassCurve {
  std::vector<ThresholdReport> points;  // tau_pos major, tau_neg minor
  ThresholdReport argmax;               // ties go to the smallest (tau_pos, tau_neg)
};

/// Two-dimensional sweep over independent positive and negative thresholds.
inline PerClassCurve sweep_per_class(std::span<const PredictionRecord> records, const ValueModel& vm,
                                     double grid_step) {
  if (records.empty()) fail(ErrorKind::EmptyInput, "no prediction records");
  const auto grid = threshold_grid(grid_step);
  const ScoredSet scored(records);
  PerClassCurve curve;
  curve.points.reserve(grid.size() * grid.size());
  for (double tp : grid) {
    for (double tn : grid) {
      const auto policy = RejectionPolicy::per_class(tp, tn);
      curve.points.push_back(make_report(policy, scored.counts(policy), vm));
    }
  }
  curve.argmax = curve.points.front();
  for (const auto& p : curve.points)
    if (p.total_value > curve.argmax.total_value) curve.argmax = p;
  return curve;
}

/// Threshold at which accepting a calibrated decision of `cls` breaks even:
/// gamma / (gamma + 1) with gamma = |incorrect value| / correct value,
/// rounded to 12 decimals like the threshold grid.
inline double theoretical_threshold(const ValueModel& vm, Label cls) {
  const double correct = cls == Label::Pos ? vm.v_tp : vm.v_tn;
  const double incorrect = cls == Label::Pos ? vm.v_fp : vm.v_fn;
  if (!(correct > 0.0))
    fail(ErrorKind::UndefinedGamma, std::string("correct value for ") + std::string(to_string(cls)) + " is not positive");
  const double gamma = std::abs(incorrect) / correct;
  return std::round(gamma / (gamma + 1.0) * 1e12) / 1e12;
}

inline double cost_ratio(const ValueModel& vm, Label cls) {
  const double correct = cls == Label::Pos ? vm.v_tp : vm.v_tn;
  const double incorrect = cls == Label::Pos ? vm.v_fp : vm.v_fn;
  if (!(correct > 0.0))
    fail(ErrorKind::UndefinedGamma, std::string("correct value for ") + std::string(to_string(cls)) + " is not positive");
  return std::abs(incorrect) / correct;
}

// ---------------------------------------------------------------------------
// Model comparison

struct ModelScore {
  std::string model_id;
  ThresholdReport optimum;  // argmax of the value curve
  double accuracy = 0.0;    // plain accuracy, every prediction accepted
};

struct ModelComparison {
  std::vector<ModelScore> models;        // ordered by model_id
  std::vector<std::string> by_value;     // best first
  std::vector<std::string> by_accuracy;  // best first
  bool rankings_diverge = false;         // the two rankings disagree on the top model
};

inline std::map<std::string, std::vector<PredictionRecord>> split_by_model(std::span<const PredictionRecord> records) {
  std::map<std::string, std::vector<PredictionRecord>> out;
  for (const auto& r : records) out[r.model_id].push_back(r);
  return out;
}

inline ModelComparison compare_models(const std::map<std::string, std::vector<PredictionRecord>>& models,
                                      const ValueModel& vm, double grid_step) {
  if (models.size() < 2) fail(ErrorKind::InvalidArgument, "need at least two models to compare");

  std::optional<std::set<std::string>> reference;
  std::string reference_id;
  for (const auto& [id, records] : models) {
    std::set<std::string> items;
    for (const auto& r : records) items.insert(r.item_id);
    if (!reference) {
      reference = std::move(items);
      reference_id = id;
    } else if (items != *reference) {
      fail(ErrorKind::ItemSetMismatch, "models '" + reference_id + "' and '" + id + "' cover different items");
    }
  }

  ModelComparison out;
  for (const auto& [id, records] : models) {
    const auto curve = sweep(records, vm, grid_step);
    ModelScore s;
    s.model_id = id;
    s.optimum = curve.argmax;
    s.accuracy = *curve.points.front().accepted_accuracy;
    out.models.push_back(std::move(s));
  }

  auto rank = [&](auto key) {
    std::vector<const ModelScore*> order;
    for (const auto& m : out.models) order.push_back(&m);
    std::stable_sort(order.begin(), order.end(), [&](const ModelScore* a, const ModelScore* b) {
      const double ka = key(*a), kb = key(*b);
      if (ka != kb) return ka > kb;
      return a->model_id < b->model_id;
    });
    std::vector<std::string> ids;
    for (auto* m : order) ids.push_back(m->model_id);
    return ids;
  };
  out.by_value = rank([](const ModelScore& m) { return m.optimum.total_value; });
  out.by_accuracy = rank([](const ModelScore& m) { return m.accuracy; });
  out.rankings_diverge = out.by_value.front() != out.by_accuracy.front();
  return out;
}

}  // namespace vsr
