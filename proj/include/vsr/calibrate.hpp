#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vsr/error.hpp"
#include "vsr/types.hpp"

namespace vsr {

/// Fitted temperature-scaling parameters.
struct CalibrationModel {
  double temperature = 1.0;
  double fit_nll = 0.0;           // mean NLL on the fitting set at `temperature`
  double unit_nll = 0.0;          // mean NLL on the fitting set at T = 1
  bool at_search_bound = false;   // optimum pinned at e^-4 or e^4
};

struct CalibratedConfidence {
  double c_neg = 0.5;
  double c_pos = 0.5;
  Label predicted = Label::Pos;  // argmax of the raw logits

  double confidence() const { return predicted == Label::Pos ? c_pos : c_neg; }
};

inline constexpr double kMinLogTemperature = -4.0;
inline constexpr double kMaxLogTemperature = 4.0;

namespace detail {

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline void require_logits(const PredictionRecord& r) {
  if (!r.has_logits())
    fail(ErrorKind::ProbabilityKindUnsupported,
         "record (" + r.model_id + ", " + r.item_id + ") carries probabilities, not logits");
}

}  // namespace detail

/// Mean negative log-likelihood of softmax(logits / T) against the true labels.
inline double mean_nll(std::span<const PredictionRecord> records, double temperature) {
  double sum = 0.0;
  for (const auto& r : records) {
    const double m = r.logit_margin() / temperature;
    sum += detail::softplus(r.true_label == Label::Pos ? -m : m);
  }
  return sum / static_cast<double>(records.size());
}

/// Golden-section search for the temperature minimising mean NLL over
/// log T in [-4, 4], to 1e-6 in log T.
inline CalibrationModel fit_temperature(std::span<const PredictionRecord> records) {
  for (const auto& r : records) detail::require_logits(r);
  if (records.size() < 2) fail(ErrorKind::TooFewRecords, "need at least 2 records to fit a temperature");
  const bool has_pos = std::any_of(records.begin(), records.end(), [](auto& r) { return r.true_label == Label::Pos; });
  const bool has_neg = std::any_of(records.begin(), records.end(), [](auto& r) { return r.true_label == Label::Neg; });
  if (!has_pos || !has_neg) fail(ErrorKind::SingleClassOnly, "both classes must appear among the true labels");

  auto nll_at = [&](double log_t) { return mean_nll(records, std::exp(log_t)); };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = kMinLogTemperature;
  double hi = kMaxLogTemperature;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = nll_at(x1);
  double f2 = nll_at(x2);
  while (hi - lo > 1e-6) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = nll_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = nll_at(x2);
    }
  }
  double best_log_t = 0.5 * (lo + hi);
  double best = nll_at(best_log_t);

  CalibrationModel model;
  model.unit_nll = nll_at(0.0);
  // The starting point T = 1 is inside the bracket; never return something worse.
  if (model.unit_nll < best) {
    best = model.unit_nll;
    best_log_t = 0.0;
  }
  model.temperature = std::exp(best_log_t);
  model.fit_nll = best;
  model.at_search_bound = best_log_t - kMinLogTemperature < 1e-5 || kMaxLogTemperature - best_log_t < 1e-5;
  return model;
}

inline CalibratedConfidence apply_temperature(const PredictionRecord& record, double temperature) {
  detail::require_logits(record);
  if (!(temperature > 0.0)) fail(ErrorKind::InvalidArgument, "temperature must be positive");
  const double m = record.logit_margin() / temperature;
  CalibratedConfidence out;
  out.c_pos = logistic(m);
  out.c_neg = logistic(-m);
  out.predicted = record.predicted();
  return out;
}

inline CalibratedConfidence apply_temperature(const PredictionRecord& record, const CalibrationModel& model) {
  return apply_temperature(record, model.temperature);
}

/// Rewrites logit records as probability records at the given temperature.
/// Probability records pass through untouched only when `temperature` is 1.
inline std::vector<PredictionRecord> calibrated(std::span<const PredictionRecord> records, double temperature) {
  std::vector<PredictionRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.has_logits()) {
      if (temperature != 1.0)
        fail(ErrorKind::ProbabilityKindUnsupported, "cannot rescale probability record " + r.item_id);
      out.push_back(r);
      continue;
    }
    auto c = apply_temperature(r, temperature);
    out.push_back(r);
    out.back().score_a = c.c_pos;
    out.back().score_b.reset();
    out.back().score_kind = ScoreKind::Probability;
    // Keep the logit argmax when the rescaled probability rounds to 0.5.
    if (c.predicted == Label::Neg && out.back().score_a >= 0.5)
      out.back().score_a = std::nextafter(0.5, 0.0);
  }
  return out;
}

/// Confidence of a decision and whether it was right.
struct ScoredOutcome {
  double confidence = 0.5;
  bool correct = false;
};

/// Expected calibration error over `bins` equal-width bins on [0.5, 1].
inline double expected_calibration_error(std::span<const ScoredOutcome> outcomes, int bins) {
  if (bins < 1) fail(ErrorKind::InvalidArgument, "bins must be >= 1");
  if (outcomes.empty()) fail(ErrorKind::EmptyInput, "no records for ECE");
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> hits(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
  const double width = 0.5 / bins;
  for (const auto& o : outcomes) {
    int b = static_cast<int>(std::floor((o.confidence - 0.5) / width));
    b = std::clamp(b, 0, bins - 1);
    conf_sum[b] += o.confidence;
    hits[b] += o.correct ? 1.0 : 0.0;
    ++count[b];
  }
  const double n = static_cast<double>(outcomes.size());
  double ece = 0.0;
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 0) continue;
    const double k = static_cast<double>(count[b]);
    ece += (k / n) * std::abs(hits[b] / k - conf_sum[b] / k);
  }
  return ece;
}

inline double expected_calibration_error(std::span<const PredictionRecord> records, int bins,
                                         double temperature = 1.0) {
  std::vector<ScoredOutcome> outcomes;
  outcomes.reserve(records.size());
  for (const auto& r : records) {
    const double c = (r.has_logits() && temperature != 1.0) ? apply_temperature(r, temperature).confidence()
                                                            : r.confidence();
    outcomes.push_back({c, r.correct()});
  }
  return expected_calibration_error(std::span<const ScoredOutcome>(outcomes), bins);
}

}  // namespace vsr
