#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "vsr/error.hpp"

namespace vsr {

enum class Label { Neg, Pos };
enum class ScoreKind { RawLogits, Probability };
enum class Outcome { TP, TN, FP, FN };

inline constexpr Outcome kOutcomes[] = {Outcome::TP, Outcome::TN, Outcome::FP, Outcome::FN};

inline std::string_view to_string(Label l) { return l == Label::Pos ? "pos" : "neg"; }

inline std::string_view to_string(ScoreKind k) {
  return k == ScoreKind::RawLogits ? "raw_logits" : "probability";
}

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::TP: return "TP";
    case Outcome::TN: return "TN";
    case Outcome::FP: return "FP";
    case Outcome::FN: return "FN";
  }
  return "?";
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "pos") return Label::Pos;
  if (s == "neg") return Label::Neg;
  return std::nullopt;
}

inline std::optional<ScoreKind> parse_score_kind(std::string_view s) {
  if (s == "raw_logits") return ScoreKind::RawLogits;
  if (s == "probability") return ScoreKind::Probability;
  return std::nullopt;
}

/// Numerically stable logistic function.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// One classifier output on one item.
///
/// For `RawLogits`, `score_a` is the logit of the negative class and
/// `score_b` the logit of the positive class. For `Probability`,
/// `score_a` is p(pos) and `score_b` is absent.
struct PredictionRecord {
  std::string model_id;
  std::string item_id;
  ScoreKind score_kind = ScoreKind::Probability;
  double score_a = 0.0;
  std::optional<double> score_b;
  Label true_label = Label::Neg;

  static PredictionRecord probability(std::string model, std::string item, double p_pos, Label truth) {
    return {std::move(model), std::move(item), ScoreKind::Probability, p_pos, std::nullopt, truth};
  }

  static PredictionRecord logits(std::string model, std::string item, double logit_neg, double logit_pos,
                                 Label truth) {
    return {std::move(model), std::move(item), ScoreKind::RawLogits, logit_neg, logit_pos, truth};
  }

  bool has_logits() const { return score_kind == ScoreKind::RawLogits; }

  /// Positive-class logit minus negative-class logit.
  double logit_margin() const { return score_b.value_or(0.0) - score_a; }

  /// Predicted label: argmax of the logits, or p(pos) >= 0.5. Ties go to pos.
  Label predicted() const {
    if (has_logits()) return logit_margin() >= 0.0 ? Label::Pos : Label::Neg;
    return score_a >= 0.5 ? Label::Pos : Label::Neg;
  }

  /// Confidence of the predicted class, always in [0.5, 1].
  double confidence() const {
    if (has_logits()) return logistic(std::abs(logit_margin()));
    return score_a >= 0.5 ? score_a : 1.0 - score_a;
  }

  bool correct() const { return predicted() == true_label; }

  bool operator==(const PredictionRecord&) const = default;
};

inline Outcome classify_outcome(Label predicted, Label truth) {
  if (predicted == Label::Pos) return truth == Label::Pos ? Outcome::TP : Outcome::FP;
  return truth == Label::Neg ? Outcome::TN : Outcome::FN;
}

inline Outcome classify_outcome(const PredictionRecord& r) {
  return classify_outcome(r.predicted(), r.true_label);
}

/// Perceived value of each decision outcome. Correct outcomes are
/// non-negative; errors and rejections are non-positive.
struct ValueModel {
  double v_tp = 0.0;
  double v_tn = 0.0;
  double v_fp = 0.0;
  double v_fn = 0.0;
  double v_r = 0.0;

  double of(Outcome o) const {
    switch (o) {
      case Outcome::TP: return v_tp;
      case Outcome::TN: return v_tn;
      case Outcome::FP: return v_fp;
      case Outcome::FN: return v_fn;
    }
    return 0.0;
  }

  ValueModel scaled(double c) const { return {v_tp * c, v_tn * c, v_fp * c, v_fn * c, v_r * c}; }

  /// Throws SignViolation or AllZero.
  void validate() const {
    auto finite = [](const char* name, double v) {
      if (!std::isfinite(v)) fail(ErrorKind::SignViolation, std::string(name) + " is not finite");
    };
    finite("v_tp", v_tp);
    finite("v_tn", v_tn);
    finite("v_fp", v_fp);
    finite("v_fn", v_fn);
    finite("v_r", v_r);
    if (v_tp < 0) fail(ErrorKind::SignViolation, "v_tp must be >= 0");
    if (v_tn < 0) fail(ErrorKind::SignViolation, "v_tn must be >= 0");
    if (v_fp > 0) fail(ErrorKind::SignViolation, "v_fp must be <= 0");
    if (v_fn > 0) fail(ErrorKind::SignViolation, "v_fn must be <= 0");
    if (v_r > 0) fail(ErrorKind::SignViolation, "v_r must be <= 0");
    if (v_tp == 0 && v_tn == 0 && v_fp == 0 && v_fn == 0 && v_r == 0)
      fail(ErrorKind::AllZero, "all five values are zero");
  }

  bool operator==(const ValueModel&) const = default;
};

enum class Scale { ME, S100 };
enum class Scenario { TP, TN, FP, FN, REJ };
enum class Judgment { Hateful, NotHateful };
enum class Stance { Agree, Neutral, Disagree };

inline constexpr Scenario kScenarios[] = {Scenario::TP, Scenario::TN, Scenario::FP, Scenario::FN,
                                          Scenario::REJ};

inline std::string_view to_string(Scale s) { return s == Scale::ME ? "ME" : "S100"; }

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::TP: return "TP";
    case Scenario::TN: return "TN";
    case Scenario::FP: return "FP";
    case Scenario::FN: return "FN";
    case Scenario::REJ: return "REJ";
  }
  return "?";
}

inline std::string_view to_string(Judgment j) { return j == Judgment::Hateful ? "hateful" : "not_hateful"; }

inline std::string_view to_string(Stance s) {
  switch (s) {
    case Stance::Agree: return "agree";
    case Stance::Neutral: return "neutral";
    case Stance::Disagree: return "disagree";
  }
  return "?";
}

inline std::optional<Scale> parse_scale(std::string_view s) {
  if (s == "ME" || s == "me") return Scale::ME;
  if (s == "S100" || s == "s100") return Scale::S100;
  return std::nullopt;
}

inline std::optional<Scenario> parse_scenario(std::string_view s) {
  for (Scenario sc : kScenarios)
    if (s == to_string(sc)) return sc;
  return std::nullopt;
}

inline std::optional<Judgment> parse_judgment(std::string_view s) {
  if (s == "hateful") return Judgment::Hateful;
  if (s == "not_hateful") return Judgment::NotHateful;
  return std::nullopt;
}

inline std::optional<Stance> parse_stance(std::string_view s) {
  if (s == "agree") return Stance::Agree;
  if (s == "neutral") return Stance::Neutral;
  if (s == "disagree") return Stance::Disagree;
  return std::nullopt;
}

/// One participant's judgment of one scenario question.
struct SurveyResponse {
  std::string participant_id;
  Scale scale = Scale::ME;
  std::string question_id;
  Scenario scenario = Scenario::TP;
  Judgment hateful_judgment = Judgment::NotHateful;
  Stance stance = Stance::Neutral;
  std::optional<double> magnitude;
  bool excluded = false;

  bool operator==(const SurveyResponse&) const = default;
};

}  // namespace vsr
