#include <gtest/gtest.h>

#include "synthetic.hpp"
#include "vsr/ingest.hpp"
#include "vsr/random.hpp"

using namespace vsr;

namespace {

constexpr const char* kPredHeader = "model_id,item_id,score_kind,score_a,score_b,true_label\n";
constexpr const char* kSurveyHeader =
    "participant_id,scale,question_id,scenario,hateful_judgment,stance,magnitude,excluded\n";

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected vsr::Error";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(ParsePredictions, ProbabilityRow) {
  auto recs = parse_predictions_csv(std::string(kPredHeader) + "m1,i1,probability,0.9,,pos\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].model_id, "m1");
  EXPECT_EQ(recs[0].item_id, "i1");
  EXPECT_EQ(recs[0].score_kind, ScoreKind::Probability);
  EXPECT_DOUBLE_EQ(recs[0].score_a, 0.9);
  EXPECT_FALSE(recs[0].score_b.has_value());
  EXPECT_EQ(recs[0].true_label, Label::Pos);
  EXPECT_EQ(recs[0].predicted(), Label::Pos);
  EXPECT_DOUBLE_EQ(recs[0].confidence(), 0.9);
}

TEST(ParsePredictions, DerivedLabelAndConfidence) {
  auto recs = parse_predictions_csv(std::string(kPredHeader) +
                                    "m,a,probability,0.5,,neg\n"
                                    "m,b,probability,0.2,,neg\n"
                                    "m,c,raw_logits,1.0,-1.0,neg\n");
  EXPECT_EQ(recs[0].predicted(), Label::Pos);  // tie goes to pos
  EXPECT_DOUBLE_EQ(recs[0].confidence(), 0.5);
  EXPECT_EQ(recs[1].predicted(), Label::Neg);
  EXPECT_DOUBLE_EQ(recs[1].confidence(), 0.8);
  EXPECT_EQ(recs[2].predicted(), Label::Neg);
  EXPECT_NEAR(recs[2].confidence(), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
}

TEST(ParsePredictions, OutOfRangeProbability) {
  EXPECT_EQ(kind_of([] { parse_predictions_csv(std::string(kPredHeader) + "m1,i1,probability,1.3,,pos\n"); }),
            ErrorKind::OutOfRangeProbability);
}

TEST(ParsePredictions, DuplicateKey) {
  EXPECT_EQ(kind_of([] {
              parse_predictions_csv(std::string(kPredHeader) +
                                    "m1,i1,probability,0.9,,pos\nm1,i1,probability,0.2,,neg\n");
            }),
            ErrorKind::DuplicateKey);
  // Same item under another model is fine.
  EXPECT_NO_THROW(
      parse_predictions_csv(std::string(kPredHeader) + "m1,i1,probability,0.9,,pos\nm2,i1,probability,0.2,,neg\n"));
}

TEST(ParsePredictions, MalformedRowsReportLine) {
  try {
    parse_predictions_csv(std::string(kPredHeader) + "m,a,probability,0.9,,pos\nm,b,probability,abc,,pos\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MalformedRow);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_EQ(kind_of([] { parse_predictions_csv(std::string(kPredHeader) + "m,a,raw_logits,1.0,,pos\n"); }),
            ErrorKind::MalformedRow);
  EXPECT_EQ(kind_of([] { parse_predictions_csv(std::string(kPredHeader) + "m,a,raw_logits,inf,1,pos\n"); }),
            ErrorKind::MalformedRow);
  EXPECT_EQ(kind_of([] { parse_predictions_csv(std::string(kPredHeader) + "m,a,probability,0.9,0.1,pos\n"); }),
            ErrorKind::MalformedRow);
  EXPECT_EQ(kind_of([] { parse_predictions_csv(std::string(kPredHeader) + "m,a,probability,0.9,,maybe\n"); }),
            ErrorKind::MalformedRow);
  EXPECT_EQ(kind_of([] { parse_predictions_csv(std::string(kPredHeader) + "m,a,probability,0.9\n"); }),
            ErrorKind::MalformedRow);
  EXPECT_EQ(kind_of([] { parse_predictions_csv("model_id,item_id\nm,a\n"); }), ErrorKind::MalformedRow);
}

TEST(ParsePredictions, QuotedFieldsAndCrlf) {
  auto recs = parse_predictions_csv(std::string(kPredHeader) + "\"m,1\",\"it\"\"em\",probability,0.25,,neg\r\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].model_id, "m,1");
  EXPECT_EQ(recs[0].item_id, "it\"em");
}

TEST(ParsePredictions, JsonFormat) {
  auto recs = parse_predictions_json(R"([
    {"model_id": "m1", "item_id": "i1", "score_kind": "probability", "score_a": 0.9, "true_label": "pos"},
    {"model_id": "m1", "item_id": "i2", "score_kind": "raw_logits", "score_a": 0.5, "score_b": -0.5, "true_label": "neg"}
  ])");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].score_kind, ScoreKind::RawLogits);
  EXPECT_DOUBLE_EQ(*recs[1].score_b, -0.5);
  EXPECT_EQ(kind_of([] {
              parse_predictions_json(
                  R"([{"model_id":"m","item_id":"i","score_kind":"probability","score_a":-0.1,"true_label":"pos"}])");
            }),
            ErrorKind::OutOfRangeProbability);
}

TEST(ParsePredictions, RoundTripPreservesRecordsAndOrder) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PredictionRecord> recs;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      const Label truth = rng.bernoulli(0.5) ? Label::Pos : Label::Neg;
      const std::string item = "item " + std::to_string(i) + (rng.bernoulli(0.2) ? ",\"q\"" : "");
      if (rng.bernoulli(0.5))
        recs.push_back(PredictionRecord::probability("model", item, rng.uniform(), truth));
      else
        recs.push_back(PredictionRecord::logits("model", item, 10 * rng.normal(), 1e-3 * rng.normal(), truth));
    }
    EXPECT_EQ(parse_predictions_csv(write_predictions_csv(recs)), recs);
  }
}

TEST(ParseSurvey, NeutralWithoutMagnitude) {
  auto rs = parse_survey_csv(std::string(kSurveyHeader) + "p1,ME,q1,TP,hateful,neutral,,false\n");
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0].stance, Stance::Neutral);
  EXPECT_FALSE(rs[0].magnitude.has_value());
}

TEST(ParseSurvey, MagnitudeRules) {
  EXPECT_EQ(kind_of([] { parse_survey_csv(std::string(kSurveyHeader) + "p1,ME,q1,TP,hateful,agree,,false\n"); }),
            ErrorKind::MagnitudeMissingForNonNeutral);
  EXPECT_EQ(kind_of([] { parse_survey_csv(std::string(kSurveyHeader) + "p1,ME,q1,TP,hateful,neutral,5,false\n"); }),
            ErrorKind::MagnitudePresentForNeutral);
  EXPECT_EQ(kind_of([] { parse_survey_csv(std::string(kSurveyHeader) + "p1,ME,q1,TP,hateful,agree,0,false\n"); }),
            ErrorKind::MalformedRow);
  EXPECT_EQ(kind_of([] { parse_survey_csv(std::string(kSurveyHeader) + "p1,S100,q1,TP,hateful,agree,101,false\n"); }),
            ErrorKind::MalformedRow);
  EXPECT_EQ(kind_of([] { parse_survey_csv(std::string(kSurveyHeader) + "p1,ME,q1,XX,hateful,agree,3,false\n"); }),
            ErrorKind::MalformedRow);
  // ME magnitudes are unbounded.
  EXPECT_NO_THROW(parse_survey_csv(std::string(kSurveyHeader) + "p1,ME,q1,TP,hateful,agree,5000,false\n"));
}

TEST(ParseSurvey, ExcludedRowsAreKeptButFlagged) {
  auto rs = parse_survey_csv(std::string(kSurveyHeader) +
                             "p1,ME,q1,TP,hateful,agree,10,true\n"
                             "p2,ME,q1,TP,hateful,disagree,20,false\n"
                             "p3,S100,q1,TP,not_hateful,neutral,,0\n");
  ASSERT_EQ(rs.size(), 3u);
  EXPECT_TRUE(rs[0].excluded);
  EXPECT_FALSE(rs[1].excluded);
  const auto kept = included_responses(rs);
  std::size_t excluded = 0;
  for (const auto& r : rs) excluded += r.excluded;
  EXPECT_EQ(kept.size() + excluded, rs.size());
}

TEST(ParseSurvey, RoundTrip) {
  Rng rng(11);
  std::vector<SurveyResponse> rs;
  for (int i = 0; i < 60; ++i) {
    SurveyResponse s;
    s.participant_id = "p" + std::to_string(rng.below(5));
    s.scale = rng.bernoulli(0.5) ? Scale::ME : Scale::S100;
    s.question_id = "q" + std::to_string(rng.below(8));
    s.scenario = kScenarios[rng.below(5)];
    s.hateful_judgment = rng.bernoulli(0.5) ? Judgment::Hateful : Judgment::NotHateful;
    s.stance = static_cast<Stance>(rng.below(3));
    if (s.stance != Stance::Neutral)
      s.magnitude = s.scale == Scale::S100 ? 1.0 + static_cast<double>(rng.below(100)) : rng.uniform(0.01, 1000.0);
    s.excluded = rng.bernoulli(0.1);
    rs.push_back(s);
  }
  EXPECT_EQ(parse_survey_csv(write_survey_csv(rs)), rs);
}

TEST(ParseValueModel, SurveyedValues) {
  auto vm = parse_value_model_json(R"({"v_tp": 18.15, "v_tn": 36.32, "v_fp": -16.69, "v_fn": -28.08, "v_r": -4.82})");
  EXPECT_DOUBLE_EQ(vm.v_tp, 18.15);
  EXPECT_DOUBLE_EQ(vm.v_r, -4.82);
}

TEST(ParseValueModel, RegulationVariant) {
  EXPECT_NO_THROW(parse_value_model_json(R"({"v_tp": 0, "v_tn": 0, "v_fp": -16.69, "v_fn": -28.08, "v_r": -4.82})"));
}

TEST(ParseValueModel, Violations) {
  try {
    parse_value_model_json(R"({"v_tp": 1, "v_tn": 1, "v_fp": 2, "v_fn": -1, "v_r": -1})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SignViolation);
    EXPECT_NE(std::string(e.what()).find("v_fp"), std::string::npos);
  }
  EXPECT_EQ(kind_of([] { parse_value_model_json(R"({"v_tp": 0, "v_tn": 0, "v_fp": 0, "v_fn": 0, "v_r": 0})"); }),
            ErrorKind::AllZero);
  EXPECT_EQ(kind_of([] { parse_value_model_json(R"({"v_tp": 1, "v_tn": 1, "v_fp": -1, "v_fn": -1})"); }),
            ErrorKind::MalformedRow);
}
