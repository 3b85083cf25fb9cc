#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "vsr/reject.hpp"
#include "vsr/report.hpp"

using namespace vsr;

namespace {

const ValueModel kSurveyed{18.15, 36.32, -16.69, -28.08, -4.82};
const ValueModel kUnit{1, 1, -1, -1, -0.1};

std::vector<PredictionRecord> two_records() {
  return {PredictionRecord::probability("m", "a", 0.9, Label::Pos),   // TP at c = 0.9
          PredictionRecord::probability("m", "b", 0.6, Label::Neg)};  // FP at c = 0.6
}

std::set<std::size_t> argmax_indices(const ValueCurve& c) {
  double best = c.points.front().total_value;
  for (const auto& p : c.points) best = std::max(best, p.total_value);
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < c.points.size(); ++i)
    if (c.points[i].total_value == best) out.insert(i);
  return out;
}

}  // namespace

TEST(Decide, ThresholdIsInclusive) {
  const auto p = RejectionPolicy::single(0.7);
  EXPECT_EQ(decide(0.9, Label::Pos, p), Decision::Accept);
  EXPECT_EQ(decide(0.7, Label::Pos, p), Decision::Accept);
  EXPECT_EQ(decide(0.69, Label::Pos, p), Decision::Reject);
  EXPECT_EQ(decide(0.99, Label::Neg, RejectionPolicy::reject_everything()), Decision::Reject);
  const auto per_class = RejectionPolicy::per_class(0.9, 0.6);
  EXPECT_EQ(decide(0.7, Label::Pos, per_class), Decision::Reject);
  EXPECT_EQ(decide(0.7, Label::Neg, per_class), Decision::Accept);
}

TEST(ClassifyOutcome, ConfusionCells) {
  EXPECT_EQ(classify_outcome(Label::Pos, Label::Pos), Outcome::TP);
  EXPECT_EQ(classify_outcome(Label::Pos, Label::Neg), Outcome::FP);
  EXPECT_EQ(classify_outcome(Label::Neg, Label::Pos), Outcome::FN);
  EXPECT_EQ(classify_outcome(Label::Neg, Label::Neg), Outcome::TN);
}

TEST(ValueAt, HandEvaluatedExamples) {
  const auto recs = two_records();
  EXPECT_NEAR(value_at(recs, kUnit, RejectionPolicy::single(0.7)).total_value, 2.0, 1e-12);
  EXPECT_NEAR(value_at(recs, kUnit, RejectionPolicy::single(0.5)).total_value, 0.2, 1e-12);
  EXPECT_NEAR(value_at(recs, kUnit, RejectionPolicy::reject_everything()).total_value, -0.2, 1e-12);
}

TEST(ValueAt, ReportFields) {
  const auto r = value_at(two_records(), kUnit, RejectionPolicy::single(0.7));
  EXPECT_DOUBLE_EQ(r.rejection_rate, 0.5);
  ASSERT_TRUE(r.accepted_accuracy);
  EXPECT_DOUBLE_EQ(*r.accepted_accuracy, 1.0);
  EXPECT_EQ(r.counts.accepted_of(Outcome::TP), 1u);
  EXPECT_EQ(r.counts.rejected_of(Outcome::FP), 1u);
  EXPECT_EQ(r.counts.total(), 2u);

  const auto none = value_at(two_records(), kUnit, RejectionPolicy::reject_everything());
  EXPECT_FALSE(none.accepted_accuracy.has_value());
  EXPECT_DOUBLE_EQ(none.rejection_rate, 1.0);
}

TEST(ValueAt, EmptyInput) {
  std::vector<PredictionRecord> none;
  EXPECT_THROW(value_at(none, kUnit, RejectionPolicy::single(0.5)), Error);
  EXPECT_THROW(sweep(none, kUnit, 0.1), Error);
}

TEST(ValueAt, MatchesPerRecordOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<PredictionRecord> recs;
    const int n = 1 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) {
      const Label truth = rng.bernoulli(0.5) ? Label::Pos : Label::Neg;
      if (rng.bernoulli(0.5)) recs.push_back(PredictionRecord::probability("m", std::to_string(i), rng.uniform(), truth));
      else recs.push_back(PredictionRecord::logits("m", std::to_string(i), rng.normal(), rng.normal(), truth));
    }
    const ValueModel vm{rng.uniform(0, 50), rng.uniform(0, 50), -rng.uniform(0, 50), -rng.uniform(0, 50),
                        -rng.uniform(0, 10)};
    const double tp = rng.uniform(0.5, 1.0), tn = rng.uniform(0.5, 1.0);
    const auto got = value_at(recs, vm, RejectionPolicy::per_class(tp, tn)).total_value;
    const auto want = oracle::total_value(recs, vm, tp, tn, false);
    EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST(Sweep, TwoRecordCurve) {
  const auto curve = sweep(two_records(), kUnit, 0.1);
  ASSERT_EQ(curve.points.size(), 6u);
  const double expected[] = {0.2, 0.2, 2.0, 2.0, 2.0, -0.2};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(curve.points[i].total_value, expected[i], 1e-12) << i;
  EXPECT_DOUBLE_EQ(curve.argmax.tau(), 0.7);
  EXPECT_FALSE(curve.argmax.policy.reject_all);
  EXPECT_NEAR(curve.argmax.total_value, 2.0, 1e-12);
  EXPECT_NEAR(curve.reject_all.total_value, -0.2, 1e-12);
}

TEST(Sweep, GridShape) {
  EXPECT_EQ(threshold_grid(0.001).size(), 501u);
  EXPECT_EQ(threshold_grid(0.25).size(), 3u);
  const auto odd = threshold_grid(0.15);  // 0.5, 0.65, 0.8, 0.95, then 1.0
  ASSERT_EQ(odd.size(), 5u);
  EXPECT_DOUBLE_EQ(odd.back(), 1.0);
  EXPECT_DOUBLE_EQ(threshold_grid(0.1)[2], 0.7);
  EXPECT_THROW(threshold_grid(0.0), Error);
  EXPECT_THROW(threshold_grid(0.3), Error);
  EXPECT_THROW(threshold_grid(-0.1), Error);
}

TEST(Sweep, ConfidentCorrectRecordsAcceptAll) {
  std::vector<PredictionRecord> recs;
  for (int i = 0; i < 20; ++i)
    recs.push_back(PredictionRecord::probability("m", std::to_string(i), i % 2 ? 1.0 : 0.0, i % 2 ? Label::Pos : Label::Neg));
  const auto curve = sweep(recs, kSurveyed, 0.01);
  EXPECT_DOUBLE_EQ(curve.argmax.tau(), 0.5);
  EXPECT_DOUBLE_EQ(curve.argmax.rejection_rate, 0.0);
}

TEST(Sweep, BoundaryIdentities) {
  const auto recs = synthetic::calibrated_records(2000, 4);
  const auto curve = sweep(recs, kSurveyed, 0.01);
  EXPECT_EQ(curve.points.front().counts.rejected_total(), 0u);
  EXPECT_EQ(curve.reject_all.counts.accepted_total(), 0u);
  EXPECT_DOUBLE_EQ(curve.reject_all.rejection_rate, 1.0);
}

TEST(Sweep, RejectionRateIsMonotone) {
  const auto recs = synthetic::calibrated_records(5000, 10, 0.1);
  const auto curve = sweep(recs, kSurveyed, 0.005);
  for (std::size_t i = 1; i < curve.points.size(); ++i)
    EXPECT_GE(curve.points[i].rejection_rate, curve.points[i - 1].rejection_rate);
  EXPECT_GE(curve.reject_all.rejection_rate, curve.points.back().rejection_rate);
}

TEST(Sweep, PointsMatchValueAt) {
  const auto recs = synthetic::calibrated_records(500, 12);
  const auto curve = sweep(recs, kSurveyed, 0.05);
  for (const auto& p : curve.points) {
    const auto direct = value_at(recs, kSurveyed, p.policy);
    EXPECT_EQ(direct.counts, p.counts);
    EXPECT_EQ(direct.total_value, p.total_value);
  }
}

TEST(Sweep, LinearInValueModel) {
  const auto recs = synthetic::calibrated_records(3000, 21, 0.15);
  const ValueModel base{0, 0, -16.69, -28.08, -4.82};
  const auto c1 = sweep(recs, base, 0.01);
  for (double c : {0.1, 10.0, 1000.0}) {
    const auto cc = sweep(recs, base.scaled(c), 0.01);
    for (std::size_t i = 0; i < c1.points.size(); ++i) {
      const double want = c * c1.points[i].total_value;
      EXPECT_NEAR(cc.points[i].total_value, want, 1e-9 * std::abs(want));
    }
    EXPECT_EQ(argmax_indices(c1), argmax_indices(cc));
    EXPECT_EQ(c1.argmax.tau(), cc.argmax.tau());
  }
}

TEST(Sweep, CalibrationConsistencyWithZeroRejectionCost) {
  const auto recs = synthetic::calibrated_records(200000, 77);
  for (double gamma : {1.0, 3.0, 9.0}) {
    const ValueModel vm{1.0, 1.0, -gamma, -gamma, 0.0};
    const auto curve = sweep(recs, vm, 0.001);
    EXPECT_NEAR(curve.argmax.tau(), theoretical_threshold(vm, Label::Pos), 0.02) << "gamma " << gamma;
  }
}

TEST(SweepPerClass, DominatesSingleThreshold) {
  const auto recs = synthetic::calibrated_records(3000, 31, 0.1);
  const ValueModel vm{1, 1, -1, -9, -0.2};
  const auto single = sweep(recs, vm, 0.02);
  const auto both = sweep_per_class(recs, vm, 0.02);
  EXPECT_EQ(both.points.size(), single.points.size() * single.points.size());
  EXPECT_GE(both.argmax.total_value, single.argmax.total_value);
  // Costlier false negatives push the negative-class threshold up.
  EXPECT_GT(both.argmax.policy.tau_neg, both.argmax.policy.tau_pos);
  const double want = oracle::total_value(recs, vm, both.argmax.policy.tau_pos, both.argmax.policy.tau_neg, false);
  EXPECT_NEAR(both.argmax.total_value, want, 1e-9 * std::abs(want));
}

TEST(TheoreticalThreshold, Examples) {
  EXPECT_DOUBLE_EQ(theoretical_threshold({1, 1, -1, -1, 0}, Label::Pos), 0.5);
  EXPECT_NEAR(cost_ratio(kSurveyed, Label::Pos), 16.69 / 18.15, 1e-15);
  EXPECT_NEAR(theoretical_threshold(kSurveyed, Label::Pos), 0.4790, 1e-4);
  EXPECT_NEAR(cost_ratio(kSurveyed, Label::Neg), 0.7731, 1e-4);
  EXPECT_NEAR(theoretical_threshold(kSurveyed, Label::Neg), 0.4360, 1e-4);
  // Matches the break-even form V_FP / (V_FP - V_TP).
  EXPECT_NEAR(theoretical_threshold(kSurveyed, Label::Pos), -16.69 / (-16.69 - 18.15), 1e-12);
}

TEST(TheoreticalThreshold, UndefinedGamma) {
  try {
    theoretical_threshold({0, 0, -16.69, -28.08, -4.82}, Label::Pos);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedGamma);
  }
}

TEST(TheoreticalThreshold, DependsOnlyOnRatio) {
  for (double c : {0.1, 7.0, 1000.0}) {
    const ValueModel scaled{18.15 * c, 36.32 * c, -16.69 * c, -28.08 * c, -4.82};
    EXPECT_EQ(theoretical_threshold(scaled, Label::Pos), theoretical_threshold(kSurveyed, Label::Pos)) << c;
    EXPECT_EQ(theoretical_threshold(scaled, Label::Neg), theoretical_threshold(kSurveyed, Label::Neg)) << c;
  }
}

TEST(CompareModels, IdenticalSetsTieByModelId) {
  auto a = synthetic::calibrated_records(300, 1, 0.0, "zeta");
  auto b = a;
  for (auto& r : b) r.model_id = "alpha";
  const auto cmp = compare_models({{"zeta", a}, {"alpha", b}}, kSurveyed, 0.01);
  EXPECT_EQ(cmp.models[0].optimum.total_value, cmp.models[1].optimum.total_value);
  EXPECT_EQ(cmp.by_value, (std::vector<std::string>{"alpha", "zeta"}));
  EXPECT_EQ(cmp.by_accuracy, (std::vector<std::string>{"alpha", "zeta"}));
  EXPECT_FALSE(cmp.rankings_diverge);
}

TEST(CompareModels, CorrectModelBeatsWrongModel) {
  std::vector<PredictionRecord> good, bad;
  for (int i = 0; i < 50; ++i) {
    const Label truth = i % 3 ? Label::Pos : Label::Neg;
    const double p_right = truth == Label::Pos ? 0.9 : 0.1;
    good.push_back(PredictionRecord::probability("A", std::to_string(i), p_right, truth));
    bad.push_back(PredictionRecord::probability("B", std::to_string(i), 1.0 - p_right, truth));
  }
  const auto cmp = compare_models({{"A", good}, {"B", bad}}, kSurveyed, 0.01);
  EXPECT_EQ(cmp.by_value.front(), "A");
  EXPECT_EQ(cmp.by_accuracy.front(), "A");
  EXPECT_DOUBLE_EQ(cmp.models[0].accuracy, 1.0);
  EXPECT_DOUBLE_EQ(cmp.models[1].accuracy, 0.0);
}

TEST(CompareModels, ItemSetMismatch) {
  auto a = synthetic::calibrated_records(10, 1, 0.0, "A");
  auto b = synthetic::calibrated_records(11, 1, 0.0, "B");
  try {
    compare_models({{"A", a}, {"B", b}}, kSurveyed, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ItemSetMismatch);
  }
  EXPECT_THROW(compare_models({{"A", a}}, kSurveyed, 0.01), Error);
}

TEST(CompareModels, ValueRankingCanDisagreeWithAccuracy) {
  // Search small random pairs until the more accurate model delivers less
  // value; the oracle decides both rankings independently.
  const ValueModel vm{0, 0, -16.69, -28.08, -4.82};
  const double step = 0.05;
  Rng rng(5);
  bool found = false;
  for (int attempt = 0; attempt < 20000 && !found; ++attempt) {
    std::vector<Label> truth;
    for (int i = 0; i < 6; ++i) truth.push_back(rng.bernoulli(0.5) ? Label::Pos : Label::Neg);
    auto make = [&](const std::string& id) {
      std::vector<PredictionRecord> recs;
      for (int i = 0; i < 6; ++i) {
        const double c = 0.5 + 0.05 * static_cast<double>(rng.below(10));
        const bool pos = rng.bernoulli(0.5);
        recs.push_back(PredictionRecord::probability(id, std::to_string(i), pos ? c : 1.0 - c, truth[static_cast<std::size_t>(i)]));
      }
      return recs;
    };
    const auto a = make("A"), b = make("B");
    auto best_value = [&](const std::vector<PredictionRecord>& recs) {
      double best = -INFINITY;
      for (double tau : threshold_grid(step)) best = std::max(best, oracle::total_value(recs, vm, tau, tau, false));
      return std::max(best, oracle::total_value(recs, vm, 1, 1, true));
    };
    auto accuracy = [](const std::vector<PredictionRecord>& recs) {
      int right = 0;
      for (const auto& r : recs) right += r.correct();
      return right;
    };
    const double va = best_value(a), vb = best_value(b);
    const int aa = accuracy(a), ab = accuracy(b);
    if (std::abs(va - vb) < 1e-6 || aa == ab || (va > vb) == (aa > ab)) continue;
    found = true;
    const auto cmp = compare_models({{"A", a}, {"B", b}}, vm, step);
    EXPECT_TRUE(cmp.rankings_diverge);
    EXPECT_EQ(cmp.by_value.front(), va > vb ? "A" : "B");
    EXPECT_EQ(cmp.by_accuracy.front(), aa > ab ? "A" : "B");
  }
  EXPECT_TRUE(found);
}

TEST(Report, CurveCsvAndSvg) {
  const auto curve = sweep(two_records(), kUnit, 0.1);
  const auto csv_text = report::curve_csv(curve);
  EXPECT_EQ(std::count(csv_text.begin(), csv_text.end(), '\n'), 8);
  EXPECT_EQ(csv_text.rfind("reject_all") != std::string::npos, true);
  const auto svg = report::curve_svg(curve, "A & B <test>");
  EXPECT_NE(svg.find("A &amp; B &lt;test&gt;"), std::string::npos);
  EXPECT_EQ(svg.find("<test>"), std::string::npos);
}
