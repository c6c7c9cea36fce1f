#include "drs/gating.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "drs/error.hpp"
#include "drs/rng.hpp"
#include "test_support.hpp"

using drs::calibrate;
using drs::decide;
using drs::GateDecision;
using drs::GatingPolicy;
using drs::ZoneThresholds;

namespace {

std::vector<double> iota_scores(int n) {
  std::vector<double> s;
  for (int i = 1; i <= n; ++i) s.push_back(static_cast<double>(i));
  return s;
}

std::size_t gated_count(const std::vector<double>& scores, double cutoff) {
  std::size_t n = 0;
  for (double s : scores) n += s >= cutoff ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("default policy gates 0/5/10/50 percent") {
  const GatingPolicy p = GatingPolicy::defaults();
  REQUIRE(p.zones.size() == 4);
  CHECK(p.zones[0].first == "green");
  CHECK(p.fraction("green") == 0.0);
  CHECK(p.fraction("weekend") == 0.05);
  CHECK(p.fraction("yellow") == 0.10);
  CHECK(p.fraction("red") == 0.50);
  CHECK_NOTHROW(p.validate());
  CHECK_THROWS_WITH_AS(p.fraction("purple"),
                       doctest::Contains("unknown zone 'purple'"),
                       drs::UsageError);
}

TEST_CASE("policy validation rejects malformed zone tables") {
  GatingPolicy p;
  SUBCASE("empty") { CHECK_THROWS_AS(p.validate(), drs::UsageError); }
  SUBCASE("first zone must gate nothing") {
    p.zones = {{"a", 0.1}, {"b", 0.2}};
    CHECK_THROWS_AS(p.validate(), drs::UsageError);
  }
  SUBCASE("fractions strictly increase") {
    p.zones = {{"a", 0.0}, {"b", 0.2}, {"c", 0.2}};
    CHECK_THROWS_AS(p.validate(), drs::UsageError);
  }
  SUBCASE("fractions stay within [0, 1]") {
    p.zones = {{"a", 0.0}, {"b", 1.5}};
    CHECK_THROWS_AS(p.validate(), drs::UsageError);
  }
  SUBCASE("duplicate zone names") {
    p.zones = {{"a", 0.0}, {"a", 0.2}};
    CHECK_THROWS_AS(p.validate(), drs::UsageError);
  }
}

TEST_CASE("distinct scores calibrate to exact budget boundaries") {
  // Scores 1..100, zone fraction 0.10: the ten highest are 91..100, so the
  // cutoff lands on 91 and gates exactly ten.
  const std::vector<double> scores = iota_scores(100);
  const ZoneThresholds t =
      calibrate(scores, GatingPolicy::defaults(), "w1", "m1");
  CHECK(t.window_id == "w1");
  CHECK(t.model_id == "m1");
  CHECK(t.zone("green").cutoff == std::numeric_limits<double>::infinity());
  CHECK(t.zone("weekend").cutoff == 96.0);
  CHECK(t.zone("yellow").cutoff == 91.0);
  CHECK(t.zone("red").cutoff == 51.0);
  CHECK(gated_count(scores, t.zone("yellow").cutoff) == 10);
  CHECK(gated_count(scores, t.zone("weekend").cutoff) == 5);
  CHECK(gated_count(scores, t.zone("red").cutoff) == 50);
  CHECK(gated_count(scores, t.zone("green").cutoff) == 0);
}

TEST_CASE("ties at the boundary spill within the ceil budget") {
  // n=10, g=0.10: floor budget 1. Top scores {9, 9}: gating at 9 takes two,
  // above ceil(1.0)=1... so the cutoff walks to a larger distinct value;
  // none exists, so the zone gates nothing.
  GatingPolicy p;
  p.zones = {{"open", 0.0}, {"tight", 0.10}};
  const std::vector<double> twin_top = {1, 2, 3, 4, 5, 6, 7, 8, 9, 9};
  const ZoneThresholds t1 = calibrate(twin_top, p, "w", "m");
  CHECK(t1.zone("tight").cutoff == std::numeric_limits<double>::infinity());

  // n=10, g=0.20: floor budget 2, ceil budget 2; both nines fit exactly.
  GatingPolicy p2;
  p2.zones = {{"open", 0.0}, {"fifth", 0.20}};
  const ZoneThresholds t2 = calibrate(twin_top, p2, "w", "m");
  CHECK(t2.zone("fifth").cutoff == 9.0);
  CHECK(gated_count(twin_top, 9.0) == 2);

  // Ties spilling from floor to ceil: n=10, g=0.15 -> floor 1, ceil 2.
  GatingPolicy p3;
  p3.zones = {{"open", 0.0}, {"mid", 0.15}};
  const ZoneThresholds t3 = calibrate(twin_top, p3, "w", "m");
  CHECK(t3.zone("mid").cutoff == 9.0);  // two gated, allowed by ceil
}

TEST_CASE("all-identical scores gate nothing") {
  const std::vector<double> flat(20, 0.5);
  const ZoneThresholds t =
      calibrate(flat, GatingPolicy::defaults(), "w", "m");
  for (const auto& zc : t.cutoffs) {
    if (zc.g == 0.0) continue;
    if (zc.g < 1.0)
      CHECK(zc.cutoff == std::numeric_limits<double>::infinity());
    else
      CHECK(zc.cutoff == 0.5);  // g=1 admits the whole window
  }
}

TEST_CASE("tie walking lands on the next distinct value") {
  // Scores: one 10, five 7s, rest 1s. n=10.
  // g=0.30 -> floor 3, ceil 3: gating at 7 takes 6 (too many), walk up to
  // 10 which takes 1 (within budget).
  GatingPolicy p;
  p.zones = {{"open", 0.0}, {"third", 0.30}};
  const std::vector<double> scores = {10, 7, 7, 7, 7, 7, 1, 1, 1, 1};
  const ZoneThresholds t = calibrate(scores, p, "w", "m");
  CHECK(t.zone("third").cutoff == 10.0);
  CHECK(gated_count(scores, 10.0) == 1);
}

TEST_CASE("window gating fraction never exceeds g") {
  drs::Rng rng(51);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> scores(n);
    for (double& s : scores)
      s = rng.below(4) == 0 ? 0.5 : rng.uniform();  // frequent ties
    GatingPolicy p;
    p.zones = {{"z0", 0.0},
               {"z1", 0.05 + 0.2 * rng.uniform()},
               {"z2", 0.5 + 0.4 * rng.uniform()}};
    const ZoneThresholds t = calibrate(scores, p, "w", "m");
    for (const auto& zc : t.cutoffs) {
      const std::size_t gated = gated_count(scores, zc.cutoff);
      const double budget = std::ceil(zc.g * static_cast<double>(n) - 1e-9);
      CHECK(static_cast<double>(gated) <= budget);
    }
  }
}

TEST_CASE("gated sets nest as the fraction grows") {
  drs::Rng rng(52);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5 + rng.below(60);
    std::vector<double> scores(n);
    for (double& s : scores) s = std::round(rng.uniform() * 20.0) / 20.0;
    GatingPolicy p;
    p.zones = {{"a", 0.0}, {"b", 0.1}, {"c", 0.3}, {"d", 0.8}};
    const ZoneThresholds t = calibrate(scores, p, "w", "m");
    // Cutoffs are non-increasing in g, so gated sets nest.
    for (std::size_t z = 1; z < t.cutoffs.size(); ++z)
      CHECK(t.cutoffs[z].cutoff <= t.cutoffs[z - 1].cutoff);
  }
}

TEST_CASE("decisions apply the pure threshold rule") {
  const std::vector<double> scores = iota_scores(100);
  const ZoneThresholds t =
      calibrate(scores, GatingPolicy::defaults(), "w", "m");

  const GateDecision hot = decide("d-hot", 95.0, "yellow", t,
                                  {{"churn_ratio_log", 1.4}});
  CHECK(hot.gated);
  CHECK(hot.zone == "yellow");
  CHECK(hot.cutoff == 91.0);
  CHECK(hot.score == 95.0);
  REQUIRE(hot.reasons.size() == 1);
  CHECK(hot.reasons[0].first == "churn_ratio_log");

  const GateDecision cold = decide("d-cold", 42.0, "yellow", t,
                                   {{"churn_ratio_log", 1.4}});
  CHECK_FALSE(cold.gated);
  // Reasons attach to gated decisions only.
  CHECK(cold.reasons.empty());

  const GateDecision edge = decide("d-edge", 91.0, "yellow", t);
  CHECK(edge.gated);  // score >= cutoff

  const GateDecision open = decide("d-any", 1e9, "green", t);
  CHECK_FALSE(open.gated);

  CHECK_THROWS_AS(decide("d-nan", std::nan(""), "yellow", t),
                  drs::UsageError);
  CHECK_THROWS_WITH_AS(decide("d", 1.0, "purple", t),
                       doctest::Contains("unknown zone"), drs::UsageError);
}

TEST_CASE("reports carry the full decision story") {
  const std::vector<double> scores = iota_scores(100);
  const ZoneThresholds t =
      calibrate(scores, GatingPolicy::defaults(), "w", "m");

  SUBCASE("gated with reasons") {
    const GateDecision d = decide("d-1", 95.0, "yellow", t,
                                  {{"churn_ratio_log", 1.402},
                                   {"prior_sev_file", 0.88}});
    const std::string r = drs::render_report(d);
    CHECK(r.find("SCORE\n") != std::string::npos);
    CHECK(r.find("95.0000 (diff d-1)") != std::string::npos);
    CHECK(r.find("ZONE\n") != std::string::npos);
    CHECK(r.find("yellow") != std::string::npos);
    CHECK(r.find("top 10.0% of diffs gated") != std::string::npos);
    CHECK(r.find("cutoff 91.0000") != std::string::npos);
    CHECK(r.find("DECISION\n  gate\n") != std::string::npos);
    CHECK(r.find("REASONS\n") != std::string::npos);
    CHECK(r.find("churn_ratio_log") != std::string::npos);
    CHECK(r.find("+1.402") != std::string::npos);
    CHECK(r.find("+0.880") != std::string::npos);
    CHECK(r.find("ACTIONS\n") != std::string::npos);
    CHECK(r.find("escalate to the release oncall") != std::string::npos);
    CHECK(r.find("wait for the gating window") != std::string::npos);
  }

  SUBCASE("allowed") {
    const GateDecision d = decide("d-2", 12.0, "yellow", t);
    const std::string r = drs::render_report(d);
    CHECK(r.find("DECISION\n  allow\n") != std::string::npos);
    CHECK(r.find("none (below threshold)") != std::string::npos);
    CHECK(r.find("none required; proceed to land") != std::string::npos);
  }

  SUBCASE("gated without stored reasons") {
    const GateDecision d = decide("d-3", 99.0, "yellow", t, {},
                                  "content model score (mlp)");
    const std::string r = drs::render_report(d);
    CHECK(r.find("DECISION\n  gate\n") != std::string::npos);
    CHECK(r.find("content model score (mlp)") != std::string::npos);
  }

  SUBCASE("zone that gates nothing renders no finite cutoff") {
    const GateDecision d = decide("d-4", 50.0, "green", t);
    const std::string r = drs::render_report(d);
    CHECK(r.find("cutoff none") != std::string::npos);
  }
}

TEST_CASE("escalations append, validate, and replay") {
  const std::string path =
      testgen::scratch_dir() + "/drs_test_escalations.jsonl";
  std::remove(path.c_str());
  const std::vector<std::string> codes = {"hotfix", "sev_mitigation"};

  drs::EscalationRecord rec;
  rec.diff_id = "d-77";
  rec.reason_code = "hotfix";
  rec.justification = "prod is down";
  rec.approver = "oncall-a";
  rec.outcome = "approved";
  drs::record_escalation(rec, path, codes);

  rec.diff_id = "d-78";
  rec.reason_code = "sev_mitigation";
  rec.outcome = "rejected";
  drs::record_escalation(rec, path, codes);

  const std::vector<drs::EscalationRecord> back =
      drs::replay_escalations(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].diff_id == "d-77");
  CHECK(back[0].reason_code == "hotfix");
  CHECK(back[0].justification == "prod is down");
  CHECK(back[0].approver == "oncall-a");
  CHECK(back[0].outcome == "approved");
  CHECK(back[1].diff_id == "d-78");
  CHECK(back[1].outcome == "rejected");

  SUBCASE("unknown reason codes are rejected, listing valid ones") {
    rec.reason_code = "because";
    try {
      drs::record_escalation(rec, path, codes);
      FAIL("expected an error");
    } catch (const drs::UsageError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("unknown escalation reason code 'because'") !=
            std::string::npos);
      CHECK(msg.find("hotfix") != std::string::npos);
      CHECK(msg.find("sev_mitigation") != std::string::npos);
    }
  }

  SUBCASE("outcome must be approved or rejected") {
    rec.reason_code = "hotfix";
    rec.outcome = "maybe";
    CHECK_THROWS_AS(drs::record_escalation(rec, path, codes),
                    drs::UsageError);
  }

  SUBCASE("empty diff id is rejected") {
    rec.diff_id = "";
    rec.reason_code = "hotfix";
    rec.outcome = "approved";
    CHECK_THROWS_AS(drs::record_escalation(rec, path, codes),
                    drs::UsageError);
  }

  SUBCASE("replay reports the offending line") {
    {
      std::FILE* f = std::fopen(path.c_str(), "a");
      REQUIRE(f != nullptr);
      std::fputs("not json\n", f);
      std::fclose(f);
    }
    try {
      drs::replay_escalations(path);
      FAIL("expected an error");
    } catch (const drs::UsageError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  std::remove(path.c_str());
}

TEST_CASE("calibration input must be finite and non-empty") {
  CHECK_THROWS_AS(calibrate({}, GatingPolicy::defaults(), "w", "m"),
                  drs::UsageError);
  CHECK_THROWS_AS(
      calibrate({1.0, std::nan("")}, GatingPolicy::defaults(), "w", "m"),
      drs::UsageError);
}
