#pragma once

#include <string>
#include <utility>
#include <vector>

namespace drs {

// Ordered release zones and the fraction of diffs each gates. The first
// zone must gate nothing (normal operation); fractions strictly increase.
struct GatingPolicy {
  std::vector<std::pair<std::string, double>> zones;

  static GatingPolicy defaults();  // green 0, weekend .05, yellow .10, red .50
  void validate() const;
  double fraction(const std::string& zone) const;  // error on unknown zone
};

struct ZoneCutoff {
  std::string zone;
  double g = 0.0;
  double cutoff = 0.0;  // +infinity gates nothing
};

struct ZoneThresholds {
  std::vector<ZoneCutoff> cutoffs;  // policy order
  std::string window_id;            // which score window calibrated this
  std::string model_id;
  const ZoneCutoff& zone(const std::string& name) const;
};

// Per-zone score cutoffs from a calibration window. The cutoff is the
// smallest window score s with |{scores >= s}| within the zone's budget:
// floor(g*n) normally, up to ceil(g*n) when ties at the boundary spill
// over; if even the largest score is tied past that budget the zone gates
// nothing (+infinity). Gating fraction on the window never exceeds g.
ZoneThresholds calibrate(const std::vector<double>& scores,
                         const GatingPolicy& policy,
                         const std::string& window_id,
                         const std::string& model_id);

struct GateDecision {
  std::string diff_id;
  std::string zone;
  double g = 0.0;
  double score = 0.0;
  double cutoff = 0.0;
  bool gated = false;
  // Feature contributions for regression models; free-form note otherwise.
  std::vector<std::pair<std::string, double>> reasons;
  std::string note;
};

// Pure threshold rule: gate iff score >= cutoff for the zone. Reasons are
// attached to gated decisions only.
GateDecision decide(const std::string& diff_id, double score,
                    const std::string& zone, const ZoneThresholds& t,
                    const std::vector<std::pair<std::string, double>>& reasons =
                        {},
                    const std::string& note = "");

// Plain-text ship-it card: SCORE / ZONE / DECISION / REASONS / ACTIONS.
std::string render_report(const GateDecision& d);

struct EscalationRecord {
  std::string diff_id;
  std::string reason_code;
  std::string justification;
  std::string approver;
  std::string outcome;  // "approved" or "rejected"
};

// Appends one JSONL entry; unknown reason codes fail, listing valid codes.
void record_escalation(const EscalationRecord& rec, const std::string& path,
                       const std::vector<std::string>& valid_codes);
std::vector<EscalationRecord> replay_escalations(const std::string& path);

}  // namespace drs
