#include "drs/gating.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "drs/error.hpp"

namespace drs {

using nlohmann::json;

GatingPolicy GatingPolicy::defaults() {
  return GatingPolicy{{{"green", 0.0},
                       {"weekend", 0.05},
                       {"yellow", 0.10},
                       {"red", 0.50}}};
}

void GatingPolicy::validate() const {
  if (zones.empty()) throw UsageError("gating policy has no zones");
  if (zones.front().second != 0.0)
    throw UsageError("first gating zone must gate a 0.0 fraction");
  double prev = -1.0;
  for (const auto& [name, g] : zones) {
    if (name.empty()) throw UsageError("gating zone with empty name");
    if (g < 0.0 || g > 1.0)
      throw UsageError("gating fraction for zone '" + name +
                       "' outside [0, 1]");
    if (g <= prev)
      throw UsageError("gating fractions must strictly increase ('" + name +
                       "' does not)");
    prev = g;
  }
  for (std::size_t i = 0; i < zones.size(); ++i)
    for (std::size_t k = i + 1; k < zones.size(); ++k)
      if (zones[i].first == zones[k].first)
        throw UsageError("duplicate gating zone '" + zones[i].first + "'");
}

double GatingPolicy::fraction(const std::string& zone) const {
  for (const auto& [name, g] : zones)
    if (name == zone) return g;
  std::ostringstream os;
  os << "unknown zone '" << zone << "' (policy zones:";
  for (const auto& [name, g] : zones) os << " " << name;
  os << ")";
  throw UsageError(os.str());
}

const ZoneCutoff& ZoneThresholds::zone(const std::string& name) const {
  for (const ZoneCutoff& zc : cutoffs)
    if (zc.zone == name) return zc;
  std::ostringstream os;
  os << "unknown zone '" << name << "' (calibrated zones:";
  for (const ZoneCutoff& zc : cutoffs) os << " " << zc.zone;
  os << ")";
  throw UsageError(os.str());
}

ZoneThresholds calibrate(const std::vector<double>& scores,
                         const GatingPolicy& policy,
                         const std::string& window_id,
                         const std::string& model_id) {
  policy.validate();
  if (scores.empty())
    throw UsageError("calibrate: empty calibration window");
  for (double s : scores)
    if (!std::isfinite(s))
      throw UsageError("calibrate: non-finite score in calibration window");

  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const double n = static_cast<double>(sorted.size());
  const double inf = std::numeric_limits<double>::infinity();

  ZoneThresholds t;
  t.window_id = window_id;
  t.model_id = model_id;
  for (const auto& [name, g] : policy.zones) {
    ZoneCutoff zc{name, g, inf};
    const std::size_t k_floor =
        static_cast<std::size_t>(std::floor(g * n + 1e-9));
    const std::size_t k_ceil =
        static_cast<std::size_t>(std::ceil(g * n - 1e-9));
    if (k_floor >= 1) {
      // Count of scores >= sorted[i] is the index one past the tie block.
      auto count_at_least = [&](double v) {
        return static_cast<std::size_t>(
            std::upper_bound(sorted.begin(), sorted.end(), v,
                             std::greater<double>()) -
            sorted.begin());
      };
      double candidate = sorted[k_floor - 1];
      if (count_at_least(candidate) <= k_ceil) {
        zc.cutoff = candidate;
      } else {
        // Boundary ties overflow the budget: step to larger distinct
        // values until the gated count fits, or give up (+inf).
        std::size_t i = k_floor - 1;
        while (true) {
          // First element of the tie block containing index i.
          std::size_t first = i;
          while (first > 0 && sorted[first - 1] == sorted[i]) --first;
          if (first == 0) break;
          i = first - 1;
          if (count_at_least(sorted[i]) <= k_ceil) {
            zc.cutoff = sorted[i];
            break;
          }
        }
      }
    }
    t.cutoffs.push_back(zc);
  }
  // Larger zones can only lower the bar.
  for (std::size_t i = 1; i < t.cutoffs.size(); ++i) {
    if (t.cutoffs[i].cutoff > t.cutoffs[i - 1].cutoff)
      throw std::runtime_error("calibrate: cutoffs increased with g");
  }
  return t;
}

GateDecision decide(const std::string& diff_id, double score,
                    const std::string& zone, const ZoneThresholds& t,
                    const std::vector<std::pair<std::string, double>>& reasons,
                    const std::string& note) {
  if (!std::isfinite(score))
    throw UsageError("decide: non-finite score for diff '" + diff_id + "'");
  const ZoneCutoff& zc = t.zone(zone);
  GateDecision d;
  d.diff_id = diff_id;
  d.zone = zone;
  d.g = zc.g;
  d.score = score;
  d.cutoff = zc.cutoff;
  d.gated = score >= zc.cutoff;
  if (d.gated) {
    d.reasons = reasons;
    d.note = note;
  }
  return d;
}

std::string render_report(const GateDecision& d) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "SCORE\n";
  os << "  " << d.score << " (diff " << d.diff_id << ")\n";
  os << "ZONE\n";
  os << "  " << d.zone << " (top " << std::setprecision(1) << 100.0 * d.g
     << "% of diffs gated; cutoff ";
  if (std::isinf(d.cutoff)) {
    os << "none";
  } else {
    os << std::setprecision(4) << d.cutoff;
  }
  os << ")\n";
  os << "DECISION\n";
  os << "  " << (d.gated ? "gate" : "allow") << "\n";
  os << "REASONS\n";
  if (!d.gated) {
    os << "  none (below threshold)\n";
  } else {
    if (d.reasons.empty() && d.note.empty()) {
      os << "  score at or above the zone cutoff\n";
    }
    os << std::setprecision(3);
    for (const auto& [name, value] : d.reasons) {
      os << "  " << name << "  " << std::showpos << value << std::noshowpos
         << "\n";
    }
    if (!d.note.empty()) os << "  " << d.note << "\n";
  }
  os << "ACTIONS\n";
  if (d.gated) {
    os << "  - wait for the gating window to lift\n";
    os << "  - reduce risk: split the diff, extend tests, then rescore\n";
    os << "  - escalate to the release oncall with a justification\n";
  } else {
    os << "  - none required; proceed to land\n";
  }
  return os.str();
}

void record_escalation(const EscalationRecord& rec, const std::string& path,
                       const std::vector<std::string>& valid_codes) {
  if (std::find(valid_codes.begin(), valid_codes.end(), rec.reason_code) ==
      valid_codes.end()) {
    std::ostringstream os;
    os << "unknown escalation reason code '" << rec.reason_code
       << "' (valid codes:";
    for (const std::string& c : valid_codes) os << " " << c;
    os << ")";
    throw UsageError(os.str());
  }
  if (rec.outcome != "approved" && rec.outcome != "rejected")
    throw UsageError("escalation outcome must be 'approved' or 'rejected'");
  if (rec.diff_id.empty()) throw UsageError("escalation without a diff id");
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw UsageError("cannot open escalation log '" + path + "'");
  out << json{{"diff_id", rec.diff_id},
              {"reason_code", rec.reason_code},
              {"justification", rec.justification},
              {"approver", rec.approver},
              {"outcome", rec.outcome}}
             .dump()
      << "\n";
  if (!out) throw UsageError("write failed for escalation log '" + path + "'");
}

std::vector<EscalationRecord> replay_escalations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open escalation log '" + path + "'");
  std::vector<EscalationRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      std::ostringstream os;
      os << path << ", line " << lineno << ": malformed JSON (" << e.what()
         << ")";
      throw UsageError(os.str());
    }
    EscalationRecord r;
    r.diff_id = j.at("diff_id").get<std::string>();
    r.reason_code = j.at("reason_code").get<std::string>();
    r.justification = j.at("justification").get<std::string>();
    r.approver = j.at("approver").get<std::string>();
    r.outcome = j.at("outcome").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace drs
