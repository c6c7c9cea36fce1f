#include "drs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "drs/error.hpp"
#include "drs/rng.hpp"

namespace drs {

ChronoSplit chronological_split(const Corpus& c, const SplitSpec& spec) {
  if (!(spec.train_end < spec.val_end && spec.val_end < spec.test_end))
    throw UsageError(
        "split boundaries must satisfy train_end < val_end < test_end");
  ChronoSplit s;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    const std::int64_t t = c.records[i].closed_at;
    if (t < spec.train_end) {
      s.train.push_back(i);
    } else if (t < spec.val_end) {
      s.val.push_back(i);
    } else if (t < spec.test_end) {
      s.test.push_back(i);
    } else {
      ++s.dropped;
    }
  }
  return s;
}

std::vector<std::size_t> resample_indices(const std::vector<char>& labels,
                                          const ResampleConfig& cfg) {
  if (cfg.neg_per_pos == 0)
    throw UsageError("resample: neg_per_pos must be positive");
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] ? positives : negatives).push_back(i);
  if (positives.empty())
    throw UsageError("resample: no positive examples to anchor the ratio");

  const std::size_t want = positives.size() * cfg.neg_per_pos;
  std::vector<std::size_t> kept_negatives;
  if (negatives.size() <= want) {
    kept_negatives = negatives;
  } else {
    Rng rng(splitmix64(cfg.seed ^ 0x5245534d504cULL));
    std::vector<std::size_t> picks =
        rng.sample_indices(negatives.size(), want);
    kept_negatives.reserve(want);
    for (std::size_t p : picks) kept_negatives.push_back(negatives[p]);
  }
  std::vector<std::size_t> out;
  out.reserve(positives.size() + kept_negatives.size());
  out.insert(out.end(), positives.begin(), positives.end());
  out.insert(out.end(), kept_negatives.begin(), kept_negatives.end());
  std::sort(out.begin(), out.end());  // restore original (time) order
  return out;
}

namespace {

// Indices of the top ceil(g*n) by (score desc, id asc).
std::vector<std::size_t> gated_set(const std::vector<ScoredDiff>& scored,
                                   double g) {
  const std::size_t n = scored.size();
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(g * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scored[a].score != scored[b].score)
      return scored[a].score > scored[b].score;
    return scored[a].id < scored[b].id;
  });
  order.resize(std::min(k, n));
  return order;
}

}  // namespace

double capture_rate(const std::vector<ScoredDiff>& scored, double g) {
  if (!(g > 0.0 && g <= 1.0))
    throw UsageError("capture_rate: g must be in (0, 1]");
  if (scored.empty()) throw UsageError("capture_rate: empty scored set");
  std::size_t total = 0;
  for (const ScoredDiff& s : scored) {
    if (!std::isfinite(s.score))
      throw UsageError("capture_rate: non-finite score for '" + s.id + "'");
    if (s.caused_sev) ++total;
  }
  if (total == 0)
    throw UsageError("capture_rate: no incidents in the scored set");
  std::size_t captured = 0;
  for (std::size_t i : gated_set(scored, g))
    if (scored[i].caused_sev) ++captured;
  return 100.0 * static_cast<double>(captured) / static_cast<double>(total);
}

double capture_ratio(double model_pct, double baseline_pct) {
  if (baseline_pct <= 0.0)
    throw UsageError("capture_ratio: baseline captured nothing");
  return model_pct / baseline_pct;
}

double random_gate_baseline(const std::vector<char>& labels, double g,
                            int trials, std::uint64_t seed) {
  if (!(g > 0.0 && g <= 1.0))
    throw UsageError("random_gate_baseline: g must be in (0, 1]");
  if (trials <= 0)
    throw UsageError("random_gate_baseline: trials must be positive");
  const std::size_t n = labels.size();
  std::size_t total = 0;
  for (char v : labels)
    if (v) ++total;
  if (n == 0 || total == 0)
    throw UsageError("random_gate_baseline: no incidents to capture");
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(g * static_cast<double>(n) - 1e-9));
  Rng rng(splitmix64(seed ^ 0x52414e44474154ULL));
  double mean = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::size_t captured = 0;
    for (std::size_t i : rng.sample_indices(n, k))
      if (labels[i]) ++captured;
    mean += 100.0 * static_cast<double>(captured) /
            static_cast<double>(total);
  }
  return mean / static_cast<double>(trials);
}

namespace {

std::vector<std::string> sorted_ids(const std::vector<ScoredDiff>& scored) {
  std::vector<std::string> ids;
  ids.reserve(scored.size());
  for (const ScoredDiff& s : scored) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

EvalReport evaluate_models(
    const std::vector<std::pair<std::string, std::vector<ScoredDiff>>>&
        scored_by_model,
    const std::string& baseline_id, const GatingPolicy& policy) {
  policy.validate();
  if (scored_by_model.empty())
    throw UsageError("evaluate_models: no models to evaluate");
  const std::vector<ScoredDiff>* baseline = nullptr;
  for (const auto& [id, scored] : scored_by_model)
    if (id == baseline_id) baseline = &scored;
  if (!baseline)
    throw UsageError("evaluate_models: baseline '" + baseline_id +
                     "' is not among the evaluated models");

  const std::vector<std::string> ref_ids = sorted_ids(*baseline);
  for (const auto& [id, scored] : scored_by_model) {
    if (sorted_ids(scored) != ref_ids)
      throw UsageError("evaluate_models: model '" + id +
                       "' scored a different test set than the baseline");
  }

  EvalReport r;
  r.baseline = baseline_id;
  r.n = baseline->size();
  for (const ScoredDiff& s : *baseline)
    if (s.caused_sev) ++r.sevs;
  for (const auto& [name, g] : policy.zones) {
    if (g > 0.0) {
      r.zones.push_back(name);
      r.zone_g.push_back(g);
    }
  }
  for (const auto& [id, scored] : scored_by_model) {
    r.models.push_back(id);
    std::vector<EvalCell> row;
    for (double g : r.zone_g) {
      EvalCell cell;
      cell.capture_pct = capture_rate(scored, g);
      cell.gated = static_cast<std::size_t>(
          std::ceil(g * static_cast<double>(scored.size()) - 1e-9));
      cell.sevs_captured = static_cast<std::size_t>(std::llround(
          cell.capture_pct * static_cast<double>(r.sevs) / 100.0));
      row.push_back(cell);
    }
    r.cells.push_back(std::move(row));
  }
  // Ratios against the baseline row.
  std::size_t base_row = 0;
  for (std::size_t i = 0; i < r.models.size(); ++i)
    if (r.models[i] == baseline_id) base_row = i;
  for (std::size_t i = 0; i < r.models.size(); ++i) {
    for (std::size_t z = 0; z < r.zones.size(); ++z) {
      r.cells[i][z].ratio = capture_ratio(r.cells[i][z].capture_pct,
                                          r.cells[base_row][z].capture_pct);
    }
  }
  return r;
}

CorpusScope scope_of(const Corpus& c) {
  CorpusScope s;
  for (const DiffRecord& r : c.records) {
    s.orgs.insert(r.org);
    for (const FileChange& fc : r.changes) {
      const std::size_t slash = fc.path.find('/');
      s.prefixes.insert(slash == std::string::npos ? fc.path
                                                   : fc.path.substr(0, slash));
    }
  }
  return s;
}

EvalReport generalization_eval(
    const std::vector<std::pair<std::string, std::vector<ScoredDiff>>>&
        scored_by_model,
    const std::string& baseline_id, const GatingPolicy& policy,
    const CorpusScope& train_scope, const Corpus& foreign) {
  const CorpusScope foreign_scope = scope_of(foreign);
  for (const std::string& org : foreign_scope.orgs) {
    if (train_scope.orgs.contains(org))
      throw UsageError("generalization_eval: org '" + org +
                       "' overlaps the training corpus");
  }
  for (const std::string& p : foreign_scope.prefixes) {
    if (train_scope.prefixes.contains(p))
      throw UsageError("generalization_eval: path prefix '" + p +
                       "' overlaps the training corpus");
  }
  return evaluate_models(scored_by_model, baseline_id, policy);
}

std::string eval_table(const EvalReport& r) {
  std::ostringstream os;
  std::size_t name_w = 5;
  for (const std::string& m : r.models) name_w = std::max(name_w, m.size());
  os << std::left << std::setw(static_cast<int>(name_w) + 2) << "model";
  for (std::size_t z = 0; z < r.zones.size(); ++z) {
    std::ostringstream hdr;
    hdr << r.zones[z] << " (" << std::fixed << std::setprecision(0)
        << 100.0 * r.zone_g[z] << "%)";
    os << std::left << std::setw(20) << hdr.str();
  }
  os << "\n";
  os << std::left << std::setw(static_cast<int>(name_w) + 2) << "";
  for (std::size_t z = 0; z < r.zones.size(); ++z)
    os << std::left << std::setw(20) << "capture   vs-base";
  os << "\n";
  for (std::size_t i = 0; i < r.models.size(); ++i) {
    os << std::left << std::setw(static_cast<int>(name_w) + 2) << r.models[i];
    for (std::size_t z = 0; z < r.zones.size(); ++z) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(1) << std::setw(5)
           << r.cells[i][z].capture_pct << "%   " << std::setprecision(2)
           << r.cells[i][z].ratio << "x";
      os << std::left << std::setw(20) << cell.str();
    }
    os << "\n";
  }
  os << "test set: " << r.n << " diffs, " << r.sevs
     << " incidents; baseline: " << r.baseline << "\n";
  return os.str();
}

std::string eval_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "model,zone,g,capture_pct,ratio_vs_baseline,gated,sevs_captured,"
        "sevs_total,n\n";
  os << std::fixed;
  for (std::size_t i = 0; i < r.models.size(); ++i) {
    for (std::size_t z = 0; z < r.zones.size(); ++z) {
      const EvalCell& c = r.cells[i][z];
      os << r.models[i] << "," << r.zones[z] << "," << std::setprecision(2)
         << r.zone_g[z] << "," << std::setprecision(4) << c.capture_pct << ","
         << std::setprecision(2) << c.ratio << "," << c.gated << ","
         << c.sevs_captured << "," << r.sevs << "," << r.n << "\n";
    }
  }
  return os.str();
}

std::string capture_curve_csv(
    const std::vector<std::pair<std::string, std::vector<ScoredDiff>>>&
        scored_by_model) {
  std::ostringstream os;
  os << "g";
  for (const auto& [id, scored] : scored_by_model) os << "," << id;
  os << "\n" << std::fixed;
  for (int pct = 1; pct <= 100; ++pct) {
    os << std::setprecision(2) << static_cast<double>(pct) / 100.0;
    for (const auto& [id, scored] : scored_by_model) {
      os << "," << std::setprecision(4)
         << capture_rate(scored, static_cast<double>(pct) / 100.0);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace drs
