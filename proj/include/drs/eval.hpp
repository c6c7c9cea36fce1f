#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "drs/corpus.hpp"
#include "drs/gating.hpp"

namespace drs {

// Half-open chronological boundaries: train = [begin, train_end),
// validation = [train_end, val_end), test = [val_end, test_end).
// A record exactly at train_end falls into validation.
struct SplitSpec {
  std::int64_t train_end = 0;
  std::int64_t val_end = 0;
  std::int64_t test_end = 0;
};

struct ChronoSplit {
  std::vector<std::size_t> train, val, test;  // indices into corpus order
  std::size_t dropped = 0;  // records at/after test_end (kept out of all three)
};

ChronoSplit chronological_split(const Corpus& c, const SplitSpec& spec);

struct ResampleConfig {
  std::size_t neg_per_pos = 5;
  std::uint64_t seed = 11;
};

// Keeps every positive and a uniform without-replacement subsample of
// negatives, at most neg_per_pos per positive; output preserves the input
// order. Errors when there are no positives.
std::vector<std::size_t> resample_indices(const std::vector<char>& labels,
                                          const ResampleConfig& cfg);

struct ScoredDiff {
  std::string id;
  double score = 0.0;
  bool caused_sev = false;
};

// Percent of incident-causing diffs inside the top ceil(g*n) by score,
// ties broken by id so the gated set is reproducible. Requires 0 < g <= 1
// and at least one incident.
double capture_rate(const std::vector<ScoredDiff>& scored, double g);

// model / baseline, both in percent; reported to two decimals downstream.
double capture_ratio(double model_pct, double baseline_pct);

// Mean capture over `trials` uniformly random gate sets of size ceil(g*n).
double random_gate_baseline(const std::vector<char>& labels, double g,
                            int trials, std::uint64_t seed);

struct EvalCell {
  double capture_pct = 0.0;
  double ratio = 1.0;  // vs the designated baseline model
  std::size_t gated = 0;
  std::size_t sevs_captured = 0;
};

struct EvalReport {
  std::vector<std::string> zones;  // zones with a positive gating fraction
  std::vector<double> zone_g;
  std::vector<std::string> models;
  std::string baseline;
  std::size_t n = 0;     // scored diffs per model
  std::size_t sevs = 0;  // incidents in the shared test set
  std::vector<std::vector<EvalCell>> cells;  // [model][zone]
};

// Capture table for several models over the policy's gated zones. All
// models must score the same diff ids; the baseline must be one of them.
EvalReport evaluate_models(
    const std::vector<std::pair<std::string, std::vector<ScoredDiff>>>&
        scored_by_model,
    const std::string& baseline_id, const GatingPolicy& policy);

// Org names and top-level path prefixes of a corpus, used to prove that a
// transfer evaluation really runs on foreign code.
struct CorpusScope {
  std::set<std::string> orgs;
  std::set<std::string> prefixes;
};

CorpusScope scope_of(const Corpus& c);

// evaluate_models plus disjointness guarantees: the foreign corpus must
// share no org and no top-level path prefix with the training scope.
EvalReport generalization_eval(
    const std::vector<std::pair<std::string, std::vector<ScoredDiff>>>&
        scored_by_model,
    const std::string& baseline_id, const GatingPolicy& policy,
    const CorpusScope& train_scope, const Corpus& foreign);

std::string eval_table(const EvalReport& r);
std::string eval_csv(const EvalReport& r);

// One row per whole-percent g from 1% to 100%: "g,<model>,..." capture.
std::string capture_curve_csv(
    const std::vector<std::pair<std::string, std::vector<ScoredDiff>>>&
        scored_by_model);

}  // namespace drs
