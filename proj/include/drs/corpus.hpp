#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "drs/change.hpp"

namespace drs {

// One code change under review: metadata plus parsed file changes.
struct DiffRecord {
  std::string id;
  std::string title;
  std::string test_plan;
  std::string author_id;
  std::int64_t closed_at = 0;  // UTC seconds when the diff landed
  std::string org;             // path-prefix scope, e.g. "orgA"
  bool caused_sev = false;     // ground-truth label: led to a severe incident
  bool metadata_only = false;  // no file content changed (e.g. task edits)
  std::vector<FileChange> changes;

  bool operator==(const DiffRecord&) const = default;
};

enum class Provenance { jsonl, git, synthetic };

struct Corpus {
  std::vector<DiffRecord> records;  // sorted ascending by closed_at
  Provenance provenance = Provenance::jsonl;
  // Present only for synthetic corpora: diff id -> the generator's true
  // incident probability, for oracle scoring in tests.
  std::map<std::string, double> generator_truth;
};

// Content equality: records and generator truth. Provenance is ingestion
// metadata, not content, so it does not participate.
bool same_content(const Corpus& a, const Corpus& b);

// Checks ordering, id uniqueness, non-empty changes (unless metadata_only),
// per-file invariants, and truth-only-when-synthetic. Throws on violation.
void validate_corpus(const Corpus& c);

// One JSON object per line. An optional leading {"__corpus__": ...} header
// carries provenance; synthetic records carry a "true_risk" field.
// Errors name the offending line or duplicate id.
Corpus load_jsonl(const std::string& path);
void save_jsonl(const Corpus& c, const std::string& path);

// Same schema, in-memory (used by tests and the CLI for stdout output).
Corpus parse_jsonl(const std::string& text, const std::string& origin);
std::string dump_jsonl(const Corpus& c);

// Fraction of records with caused_sev == true. Empty corpus is an error.
double sev_rate(const Corpus& c);

}  // namespace drs
