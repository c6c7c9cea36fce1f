#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "drs/corpus.hpp"

namespace drs {

struct FeaturesConfig {
  // Exactly seven languages get their own indicator; everything else is
  // folded into no indicator at all.
  std::vector<std::string> languages = {"cpp",  "python", "java", "javascript",
                                        "go",   "rust",   "php"};
  std::vector<std::string> critical_prefixes;
  // "branching": per-file tally of added-minus-deleted lines containing a
  // branching keyword (if/for/while/case/catch). "none": constant zero.
  std::string complexity_mode = "branching";
};

// Names of the base features, in the fixed order models consume them.
std::vector<std::string> feature_names(const FeaturesConfig& cfg);
inline constexpr const char* kLlmScoreFeature = "llm_score";

struct FeatureVector {
  std::vector<double> values;            // aligned with feature_names(cfg)
  std::optional<double> llm_score;       // appended by ensemble flows
};

// Rolling view of everything that landed strictly before as_of. Built once
// and advanced in timestamp order; never sees the diff being scored.
class HistoryIndex {
 public:
  explicit HistoryIndex(FeaturesConfig cfg);

  std::int64_t as_of() const { return as_of_; }
  const FeaturesConfig& config() const { return cfg_; }

  // Moves the cutoff forward. Every record applied so far must be older.
  void set_as_of(std::int64_t as_of);

  // Folds one landed record into the index. Must respect timestamp order
  // and r.closed_at < as_of is NOT required at apply time; callers advance
  // as_of before extracting.
  void apply(const DiffRecord& r);

  struct FileState {
    bool prior_sev = false;
    std::string creator;  // author of the creating diff, "" if unknown
    std::unordered_set<std::string> authors;
    long complexity = 0;
  };

  const FileState* file(const std::string& path) const;
  bool folder_has_prior_sev(const std::string& folder) const;
  std::size_t author_prior_diffs(const std::string& author) const;

 private:
  FeaturesConfig cfg_;
  std::int64_t as_of_ = 0;
  std::int64_t newest_applied_ = std::numeric_limits<std::int64_t>::min();
  std::unordered_map<std::string, FileState> files_;
  std::unordered_set<std::string> sev_folders_;
  std::unordered_map<std::string, std::size_t> author_diffs_;

  friend HistoryIndex build_history(const Corpus&, std::int64_t,
                                    const FeaturesConfig&);
};

// Index over records with closed_at strictly before as_of.
HistoryIndex build_history(const Corpus& c, std::int64_t as_of,
                           const FeaturesConfig& cfg);

// Extracts the model features for one diff against a history whose as_of
// equals the diff's own closed_at (enforced). Metadata-only records are
// rejected with "no file changes".
FeatureVector extract(const DiffRecord& d, const HistoryIndex& h);

// Features for every record of a corpus, each against the history of
// strictly-earlier records; equal timestamps never see one another.
std::vector<FeatureVector> extract_all(const Corpus& c,
                                       const FeaturesConfig& cfg);

// Like extract_all, but metadata-only records are folded into history
// without receiving a feature row. indices[i] is the corpus position of
// rows[i].
struct ExtractedFeatures {
  std::vector<std::size_t> indices;
  std::vector<FeatureVector> rows;
};
ExtractedFeatures extract_scorable(const Corpus& c, const FeaturesConfig& cfg);

// Immediate parent directory of a path ("" for bare filenames).
std::string parent_folder(const std::string& path);

// True if the line's code tokens include a branching keyword.
bool has_branching_keyword(const std::string& line);

}  // namespace drs
