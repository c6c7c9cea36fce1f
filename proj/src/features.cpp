#include "drs/features.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "drs/error.hpp"
#include "drs/tokenize.hpp"

namespace drs {

std::vector<std::string> feature_names(const FeaturesConfig& cfg) {
  if (cfg.languages.size() != 7)
    throw UsageError("feature config must list exactly 7 languages, got " +
                     std::to_string(cfg.languages.size()));
  std::vector<std::string> names = {
      "churn_ratio_log",    "new_files",        "only_new_files",
      "n_files_log",        "n_prior_authors_log", "prior_sev_file",
      "prior_sev_folder",   "critical_service", "complexity_total"};
  for (const std::string& lang : cfg.languages) names.push_back("lang_" + lang);
  names.push_back("author_is_creator");
  names.push_back("author_prior_diffs_log");
  return names;
}

std::string parent_folder(const std::string& path) {
  const std::size_t slash = path.rfind('/');
  return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

bool has_branching_keyword(const std::string& line) {
  for (const std::string& tok : tokenize(line)) {
    if (tok == "if" || tok == "for" || tok == "while" || tok == "case" ||
        tok == "catch")
      return true;
  }
  return false;
}

namespace {

long branching_lines(const std::vector<std::pair<LineTag, std::string>>& lines,
                     LineTag want) {
  long n = 0;
  for (const auto& [tag, text] : lines)
    if (tag == want && has_branching_keyword(text)) ++n;
  return n;
}

}  // namespace

HistoryIndex::HistoryIndex(FeaturesConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.complexity_mode != "branching" && cfg_.complexity_mode != "none")
    throw UsageError("unknown complexity_mode '" + cfg_.complexity_mode +
                     "' (expected 'branching' or 'none')");
  feature_names(cfg_);  // validates the language list
}

void HistoryIndex::set_as_of(std::int64_t as_of) {
  if (newest_applied_ != std::numeric_limits<std::int64_t>::min() &&
      as_of <= newest_applied_) {
    throw std::logic_error(
        "history as_of must stay strictly ahead of applied records");
  }
  as_of_ = as_of;
}

void HistoryIndex::apply(const DiffRecord& r) {
  if (newest_applied_ != std::numeric_limits<std::int64_t>::min() &&
      r.closed_at < newest_applied_) {
    throw std::logic_error("history records must be applied in time order");
  }
  newest_applied_ = std::max(newest_applied_, r.closed_at);
  author_diffs_[r.author_id] += 1;
  for (const FileChange& fc : r.changes) {
    FileState& st = files_[fc.path];
    if (fc.is_new_file && st.creator.empty()) st.creator = r.author_id;
    st.authors.insert(r.author_id);
    if (cfg_.complexity_mode == "branching") {
      for (const Hunk& h : fc.hunks) {
        st.complexity += branching_lines(h.lines, LineTag::add);
        st.complexity -= branching_lines(h.lines, LineTag::del);
      }
      if (st.complexity < 0) st.complexity = 0;
    }
    if (r.caused_sev) {
      st.prior_sev = true;
      sev_folders_.insert(parent_folder(fc.path));
    }
  }
}

const HistoryIndex::FileState* HistoryIndex::file(
    const std::string& path) const {
  const auto it = files_.find(path);
  return it == files_.end() ? nullptr : &it->second;
}

bool HistoryIndex::folder_has_prior_sev(const std::string& folder) const {
  return sev_folders_.contains(folder);
}

std::size_t HistoryIndex::author_prior_diffs(const std::string& author) const {
  const auto it = author_diffs_.find(author);
  return it == author_diffs_.end() ? 0 : it->second;
}

HistoryIndex build_history(const Corpus& c, std::int64_t as_of,
                           const FeaturesConfig& cfg) {
  HistoryIndex h(cfg);
  for (const DiffRecord& r : c.records) {
    if (r.closed_at < as_of) h.apply(r);
  }
  h.as_of_ = as_of;
  return h;
}

FeatureVector extract(const DiffRecord& d, const HistoryIndex& h) {
  if (d.metadata_only || d.changes.empty())
    throw UsageError("extract: diff '" + d.id + "' has no file changes");
  if (h.as_of() != d.closed_at) {
    std::ostringstream os;
    os << "extract: history as_of " << h.as_of() << " != diff closed_at "
       << d.closed_at << " for '" << d.id << "' (leak hazard)";
    throw std::logic_error(os.str());
  }
  const FeaturesConfig& cfg = h.config();

  long added = 0, deleted = 0, size_after = 0;
  bool any_new = false, all_new = true;
  bool prior_sev_file = false, prior_sev_folder = false, critical = false;
  bool author_is_creator = false;
  double n_prior_authors = 0.0, complexity_total = 0.0;
  std::vector<double> lang(cfg.languages.size(), 0.0);

  for (const FileChange& fc : d.changes) {
    added += fc.added_count();
    deleted += fc.deleted_count();
    size_after += fc.file_size_after;
    any_new = any_new || fc.is_new_file;
    all_new = all_new && fc.is_new_file;
    if (const HistoryIndex::FileState* st = h.file(fc.path)) {
      prior_sev_file = prior_sev_file || st->prior_sev;
      n_prior_authors += static_cast<double>(st->authors.size());
      complexity_total += static_cast<double>(st->complexity);
      author_is_creator =
          author_is_creator ||
          (!st->creator.empty() && st->creator == d.author_id);
    }
    prior_sev_folder =
        prior_sev_folder || h.folder_has_prior_sev(parent_folder(fc.path));
    for (const std::string& prefix : cfg.critical_prefixes) {
      if (fc.path.rfind(prefix, 0) == 0) {
        critical = true;
        break;
      }
    }
    for (std::size_t j = 0; j < cfg.languages.size(); ++j) {
      if (fc.language == cfg.languages[j]) lang[j] = 1.0;
    }
  }

  FeatureVector fv;
  fv.values.reserve(11 + lang.size());
  fv.values.push_back(std::log(
      (static_cast<double>(added) + static_cast<double>(deleted) + 1.0) /
      (static_cast<double>(size_after) + 1.0)));
  fv.values.push_back(any_new ? 1.0 : 0.0);
  fv.values.push_back(all_new ? 1.0 : 0.0);
  fv.values.push_back(std::log(1.0 + static_cast<double>(d.changes.size())));
  fv.values.push_back(std::log1p(n_prior_authors));
  fv.values.push_back(prior_sev_file ? 1.0 : 0.0);
  fv.values.push_back(prior_sev_folder ? 1.0 : 0.0);
  fv.values.push_back(critical ? 1.0 : 0.0);
  fv.values.push_back(cfg.complexity_mode == "none" ? 0.0 : complexity_total);
  for (double v : lang) fv.values.push_back(v);
  fv.values.push_back(author_is_creator ? 1.0 : 0.0);
  fv.values.push_back(std::log(
      1.0 + static_cast<double>(h.author_prior_diffs(d.author_id))));

  for (std::size_t j = 0; j < fv.values.size(); ++j) {
    if (!std::isfinite(fv.values[j])) {
      throw std::runtime_error("extract: non-finite feature '" +
                               feature_names(cfg)[j] + "' for diff '" + d.id +
                               "'");
    }
  }
  return fv;
}

std::vector<FeatureVector> extract_all(const Corpus& c,
                                       const FeaturesConfig& cfg) {
  std::vector<FeatureVector> out;
  out.reserve(c.records.size());
  HistoryIndex h(cfg);
  std::size_t i = 0;
  const std::size_t n = c.records.size();
  while (i < n) {
    // Group records sharing a timestamp: they are extracted against the
    // state before the group, then folded in together.
    std::size_t j = i;
    while (j < n && c.records[j].closed_at == c.records[i].closed_at) ++j;
    h.set_as_of(c.records[i].closed_at);
    for (std::size_t k = i; k < j; ++k) out.push_back(extract(c.records[k], h));
    for (std::size_t k = i; k < j; ++k) h.apply(c.records[k]);
    i = j;
  }
  return out;
}

ExtractedFeatures extract_scorable(const Corpus& c,
                                   const FeaturesConfig& cfg) {
  ExtractedFeatures out;
  HistoryIndex h(cfg);
  std::size_t i = 0;
  const std::size_t n = c.records.size();
  while (i < n) {
    std::size_t j = i;
    while (j < n && c.records[j].closed_at == c.records[i].closed_at) ++j;
    h.set_as_of(c.records[i].closed_at);
    for (std::size_t k = i; k < j; ++k) {
      if (c.records[k].metadata_only) continue;
      out.indices.push_back(k);
      out.rows.push_back(extract(c.records[k], h));
    }
    for (std::size_t k = i; k < j; ++k) h.apply(c.records[k]);
    i = j;
  }
  return out;
}

}  // namespace drs
