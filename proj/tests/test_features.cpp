#include "drs/features.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "drs/error.hpp"

using drs::build_history;
using drs::Corpus;
using drs::DiffRecord;
using drs::extract;
using drs::extract_all;
using drs::extract_scorable;
using drs::FeaturesConfig;
using drs::FeatureVector;
using drs::FileChange;
using drs::HistoryIndex;
using drs::Hunk;
using drs::LineTag;

namespace {

// Feature positions for the default 7-language config.
constexpr std::size_t kChurn = 0, kNewFiles = 1, kOnlyNew = 2, kNFiles = 3,
                      kPriorAuthors = 4, kPriorSevFile = 5, kPriorSevFolder = 6,
                      kCritical = 7, kComplexity = 8, kLangBase = 9,
                      kCreator = 16, kAuthorPrior = 17;

Hunk mod_hunk(long adds, long dels, const std::string& add_text = "x = 1;",
              const std::string& del_text = "y = 2;") {
  Hunk h;
  h.old_start = dels > 0 ? 1 : 0;
  h.old_len = dels;
  h.new_start = adds > 0 ? 1 : 0;
  h.new_len = adds;
  for (long i = 0; i < dels; ++i) h.lines.emplace_back(LineTag::del, del_text);
  for (long i = 0; i < adds; ++i) h.lines.emplace_back(LineTag::add, add_text);
  return h;
}

FileChange change(const std::string& path, long adds, long dels,
                  long size_after, const std::string& lang = "cpp") {
  FileChange fc;
  fc.path = path;
  fc.language = lang;
  fc.file_size_after = size_after;
  fc.hunks.push_back(mod_hunk(adds, dels));
  return fc;
}

DiffRecord record(const std::string& id, const std::string& author,
                  std::int64_t ts, std::vector<FileChange> changes,
                  bool sev = false) {
  DiffRecord r;
  r.id = id;
  r.title = "change " + id;
  r.author_id = author;
  r.closed_at = ts;
  r.org = "orgA";
  r.caused_sev = sev;
  r.changes = std::move(changes);
  return r;
}

FeatureVector features_of(const DiffRecord& d, const Corpus& history,
                          const FeaturesConfig& cfg = FeaturesConfig{}) {
  HistoryIndex h = build_history(history, d.closed_at, cfg);
  return extract(d, h);
}

}  // namespace

TEST_CASE("churn ratio follows the size-normalized log formula") {
  // 50 added + 10 deleted against a 600-line file.
  DiffRecord d = record("d1", "alice", 100,
                        {change("svc/a.cc", 50, 10, 600)});
  const FeatureVector fv = features_of(d, Corpus{});
  CHECK(fv.values[kChurn] ==
        doctest::Approx(std::log(61.0 / 601.0)).epsilon(1e-12));
  CHECK(fv.values[kChurn] == doctest::Approx(-2.288).epsilon(1e-3));
}

TEST_CASE("file count enters through log(1 + n)") {
  DiffRecord one = record("d1", "alice", 100, {change("a.cc", 1, 0, 10)});
  CHECK(features_of(one, Corpus{}).values[kNFiles] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  DiffRecord three = record("d3", "alice", 100,
                            {change("a.cc", 1, 0, 10), change("b.cc", 1, 0, 10),
                             change("c.cc", 1, 0, 10)});
  CHECK(features_of(three, Corpus{}).values[kNFiles] ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("new-file indicators distinguish any from all") {
  FileChange fresh;
  fresh.path = "svc/new.cc";
  fresh.language = "cpp";
  fresh.is_new_file = true;
  Hunk h;
  h.old_start = 0;
  h.old_len = 0;
  h.new_start = 1;
  h.new_len = 2;
  h.lines.emplace_back(LineTag::add, "int a;");
  h.lines.emplace_back(LineTag::add, "int b;");
  fresh.hunks.push_back(h);
  fresh.file_size_after = 2;

  DiffRecord mixed = record("d1", "alice", 100,
                            {fresh, change("svc/old.cc", 1, 0, 40)});
  const FeatureVector fv1 = features_of(mixed, Corpus{});
  CHECK(fv1.values[kNewFiles] == 1.0);
  CHECK(fv1.values[kOnlyNew] == 0.0);

  DiffRecord pure = record("d2", "alice", 100, {fresh});
  const FeatureVector fv2 = features_of(pure, Corpus{});
  CHECK(fv2.values[kNewFiles] == 1.0);
  CHECK(fv2.values[kOnlyNew] == 1.0);

  DiffRecord none = record("d3", "alice", 100, {change("svc/old.cc", 1, 0, 9)});
  const FeatureVector fv3 = features_of(none, Corpus{});
  CHECK(fv3.values[kNewFiles] == 0.0);
  CHECK(fv3.values[kOnlyNew] == 0.0);
}

TEST_CASE("prior incidents mark files and their folders") {
  Corpus hist;
  hist.records.push_back(record("h1", "bob", 50,
                                {change("pay/core/x.cc", 3, 0, 30)}, true));
  // Same file: both flags fire.
  DiffRecord same = record("d1", "alice", 100,
                           {change("pay/core/x.cc", 1, 0, 31)});
  const FeatureVector fv1 = features_of(same, hist);
  CHECK(fv1.values[kPriorSevFile] == 1.0);
  CHECK(fv1.values[kPriorSevFolder] == 1.0);
  // Sibling file in the same folder: only the folder flag fires.
  DiffRecord sibling = record("d2", "alice", 100,
                              {change("pay/core/y.cc", 1, 0, 12)});
  const FeatureVector fv2 = features_of(sibling, hist);
  CHECK(fv2.values[kPriorSevFile] == 0.0);
  CHECK(fv2.values[kPriorSevFolder] == 1.0);
  // Different folder: neither.
  DiffRecord other = record("d3", "alice", 100,
                            {change("pay/api/z.cc", 1, 0, 12)});
  const FeatureVector fv3 = features_of(other, hist);
  CHECK(fv3.values[kPriorSevFile] == 0.0);
  CHECK(fv3.values[kPriorSevFolder] == 0.0);
}

TEST_CASE("prior authors accumulate per touched file") {
  Corpus hist;
  hist.records.push_back(record("h1", "bob", 10, {change("a.cc", 1, 0, 5)}));
  hist.records.push_back(record("h2", "carol", 20, {change("a.cc", 1, 0, 6)}));
  hist.records.push_back(record("h3", "bob", 30, {change("b.cc", 1, 0, 7)}));

  // a.cc has {bob, carol}, b.cc has {bob}: 2 + 1 distinct-author entries.
  DiffRecord d = record("d1", "alice", 100,
                        {change("a.cc", 1, 0, 7), change("b.cc", 1, 0, 8)});
  CHECK(features_of(d, hist).values[kPriorAuthors] ==
        doctest::Approx(std::log1p(3.0)).epsilon(1e-12));

  // Never-seen file contributes nothing.
  DiffRecord fresh = record("d2", "alice", 100, {change("zz.cc", 1, 0, 3)});
  CHECK(features_of(fresh, hist).values[kPriorAuthors] == 0.0);
}

TEST_CASE("critical prefixes flag matching paths") {
  FeaturesConfig cfg;
  cfg.critical_prefixes = {"pay/", "auth/"};
  DiffRecord hit = record("d1", "alice", 100, {change("pay/x.cc", 1, 0, 5)});
  CHECK(features_of(hit, Corpus{}, cfg).values[kCritical] == 1.0);
  DiffRecord miss = record("d2", "alice", 100, {change("web/x.cc", 1, 0, 5)});
  CHECK(features_of(miss, Corpus{}, cfg).values[kCritical] == 0.0);
  // Prefix means prefix, not substring.
  DiffRecord inner = record("d3", "alice", 100,
                            {change("svc/pay/x.cc", 1, 0, 5)});
  CHECK(features_of(inner, Corpus{}, cfg).values[kCritical] == 0.0);
}

TEST_CASE("language indicators are one-hot over the configured list") {
  DiffRecord d = record("d1", "alice", 100,
                        {change("a.py", 1, 0, 5, "python"),
                         change("b.go", 1, 0, 5, "go")});
  const FeatureVector fv = features_of(d, Corpus{});
  const std::vector<std::string> names = drs::feature_names(FeaturesConfig{});
  REQUIRE(fv.values.size() == names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == "lang_python" || names[j] == "lang_go")
      CHECK(fv.values[j] == 1.0);
    else if (names[j].rfind("lang_", 0) == 0)
      CHECK(fv.values[j] == 0.0);
  }
  // A language outside the list sets no indicator at all.
  DiffRecord other = record("d2", "alice", 100,
                            {change("x.txt", 1, 0, 5, "other")});
  const FeatureVector fv2 = features_of(other, Corpus{});
  for (std::size_t j = kLangBase; j < kLangBase + 7; ++j)
    CHECK(fv2.values[j] == 0.0);
}

TEST_CASE("complexity accumulates branching lines, clamped at zero") {
  const std::string branchy = "if (x > 3) { y++; }";
  const std::string flat = "y = x + 1;";
  Corpus hist;
  // Two diffs add 3 branching lines to a.cc, one removes 1.
  DiffRecord h1 = record("h1", "bob", 10, {});
  FileChange fc1;
  fc1.path = "a.cc";
  fc1.language = "cpp";
  fc1.file_size_after = 10;
  fc1.hunks.push_back(mod_hunk(2, 0, branchy));
  h1.changes.push_back(fc1);
  hist.records.push_back(h1);

  DiffRecord h2 = record("h2", "carol", 20, {});
  FileChange fc2;
  fc2.path = "a.cc";
  fc2.language = "cpp";
  fc2.file_size_after = 11;
  Hunk mixed = mod_hunk(1, 1, branchy, branchy);
  fc2.hunks.push_back(mixed);  // +1 branching, -1 branching: net 0
  h2.changes.push_back(fc2);
  hist.records.push_back(h2);

  DiffRecord h3 = record("h3", "bob", 30, {});
  FileChange fc3;
  fc3.path = "a.cc";
  fc3.language = "cpp";
  fc3.file_size_after = 12;
  fc3.hunks.push_back(mod_hunk(1, 0, flat));  // non-branching add
  h3.changes.push_back(fc3);
  hist.records.push_back(h3);

  DiffRecord d = record("d1", "alice", 100, {change("a.cc", 1, 0, 13)});
  CHECK(features_of(d, hist).values[kComplexity] == 2.0);

  FeaturesConfig off;
  off.complexity_mode = "none";
  CHECK(features_of(d, hist, off).values[kComplexity] == 0.0);
}

TEST_CASE("creator flag fires only for the file's creating author") {
  FileChange fresh;
  fresh.path = "svc/new.cc";
  fresh.language = "cpp";
  fresh.is_new_file = true;
  Hunk h;
  h.old_start = 0;
  h.old_len = 0;
  h.new_start = 1;
  h.new_len = 1;
  h.lines.emplace_back(LineTag::add, "int a;");
  fresh.hunks.push_back(h);
  fresh.file_size_after = 1;

  Corpus hist;
  hist.records.push_back(record("h1", "bob", 10, {fresh}));
  hist.records.push_back(record("h2", "carol", 20,
                                {change("svc/new.cc", 1, 0, 2)}));

  DiffRecord by_bob = record("d1", "bob", 100, {change("svc/new.cc", 1, 0, 3)});
  CHECK(features_of(by_bob, hist).values[kCreator] == 1.0);
  DiffRecord by_carol = record("d2", "carol", 100,
                               {change("svc/new.cc", 1, 0, 3)});
  CHECK(features_of(by_carol, hist).values[kCreator] == 0.0);
}

TEST_CASE("author history counts every prior record") {
  Corpus hist;
  hist.records.push_back(record("h1", "alice", 10, {change("a.cc", 1, 0, 5)}));
  DiffRecord meta = record("h2", "alice", 20, {});
  meta.metadata_only = true;
  hist.records.push_back(meta);
  hist.records.push_back(record("h3", "bob", 30, {change("b.cc", 1, 0, 5)}));

  DiffRecord d = record("d1", "alice", 100, {change("c.cc", 1, 0, 5)});
  // Two prior records by alice: the content diff and the metadata-only one.
  CHECK(features_of(d, hist).values[kAuthorPrior] ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("history is strictly as-of: same-timestamp records are invisible") {
  Corpus c;
  c.records.push_back(record("r1", "bob", 100, {change("a.cc", 2, 0, 10)},
                             true));
  c.records.push_back(record("r2", "carol", 100, {change("a.cc", 1, 0, 11)}));
  c.records.push_back(record("r3", "dana", 200, {change("a.cc", 1, 0, 12)}));

  const std::vector<FeatureVector> rows = extract_all(c, FeaturesConfig{});
  REQUIRE(rows.size() == 3);
  // r2 lands at the same instant as r1 and must not see its incident.
  CHECK(rows[1].values[kPriorSevFile] == 0.0);
  CHECK(rows[1].values[kPriorAuthors] == 0.0);
  // r3 is strictly later and sees both.
  CHECK(rows[2].values[kPriorSevFile] == 1.0);
  CHECK(rows[2].values[kPriorAuthors] == doctest::Approx(std::log1p(2.0)));
}

TEST_CASE("extract_all matches per-record rebuilt histories") {
  Corpus c;
  c.records.push_back(record("r1", "bob", 100, {change("a.cc", 2, 0, 10)}));
  c.records.push_back(record("r2", "carol", 160, {change("a.cc", 1, 0, 11)},
                             true));
  c.records.push_back(record("r3", "bob", 220,
                             {change("a.cc", 1, 1, 11),
                              change("b.cc", 4, 0, 44)}));
  const std::vector<FeatureVector> rows = extract_all(c, FeaturesConfig{});
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    const FeatureVector lone = features_of(c.records[i], c);
    CHECK(rows[i].values == lone.values);
  }
}

TEST_CASE("scorable extraction skips metadata-only rows but counts them") {
  Corpus c;
  c.records.push_back(record("r1", "alice", 100, {change("a.cc", 1, 0, 5)}));
  DiffRecord meta = record("r2", "alice", 150, {});
  meta.metadata_only = true;
  c.records.push_back(meta);
  c.records.push_back(record("r3", "alice", 200, {change("b.cc", 1, 0, 5)}));

  const drs::ExtractedFeatures ex = extract_scorable(c, FeaturesConfig{});
  REQUIRE(ex.indices == std::vector<std::size_t>{0, 2});
  REQUIRE(ex.rows.size() == 2);
  // r3 sees two prior diffs by alice, the metadata-only record included.
  CHECK(ex.rows[1].values[kAuthorPrior] ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("extraction guards misuse") {
  DiffRecord meta = record("m1", "alice", 100, {});
  meta.metadata_only = true;
  HistoryIndex h = build_history(Corpus{}, 100, FeaturesConfig{});
  CHECK_THROWS_WITH_AS(extract(meta, h),
                       doctest::Contains("no file changes"), drs::UsageError);

  DiffRecord d = record("d1", "alice", 500, {change("a.cc", 1, 0, 5)});
  // History cut at the wrong instant is a leak hazard, not a usage slip.
  CHECK_THROWS_AS(extract(d, h), std::logic_error);
}

TEST_CASE("the language list must have exactly seven entries") {
  FeaturesConfig cfg;
  cfg.languages = {"cpp", "python"};
  CHECK_THROWS_WITH_AS(drs::feature_names(cfg),
                       doctest::Contains("exactly 7"), drs::UsageError);
  CHECK_THROWS_AS(HistoryIndex{cfg}, drs::UsageError);
}

TEST_CASE("unknown complexity modes are rejected") {
  FeaturesConfig cfg;
  cfg.complexity_mode = "cyclomatic";
  CHECK_THROWS_WITH_AS(HistoryIndex{cfg},
                       doctest::Contains("complexity_mode"), drs::UsageError);
}

TEST_CASE("parent_folder and branching keyword helpers") {
  CHECK(drs::parent_folder("a/b/c.cc") == "a/b");
  CHECK(drs::parent_folder("c.cc") == "");
  CHECK(drs::has_branching_keyword("if (a) { b(); }"));
  CHECK(drs::has_branching_keyword("for (int i = 0; i < n; ++i)"));
  CHECK_FALSE(drs::has_branching_keyword("inform the caller"));
  CHECK_FALSE(drs::has_branching_keyword("total += 3;"));
}
