#include "drs/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "drs/error.hpp"

namespace drs {

using nlohmann::json;

namespace {

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::jsonl: return "jsonl";
    case Provenance::git: return "git";
    case Provenance::synthetic: return "synthetic";
  }
  return "jsonl";
}

Provenance provenance_from(const std::string& s, const std::string& where) {
  if (s == "jsonl") return Provenance::jsonl;
  if (s == "git") return Provenance::git;
  if (s == "synthetic") return Provenance::synthetic;
  throw UsageError(where + ": unknown provenance '" + s + "'");
}

void reject_unknown_keys(const json& obj,
                         const std::unordered_set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) {
      throw UsageError(where + ": unknown key '" + key + "'");
    }
  }
}

json hunk_to_json(const Hunk& h) {
  json lines = json::array();
  for (const auto& [tag, text] : h.lines) {
    const char t = static_cast<char>(tag);
    lines.push_back(json::array({std::string(1, t), text}));
  }
  return json{{"old_start", h.old_start},
              {"old_len", h.old_len},
              {"new_start", h.new_start},
              {"new_len", h.new_len},
              {"lines", std::move(lines)}};
}

Hunk hunk_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(
      j, {"old_start", "old_len", "new_start", "new_len", "lines"}, where);
  Hunk h;
  h.old_start = j.at("old_start").get<long>();
  h.old_len = j.at("old_len").get<long>();
  h.new_start = j.at("new_start").get<long>();
  h.new_len = j.at("new_len").get<long>();
  for (const json& entry : j.at("lines")) {
    if (!entry.is_array() || entry.size() != 2)
      throw UsageError(where + ": hunk line must be a [tag, text] pair");
    const std::string tag = entry[0].get<std::string>();
    const std::string text = entry[1].get<std::string>();
    if (tag == " ") {
      h.lines.emplace_back(LineTag::context, text);
    } else if (tag == "+") {
      h.lines.emplace_back(LineTag::add, text);
    } else if (tag == "-") {
      h.lines.emplace_back(LineTag::del, text);
    } else {
      throw UsageError(where + ": unknown line tag '" + tag + "'");
    }
  }
  return h;
}

json change_to_json(const FileChange& fc) {
  json j{{"path", fc.path},
         {"is_new_file", fc.is_new_file},
         {"is_deleted_file", fc.is_deleted_file},
         {"is_binary", fc.is_binary},
         {"missing_newline", fc.missing_newline},
         {"file_size_after", fc.file_size_after},
         {"language", fc.language}};
  if (fc.old_path) j["old_path"] = *fc.old_path;
  json hunks = json::array();
  for (const Hunk& h : fc.hunks) hunks.push_back(hunk_to_json(h));
  j["hunks"] = std::move(hunks);
  return j;
}

FileChange change_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j,
                      {"path", "old_path", "is_new_file", "is_deleted_file",
                       "is_binary", "missing_newline", "file_size_after",
                       "language", "hunks"},
                      where);
  FileChange fc;
  fc.path = j.at("path").get<std::string>();
  if (j.contains("old_path") && !j.at("old_path").is_null())
    fc.old_path = j.at("old_path").get<std::string>();
  fc.is_new_file = j.at("is_new_file").get<bool>();
  fc.is_deleted_file = j.at("is_deleted_file").get<bool>();
  fc.is_binary = j.at("is_binary").get<bool>();
  fc.missing_newline = j.at("missing_newline").get<bool>();
  fc.file_size_after = j.at("file_size_after").get<long>();
  fc.language = j.at("language").get<std::string>();
  for (const json& hj : j.at("hunks"))
    fc.hunks.push_back(hunk_from_json(hj, where));
  return fc;
}

json record_to_json(const DiffRecord& r, const double* true_risk) {
  json j{{"id", r.id},
         {"title", r.title},
         {"test_plan", r.test_plan},
         {"author_id", r.author_id},
         {"closed_at", r.closed_at},
         {"org", r.org},
         {"caused_sev", r.caused_sev},
         {"metadata_only", r.metadata_only}};
  json changes = json::array();
  for (const FileChange& fc : r.changes) changes.push_back(change_to_json(fc));
  j["changes"] = std::move(changes);
  if (true_risk) j["true_risk"] = *true_risk;
  return j;
}

DiffRecord record_from_json(const json& j, const std::string& where,
                            std::optional<double>& true_risk) {
  reject_unknown_keys(j,
                      {"id", "title", "test_plan", "author_id", "closed_at",
                       "org", "caused_sev", "metadata_only", "changes",
                       "true_risk"},
                      where);
  DiffRecord r;
  r.id = j.at("id").get<std::string>();
  r.title = j.at("title").get<std::string>();
  r.test_plan = j.at("test_plan").get<std::string>();
  r.author_id = j.at("author_id").get<std::string>();
  r.closed_at = j.at("closed_at").get<std::int64_t>();
  r.org = j.at("org").get<std::string>();
  r.caused_sev = j.at("caused_sev").get<bool>();
  r.metadata_only = j.at("metadata_only").get<bool>();
  for (const json& cj : j.at("changes"))
    r.changes.push_back(change_from_json(cj, where));
  if (j.contains("true_risk")) true_risk = j.at("true_risk").get<double>();
  return r;
}

void validate_record(const DiffRecord& r, const std::string& where) {
  if (r.id.empty()) throw UsageError(where + ": empty diff id");
  if (r.closed_at <= 0)
    throw UsageError(where + ": closed_at must be a positive UTC timestamp");
  if (r.changes.empty() && !r.metadata_only)
    throw UsageError(where +
                     ": record has no file changes but is not metadata_only");
  if (!r.changes.empty() && r.metadata_only)
    throw UsageError(where + ": metadata_only record carries file changes");
  for (const FileChange& fc : r.changes) {
    if (fc.path.empty()) throw UsageError(where + ": file change with empty path");
    if (fc.is_new_file && fc.old_path)
      throw UsageError(where + ": new file '" + fc.path + "' has old_path");
    if (fc.is_new_file && fc.deleted_count() > 0)
      throw UsageError(where + ": new file '" + fc.path +
                       "' has deleted lines");
    if (fc.is_new_file && fc.file_size_after < fc.added_count())
      throw UsageError(where + ": new file '" + fc.path +
                       "' smaller than its added lines");
    if (fc.file_size_after < 0)
      throw UsageError(where + ": negative file_size_after for '" + fc.path +
                       "'");
  }
}

}  // namespace

bool same_content(const Corpus& a, const Corpus& b) {
  return a.records == b.records && a.generator_truth == b.generator_truth;
}

void validate_corpus(const Corpus& c) {
  std::unordered_set<std::string> ids;
  ids.reserve(c.records.size());
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    const DiffRecord& r = c.records[i];
    validate_record(r, "record " + r.id);
    if (!ids.insert(r.id).second)
      throw UsageError("duplicate diff id '" + r.id + "'");
    if (i > 0 && c.records[i - 1].closed_at > r.closed_at)
      throw std::runtime_error("corpus not sorted by closed_at at record '" +
                               r.id + "'");
  }
  if (c.provenance == Provenance::synthetic) {
    for (const auto& [id, p] : c.generator_truth) {
      if (!ids.contains(id))
        throw std::runtime_error("generator_truth names unknown id '" + id +
                                 "'");
    }
  } else if (!c.generator_truth.empty()) {
    throw std::runtime_error(
        "generator_truth present on a non-synthetic corpus");
  }
}

Corpus parse_jsonl(const std::string& text, const std::string& origin) {
  Corpus c;
  std::unordered_map<std::string, std::size_t> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      std::ostringstream os;
      os << origin << ", line " << lineno << ": malformed JSON (" << e.what()
         << ")";
      throw UsageError(os.str());
    }
    std::ostringstream whereos;
    whereos << origin << ", line " << lineno;
    const std::string where = whereos.str();
    if (first && j.is_object() && j.contains("__corpus__")) {
      first = false;
      const json& hdr = j.at("__corpus__");
      reject_unknown_keys(hdr, {"format_version", "provenance"}, where);
      if (hdr.at("format_version").get<int>() != 1)
        throw UsageError(where + ": unsupported corpus format_version");
      c.provenance =
          provenance_from(hdr.at("provenance").get<std::string>(), where);
      continue;
    }
    first = false;
    if (!j.is_object()) throw UsageError(where + ": expected a JSON object");
    std::optional<double> true_risk;
    DiffRecord r;
    try {
      r = record_from_json(j, where, true_risk);
    } catch (const json::exception& e) {
      throw UsageError(where + ": " + e.what());
    }
    validate_record(r, where);
    if (auto it = seen.find(r.id); it != seen.end()) {
      std::ostringstream os;
      os << origin << ", line " << lineno << ": duplicate diff id '" << r.id
         << "' (first seen on line " << it->second << ")";
      throw UsageError(os.str());
    }
    seen.emplace(r.id, lineno);
    if (true_risk) c.generator_truth[r.id] = *true_risk;
    c.records.push_back(std::move(r));
  }
  std::stable_sort(c.records.begin(), c.records.end(),
                   [](const DiffRecord& a, const DiffRecord& b) {
                     return a.closed_at < b.closed_at;
                   });
  if (!c.generator_truth.empty() && c.provenance != Provenance::synthetic) {
    // Records carrying true_risk identify a synthetic corpus even when the
    // header was stripped by an intermediate tool.
    c.provenance = Provenance::synthetic;
  }
  validate_corpus(c);
  return c;
}

Corpus load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open corpus file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str(), path);
}

std::string dump_jsonl(const Corpus& c) {
  std::ostringstream os;
  os << json{{"__corpus__",
              json{{"format_version", 1},
                   {"provenance", provenance_name(c.provenance)}}}}
            .dump()
     << "\n";
  for (const DiffRecord& r : c.records) {
    const double* truth = nullptr;
    if (auto it = c.generator_truth.find(r.id); it != c.generator_truth.end())
      truth = &it->second;
    os << record_to_json(r, truth).dump() << "\n";
  }
  return os.str();
}

void save_jsonl(const Corpus& c, const std::string& path) {
  validate_corpus(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write corpus file '" + path + "'");
  out << dump_jsonl(c);
  if (!out) throw UsageError("write failed for corpus file '" + path + "'");
}

double sev_rate(const Corpus& c) {
  if (c.records.empty())
    throw UsageError("sev_rate: corpus is empty");
  std::size_t sevs = 0;
  for (const DiffRecord& r : c.records)
    if (r.caused_sev) ++sevs;
  return static_cast<double>(sevs) / static_cast<double>(c.records.size());
}

}  // namespace drs
