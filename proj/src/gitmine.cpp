#include "drs/gitmine.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "drs/error.hpp"
#include "drs/unidiff.hpp"

namespace drs {

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

// Runs a git subcommand against the repo, capturing stdout. Returns false on
// nonzero exit (output may be partial).
bool run_git(const std::string& repo, const std::string& args,
             std::string* out) {
  const std::string cmd =
      "git -C " + shell_quote(repo) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed for git");
  out->clear();
  char buf[8192];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) out->append(buf, got);
  return pclose(p) == 0;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::map<std::string, bool> read_labels(const std::string& path) {
  std::map<std::string, bool> labels;
  if (path.empty()) return labels;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open labels file '" + path + "'");
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream is(t);
    std::string hash, value;
    if (!(is >> hash >> value))
      throw UsageError("labels file, line " + std::to_string(lineno) +
                       ": expected '<hash> <0|1>'");
    bool v;
    if (value == "1" || value == "true")
      v = true;
    else if (value == "0" || value == "false")
      v = false;
    else
      throw UsageError("labels file, line " + std::to_string(lineno) +
                       ": label must be 0 or 1, got '" + value + "'");
    labels[hash] = v;
  }
  return labels;
}

}  // namespace

Corpus mine_git(const std::string& repo_path, const std::string& labels_path,
                const Config& cfg) {
  std::map<std::string, bool> labels = read_labels(labels_path);

  std::string hashes_raw;
  if (!run_git(repo_path, "rev-list --reverse --no-merges HEAD",
               &hashes_raw))
    throw UsageError("cannot read repository '" + repo_path +
                     "' (is it a git checkout with at least one commit?)");
  std::vector<std::string> hashes;
  for (const std::string& h : split_on(hashes_raw, '\n'))
    if (!trim(h).empty()) hashes.push_back(trim(h));

  Corpus c;
  c.provenance = Provenance::git;
  std::unordered_map<std::string, long> file_sizes;  // running line counts

  for (const std::string& hash : hashes) {
    std::string out;
    if (!run_git(repo_path,
                 "-c diff.renames=false show " + hash +
                     " --no-color --format="
                     "'%H%x01%ct%x01%ae%x01%s%x01"
                     "%(trailers:key=Test-Plan,valueonly)%x02'",
                 &out))
      throw std::runtime_error("git show failed for commit " + hash);

    const std::size_t sep = out.find('\x02');
    if (sep == std::string::npos)
      throw std::runtime_error("unexpected git show output for " + hash);
    const std::vector<std::string> head = split_on(out.substr(0, sep), '\x01');
    if (head.size() != 5)
      throw std::runtime_error("unexpected git show header for " + hash);

    DiffRecord d;
    d.id = head[0];
    d.closed_at = std::stoll(head[1]);
    d.author_id = head[2];
    d.title = head[3];
    d.test_plan = trim(head[4]);

    std::string patch = out.substr(sep + 1);
    const std::size_t first_diff = patch.find("diff --git ");
    patch = first_diff == std::string::npos ? "" : patch.substr(first_diff);
    if (!patch.empty()) d.changes = parse_unidiff(patch);
    d.metadata_only = d.changes.empty();

    for (FileChange& fc : d.changes) {
      fc.language = language_of_path(cfg, fc.path);
      if (fc.is_binary) {
        file_sizes[fc.path] = 0;
        fc.file_size_after = 0;
      } else if (fc.is_deleted_file) {
        file_sizes.erase(fc.path);
        fc.file_size_after = 0;
      } else if (fc.is_new_file) {
        file_sizes[fc.path] = fc.added_count();
        fc.file_size_after = fc.added_count();
      } else {
        if (fc.old_path.has_value()) {
          auto it = file_sizes.find(*fc.old_path);
          if (it != file_sizes.end()) {
            file_sizes[fc.path] = it->second;
            file_sizes.erase(*fc.old_path);
          }
        }
        long& size = file_sizes[fc.path];
        size += fc.added_count() - fc.deleted_count();
        if (size < 0) size = 0;
        fc.file_size_after = size;
      }
    }
    d.org = d.changes.empty() ? "default"
                              : org_of_path(cfg, d.changes.front().path);
    auto it = labels.find(d.id);
    if (it != labels.end()) {
      d.caused_sev = it->second;
      labels.erase(it);
    }
    c.records.push_back(std::move(d));
  }

  for (const auto& [hash, unused] : labels)
    std::cerr << "warning: label for unknown commit " << hash
              << " ignored\n";

  std::stable_sort(c.records.begin(), c.records.end(),
                   [](const DiffRecord& a, const DiffRecord& b) {
                     return a.closed_at < b.closed_at;
                   });
  validate_corpus(c);
  return c;
}

}  // namespace drs
