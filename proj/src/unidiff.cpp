#include "drs/unidiff.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "drs/error.hpp"

namespace drs {

void Hunk::validate() const {
  long adds = 0, dels = 0, ctx = 0;
  for (const auto& [tag, text] : lines) {
    switch (tag) {
      case LineTag::add: ++adds; break;
      case LineTag::del: ++dels; break;
      case LineTag::context: ++ctx; break;
    }
  }
  if (adds + ctx != new_len || dels + ctx != old_len) {
    std::ostringstream os;
    os << "hunk length mismatch: header claims -" << old_start << ","
       << old_len << " +" << new_start << "," << new_len << " but body has "
       << dels << " deletions, " << adds << " additions, " << ctx
       << " context lines";
    throw std::runtime_error(os.str());
  }
}

std::vector<std::string> FileChange::added_lines() const {
  std::vector<std::string> out;
  for (const auto& h : hunks)
    for (const auto& [tag, text] : h.lines)
      if (tag == LineTag::add) out.push_back(text);
  return out;
}

std::vector<std::string> FileChange::deleted_lines() const {
  std::vector<std::string> out;
  for (const auto& h : hunks)
    for (const auto& [tag, text] : h.lines)
      if (tag == LineTag::del) out.push_back(text);
  return out;
}

long FileChange::added_count() const {
  long n = 0;
  for (const auto& h : hunks)
    for (const auto& [tag, text] : h.lines)
      if (tag == LineTag::add) ++n;
  return n;
}

long FileChange::deleted_count() const {
  long n = 0;
  for (const auto& h : hunks)
    for (const auto& [tag, text] : h.lines)
      if (tag == LineTag::del) ++n;
  return n;
}

namespace {

// Splits into lines without the trailing '\n'; keeps a final unterminated
// line. Line numbers are 1-based for error messages.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

[[noreturn]] void fail(std::size_t lineno, const std::string& msg) {
  std::ostringstream os;
  os << "unified diff, line " << lineno << ": " << msg;
  throw UsageError(os.str());
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// "a/some/path" -> "some/path"; "/dev/null" stays as-is.
std::string strip_ab_prefix(std::string_view s) {
  if (s == "/dev/null") return std::string(s);
  if (s.size() >= 2 && (s[0] == 'a' || s[0] == 'b') && s[1] == '/')
    return std::string(s.substr(2));
  return std::string(s);
}

// Path portion of a "--- "/"+++ " header, tab-terminated metadata dropped.
std::string header_path(std::string_view line) {
  std::string_view rest = line.substr(4);
  const std::size_t tab = rest.find('\t');
  if (tab != std::string_view::npos) rest = rest.substr(0, tab);
  return strip_ab_prefix(rest);
}

bool parse_long(std::string_view s, long& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// "-12,3" or "-12" (len defaults to 1).
bool parse_range(std::string_view s, char sign, long& start, long& len) {
  if (s.empty() || s[0] != sign) return false;
  s.remove_prefix(1);
  const std::size_t comma = s.find(',');
  if (comma == std::string_view::npos) {
    len = 1;
    return parse_long(s, start);
  }
  return parse_long(s.substr(0, comma), start) &&
         parse_long(s.substr(comma + 1), len);
}

// "@@ -a,b +c,d @@ optional context"
bool parse_hunk_header(std::string_view line, Hunk& h) {
  if (!starts_with(line, "@@ ")) return false;
  const std::size_t close = line.find(" @@", 3);
  if (close == std::string_view::npos) return false;
  std::string_view mid = line.substr(3, close - 3);
  const std::size_t space = mid.find(' ');
  if (space == std::string_view::npos) return false;
  return parse_range(mid.substr(0, space), '-', h.old_start, h.old_len) &&
         parse_range(mid.substr(space + 1), '+', h.new_start, h.new_len);
}

// Git metadata lines that may precede the ---/+++ pair of a file block.
bool is_git_noise(std::string_view line) {
  return starts_with(line, "diff --git ") || starts_with(line, "index ") ||
         starts_with(line, "old mode ") || starts_with(line, "new mode ") ||
         starts_with(line, "new file mode ") ||
         starts_with(line, "deleted file mode ") ||
         starts_with(line, "similarity index ") ||
         starts_with(line, "dissimilarity index ") ||
         starts_with(line, "copy from ") || starts_with(line, "copy to ");
}

// "Binary files a/x and b/y differ" -> (a/x, b/y)
bool parse_binary_line(std::string_view line, std::string& oldp,
                       std::string& newp) {
  static constexpr std::string_view kPrefix = "Binary files ";
  if (!starts_with(line, kPrefix) || !line.ends_with(" differ")) return false;
  std::string_view mid =
      line.substr(kPrefix.size(), line.size() - kPrefix.size() - 7);
  const std::size_t sep = mid.find(" and ");
  if (sep == std::string_view::npos) return false;
  oldp = strip_ab_prefix(mid.substr(0, sep));
  newp = strip_ab_prefix(mid.substr(sep + 5));
  return true;
}

}  // namespace

std::vector<FileChange> parse_unidiff(std::string_view text) {
  std::vector<FileChange> changes;
  const auto lines = split_lines(text);

  std::optional<std::string> pending_rename_from;
  std::optional<std::string> pending_rename_to;

  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string_view line = lines[i];
    const std::size_t lineno = i + 1;

    if (line.empty()) {
      ++i;
      continue;
    }
    if (starts_with(line, "rename from ")) {
      pending_rename_from = std::string(line.substr(12));
      ++i;
      continue;
    }
    if (starts_with(line, "rename to ")) {
      pending_rename_to = std::string(line.substr(10));
      ++i;
      continue;
    }
    if (is_git_noise(line)) {
      ++i;
      continue;
    }

    std::string binary_old, binary_new;
    if (parse_binary_line(line, binary_old, binary_new)) {
      FileChange fc;
      fc.is_binary = true;
      fc.is_new_file = binary_old == "/dev/null";
      fc.is_deleted_file = binary_new == "/dev/null";
      fc.path = fc.is_deleted_file ? binary_old : binary_new;
      if (!fc.is_new_file && !fc.is_deleted_file && binary_old != binary_new)
        fc.old_path = binary_old;
      pending_rename_from.reset();
      pending_rename_to.reset();
      changes.push_back(std::move(fc));
      ++i;
      continue;
    }

    if (!starts_with(line, "--- ")) {
      fail(lineno, "expected '--- ' file header, got: " + std::string(line));
    }
    if (i + 1 >= lines.size() || !starts_with(lines[i + 1], "+++ ")) {
      fail(lineno + 1, "missing '+++ ' header after '--- '");
    }
    const std::string old_path = header_path(line);
    const std::string new_path = header_path(lines[i + 1]);
    i += 2;

    FileChange fc;
    fc.is_new_file = old_path == "/dev/null";
    fc.is_deleted_file = new_path == "/dev/null";
    if (fc.is_new_file && fc.is_deleted_file)
      fail(lineno, "both sides are /dev/null");
    fc.path = fc.is_deleted_file ? old_path : new_path;
    if (pending_rename_from && pending_rename_to) {
      if (*pending_rename_from != *pending_rename_to)
        fc.old_path = *pending_rename_from;
    } else if (!fc.is_new_file && !fc.is_deleted_file &&
               old_path != new_path) {
      fc.old_path = old_path;
    }
    pending_rename_from.reset();
    pending_rename_to.reset();

    // Hunks follow until the next file header or end of input.
    bool saw_hunk = false;
    while (i < lines.size() && starts_with(lines[i], "@@")) {
      Hunk h;
      if (!parse_hunk_header(lines[i], h)) {
        fail(i + 1, "malformed hunk header: " + std::string(lines[i]));
      }
      const std::size_t header_lineno = i + 1;
      ++i;
      long need_old = h.old_len, need_new = h.new_len;
      while (need_old > 0 || need_new > 0) {
        if (i >= lines.size()) {
          fail(header_lineno, "diff ends in the middle of a hunk");
        }
        const std::string_view body = lines[i];
        if (starts_with(body, "\\")) {  // "\ No newline at end of file"
          fc.missing_newline = true;
          ++i;
          continue;
        }
        if (body.empty()) {
          // Some tools emit a bare empty line for an empty context line.
          h.lines.emplace_back(LineTag::context, "");
          --need_old;
          --need_new;
          ++i;
          continue;
        }
        const char tag = body[0];
        const std::string rest(body.substr(1));
        switch (tag) {
          case ' ':
            h.lines.emplace_back(LineTag::context, rest);
            --need_old;
            --need_new;
            break;
          case '+':
            h.lines.emplace_back(LineTag::add, rest);
            --need_new;
            break;
          case '-':
            h.lines.emplace_back(LineTag::del, rest);
            --need_old;
            break;
          default:
            fail(i + 1, "unexpected line inside hunk: " + std::string(body));
        }
        if (need_old < 0 || need_new < 0) {
          fail(i + 1, "hunk body overruns its declared lengths");
        }
        ++i;
      }
      // Trailing no-newline marker for the last line of the hunk.
      if (i < lines.size() && starts_with(lines[i], "\\")) {
        fc.missing_newline = true;
        ++i;
      }
      h.validate();
      saw_hunk = true;
      fc.hunks.push_back(std::move(h));
    }
    if (!saw_hunk && !fc.is_new_file && !fc.is_deleted_file) {
      // A header pair with no hunks is legal (mode-only change).
    }
    changes.push_back(std::move(fc));
  }
  return changes;
}

std::string render_unidiff(const std::vector<FileChange>& changes) {
  std::ostringstream os;
  for (const FileChange& fc : changes) {
    if (fc.is_binary) {
      const std::string oldp = fc.is_new_file
                                   ? "/dev/null"
                                   : "a/" + fc.old_path.value_or(fc.path);
      const std::string newp =
          fc.is_deleted_file ? "/dev/null" : "b/" + fc.path;
      os << "Binary files " << oldp << " and " << newp << " differ\n";
      continue;
    }
    if (fc.is_new_file) {
      os << "--- /dev/null\n";
    } else {
      os << "--- a/" << fc.old_path.value_or(fc.path) << "\n";
    }
    if (fc.is_deleted_file) {
      os << "+++ /dev/null\n";
    } else {
      os << "+++ b/" << fc.path << "\n";
    }
    for (std::size_t k = 0; k < fc.hunks.size(); ++k) {
      const Hunk& h = fc.hunks[k];
      h.validate();
      os << "@@ -" << h.old_start << "," << h.old_len << " +" << h.new_start
         << "," << h.new_len << " @@\n";
      for (const auto& [tag, text] : h.lines) {
        os << static_cast<char>(tag) << text << "\n";
      }
      if (fc.missing_newline && k + 1 == fc.hunks.size()) {
        os << "\\ No newline at end of file\n";
      }
    }
  }
  return os.str();
}

}  // namespace drs
