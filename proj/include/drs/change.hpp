#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace drs {

enum class LineTag : char { context = ' ', add = '+', del = '-' };

// One @@ -a,b +c,d @@ block of a unified diff, context lines included.
struct Hunk {
  long old_start = 0;
  long old_len = 0;
  long new_start = 0;
  long new_len = 0;
  std::vector<std::pair<LineTag, std::string>> lines;

  bool operator==(const Hunk&) const = default;

  // Throws std::runtime_error unless line tags add up to the declared
  // lengths: adds + context == new_len, deletes + context == old_len.
  void validate() const;
};

// Everything that happened to one file in one diff.
struct FileChange {
  std::string path;
  std::optional<std::string> old_path;  // set when the file was renamed
  bool is_new_file = false;
  bool is_deleted_file = false;
  bool is_binary = false;
  bool missing_newline = false;  // post-image has no trailing newline
  long file_size_after = 0;      // SLOC after the diff landed
  std::string language = "other";
  std::vector<Hunk> hunks;

  bool operator==(const FileChange&) const = default;

  std::vector<std::string> added_lines() const;
  std::vector<std::string> deleted_lines() const;
  long added_count() const;
  long deleted_count() const;
};

}  // namespace drs
