#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "drs/change.hpp"

namespace drs {

// Parses unified-diff text (plain or git-style) into file changes.
// Understands /dev/null markers for creations/deletions, rename headers,
// "Binary files ... differ" stubs, and trailing "\ No newline at end of
// file" markers. Malformed input raises UsageError naming the line.
std::vector<FileChange> parse_unidiff(std::string_view text);

// Canonical unified-diff rendering. parse_unidiff(render_unidiff(cs)) == cs
// for any well-formed changes, and the output is byte-stable.
std::string render_unidiff(const std::vector<FileChange>& changes);

}  // namespace drs
