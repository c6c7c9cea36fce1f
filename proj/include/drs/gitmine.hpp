#pragma once

#include <string>

#include "drs/config.hpp"
#include "drs/corpus.hpp"

namespace drs {

// Builds a corpus from a local git checkout: one record per non-merge
// commit, patches parsed into file changes, file sizes tracked across
// history. labels_path may be empty (every record defaults to no incident);
// the file format is one "<commit-hash> <0|1>" pair per line. Labels naming
// unknown commits warn on stderr and are ignored.
Corpus mine_git(const std::string& repo_path, const std::string& labels_path,
                const Config& cfg);

}  // namespace drs
