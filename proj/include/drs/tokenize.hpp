#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace drs {

// Shared tokenizer for every text-consuming model: lowercased runs of
// [A-Za-z0-9_]. Deterministic and locale-independent.
std::vector<std::string> tokenize(std::string_view text);

// Number of tokens without materializing them (used for length budgets).
std::size_t count_tokens(std::string_view text);

}  // namespace drs
