#pragma once

#include <cstdint>
#include <string>

#include "drs/corpus.hpp"

namespace drs {

// Knobs for the seeded corpus generator. Identical configs produce
// byte-identical corpora.
struct SyntheticConfig {
  std::uint64_t seed = 1;
  std::size_t n = 1000;
  double sev_rate = 0.01;        // target mean incident probability
  double signal_strength = 1.0;  // 0 = labels carry no signal at all
  std::size_t n_authors = 50;
  std::size_t n_files = 200;
  std::int64_t start_ts = 1767225600;  // 2026-01-01T00:00:00Z
  std::int64_t end_ts = 1782777600;    // 2026-07-01T00:00:00Z
  std::string org = "orgA";
};

// Draws diffs whose true incident probability follows a logistic model over
// latent churn, diffusion, author-experience, and risky-file terms, scaled
// by signal_strength; the intercept is calibrated so the mean probability
// equals sev_rate exactly. The same latent signal is planted in the text
// (marker tokens in titles and added lines) so content models can learn it.
// generator_truth records each diff's true probability.
Corpus generate_synthetic(const SyntheticConfig& cfg);

// Marker vocabularies the generator plants; exposed for tests.
const std::vector<std::string>& risky_marker_tokens();
const std::vector<std::string>& benign_marker_tokens();

}  // namespace drs
