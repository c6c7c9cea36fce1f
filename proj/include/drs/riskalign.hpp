#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drs/corpus.hpp"
#include "drs/embed.hpp"
#include "drs/eval.hpp"

#include "json.hpp"

namespace drs {

inline constexpr const char* kRiskMarkerOpen = "[DRS]";
inline constexpr const char* kRiskMarkerClose = "[/DRS]";

// A classification example rephrased as a generation task: the input is
// wrapped in markers and the model is asked for the next token, which during
// training is the label character.
struct AnnotatedExample {
  std::string prompt;             // "[DRS]" + text + "[/DRS]"
  std::optional<char> label;      // '0' or '1'; present iff training example
};

AnnotatedExample annotate(const ModelInput& input, std::optional<bool> label);

// Resamples the (training) corpus to the configured class ratio, renders each
// record and wraps it in markers. Labels come from caused_sev.
std::vector<AnnotatedExample> build_sft_dataset(const Corpus& train,
                                                const ResampleConfig& resample,
                                                long max_tokens = 8192);

// Anything that can report a next-token distribution for a prompt. The map
// may be a sub-distribution (restricted to tokens of interest).
class NextTokenProvider {
 public:
  virtual ~NextTokenProvider() = default;
  virtual std::map<std::string, double> next_token_probs(
      const std::string& prompt) const = 0;
  virtual bool thread_safe() const { return false; }
};

struct AlignmentDiagnostics {
  double off_label_mass = 0.0;  // 1 - p("0") - p("1"), clamped to [0, 1]
  double p0 = 0.0;
  double p1 = 0.0;
};

struct RiskScore {
  double score = 0.0;  // in [0, 1]
  AlignmentDiagnostics diag;
};

// Scores one input by querying the provider for the label-token
// probabilities. normalized=true ranks by p1/(p0+p1); false ranks by raw p1.
RiskScore risk_score(const NextTokenProvider& provider,
                     const ModelInput& input, bool normalized = true);

struct AlignConfig {
  double lr = 1.0;
  double l2 = 1e-4;
  int epochs = 200;
};

// Desk-scale stand-in for a fine-tuned LLM: a logistic bag-of-tokens head
// over the label vocabulary {"0", "1"}. Immutable after training and safe to
// query from multiple threads.
class TokenBagAlignedModel final : public NextTokenProvider {
 public:
  std::string model_id;
  long max_tokens = 8192;  // render budget used when scoring records
  std::vector<std::string> vocab;  // sorted, unique
  std::vector<double> weights;     // parallel to vocab
  double intercept = 0.0;
  AlignConfig train_meta;
  std::vector<double> epoch_losses;  // loss before each epoch, then final

  std::map<std::string, double> next_token_probs(
      const std::string& prompt) const override;
  bool thread_safe() const override { return true; }

  // Probability of the "1" label for a prompt (sigmoid of the bag logit).
  double p1_of_prompt(const std::string& prompt) const;
  double score_record(const DiffRecord& d) const;
};

TokenBagAlignedModel train_aligned_model(
    const std::vector<AnnotatedExample>& dataset, const AlignConfig& cfg = {},
    const std::string& model_id = "riskalign", long max_tokens = 8192);

nlohmann::json riskalign_to_json(const TokenBagAlignedModel& m);
TokenBagAlignedModel riskalign_from_json(const nlohmann::json& j);

}  // namespace drs
