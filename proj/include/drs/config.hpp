#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drs/embed.hpp"
#include "drs/eval.hpp"
#include "drs/features.hpp"
#include "drs/gating.hpp"
#include "drs/logreg.hpp"
#include "drs/riskalign.hpp"

#include "json.hpp"

namespace drs {

struct PathsConfig {
  std::string corpus;      // default corpus file; flags override
  std::string models_dir;  // where model files land unless --out is given
  std::string logs_dir;    // where decision/escalation logs land
};

struct BaselineConfig {
  std::string model = "random";
  int trials = 200;
  std::uint64_t seed = 17;
};

struct EmbedConfig {
  std::uint64_t seed = 9;
  std::size_t dim = 64;
  std::string pool = "maxpool";
  long max_tokens = 8192;
  std::vector<std::string> provider;  // external command; empty = built-in
};

struct EscalationConfig {
  std::vector<std::string> reasons = {"hotfix", "sev_mitigation",
                                      "time_sensitive", "low_risk_override"};
  std::string log = "escalations.jsonl";
};

struct Config {
  PathsConfig paths;
  FeaturesConfig features;
  // Ingestion: file extension (with dot) -> language label.
  std::map<std::string, std::string> extension_languages;
  // Ingestion: path prefix -> org, longest prefix wins.
  std::vector<std::pair<std::string, std::string>> org_map;
  GatingPolicy policy = GatingPolicy::defaults();
  std::optional<SplitSpec> split;
  ResampleConfig resample;
  LogregConfig logreg;
  MlpConfig mlp;
  AlignConfig riskalign;
  EmbedConfig embed;
  std::vector<std::string> next_token_provider;  // external command
  BaselineConfig baseline;
  EscalationConfig escalation;
};

Config default_config();
nlohmann::json config_to_json(const Config& c);
// Strict: unknown keys anywhere are an error, as are out-of-range values.
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::string& path);

// The split block is optional in the file but some commands cannot run
// without it; this throws a usage error naming the missing block.
SplitSpec require_split(const Config& c);

// Longest matching prefix in org_map, or "default".
std::string org_of_path(const Config& c, const std::string& path);
// Language for a file path by extension, or "other".
std::string language_of_path(const Config& c, const std::string& path);

}  // namespace drs
