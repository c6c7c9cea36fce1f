#include "drs/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "drs/error.hpp"

namespace drs {

namespace {

void check_keys(const nlohmann::json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw UsageError("config: " + where + " must be an object");
  for (const auto& [key, unused] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      throw UsageError("config: unknown key '" + key + "' in " + where);
  }
}

std::vector<std::string> string_list(const nlohmann::json& j,
                                     const std::string& where) {
  if (!j.is_array())
    throw UsageError("config: " + where + " must be an array of strings");
  std::vector<std::string> out;
  for (const nlohmann::json& v : j) {
    if (!v.is_string())
      throw UsageError("config: " + where + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

Config default_config() {
  Config c;
  c.extension_languages = {
      {".c", "cpp"},     {".cc", "cpp"},   {".cpp", "cpp"},
      {".cxx", "cpp"},   {".h", "cpp"},    {".hpp", "cpp"},
      {".py", "python"}, {".java", "java"},
      {".js", "javascript"}, {".jsx", "javascript"},
      {".ts", "javascript"}, {".tsx", "javascript"},
      {".go", "go"},     {".rs", "rust"},  {".php", "php"},
  };
  return c;
}

nlohmann::json config_to_json(const Config& c) {
  nlohmann::json policy = nlohmann::json::array();
  for (const auto& [zone, g] : c.policy.zones)
    policy.push_back({{"zone", zone}, {"g", g}});
  nlohmann::json org_map = nlohmann::json::array();
  for (const auto& [prefix, org] : c.org_map)
    org_map.push_back({{"prefix", prefix}, {"org", org}});
  nlohmann::json j{
      {"paths",
       {{"corpus", c.paths.corpus},
        {"models_dir", c.paths.models_dir},
        {"logs_dir", c.paths.logs_dir}}},
      {"languages", c.features.languages},
      {"extension_languages", c.extension_languages},
      {"critical_prefixes", c.features.critical_prefixes},
      {"complexity_mode", c.features.complexity_mode},
      {"org_map", std::move(org_map)},
      {"policy", std::move(policy)},
      {"resample",
       {{"neg_per_pos", c.resample.neg_per_pos}, {"seed", c.resample.seed}}},
      {"logreg",
       {{"l2", c.logreg.l2},
        {"lr", c.logreg.lr},
        {"epochs", c.logreg.epochs},
        {"seed", c.logreg.seed}}},
      {"mlp",
       {{"lr", c.mlp.lr},
        {"epochs", c.mlp.epochs},
        {"batch_size", c.mlp.batch_size},
        {"l2", c.mlp.l2},
        {"seed", c.mlp.seed}}},
      {"riskalign",
       {{"lr", c.riskalign.lr},
        {"l2", c.riskalign.l2},
        {"epochs", c.riskalign.epochs}}},
      {"embed",
       {{"seed", c.embed.seed},
        {"dim", c.embed.dim},
        {"pool", c.embed.pool},
        {"max_tokens", c.embed.max_tokens},
        {"provider", c.embed.provider}}},
      {"next_token_provider", c.next_token_provider},
      {"baseline",
       {{"model", c.baseline.model},
        {"trials", c.baseline.trials},
        {"seed", c.baseline.seed}}},
      {"escalation",
       {{"reasons", c.escalation.reasons}, {"log", c.escalation.log}}},
  };
  if (c.split.has_value()) {
    j["split"] = {{"train_end", c.split->train_end},
                  {"val_end", c.split->val_end},
                  {"test_end", c.split->test_end}};
  }
  return j;
}

Config config_from_json(const nlohmann::json& j) {
  check_keys(j, "top level",
             {"paths", "languages", "extension_languages",
              "critical_prefixes", "complexity_mode", "org_map", "policy",
              "split", "resample", "logreg", "mlp", "riskalign", "embed",
              "next_token_provider", "baseline", "escalation"});
  Config c = default_config();
  if (j.contains("paths")) {
    const nlohmann::json& p = j["paths"];
    check_keys(p, "paths", {"corpus", "models_dir", "logs_dir"});
    c.paths.corpus = p.value("corpus", "");
    c.paths.models_dir = p.value("models_dir", "");
    c.paths.logs_dir = p.value("logs_dir", "");
  }
  if (j.contains("languages")) {
    c.features.languages = string_list(j["languages"], "languages");
    if (c.features.languages.empty())
      throw UsageError("config: languages must not be empty");
    std::set<std::string> seen;
    for (const std::string& l : c.features.languages) {
      if (l.empty()) throw UsageError("config: empty language name");
      if (!seen.insert(l).second)
        throw UsageError("config: duplicate language '" + l + "'");
    }
  }
  if (j.contains("extension_languages")) {
    const nlohmann::json& e = j["extension_languages"];
    if (!e.is_object())
      throw UsageError("config: extension_languages must be an object");
    c.extension_languages.clear();
    for (const auto& [ext, lang] : e.items()) {
      if (ext.empty() || ext[0] != '.')
        throw UsageError("config: extension '" + ext +
                         "' must start with a dot");
      if (!lang.is_string())
        throw UsageError("config: language for '" + ext +
                         "' must be a string");
      c.extension_languages[ext] = lang.get<std::string>();
    }
  }
  if (j.contains("critical_prefixes"))
    c.features.critical_prefixes =
        string_list(j["critical_prefixes"], "critical_prefixes");
  if (j.contains("complexity_mode")) {
    if (!j["complexity_mode"].is_string())
      throw UsageError("config: complexity_mode must be a string");
    c.features.complexity_mode = j["complexity_mode"].get<std::string>();
    if (c.features.complexity_mode != "branching" &&
        c.features.complexity_mode != "none")
      throw UsageError("config: complexity_mode must be 'branching' or "
                       "'none', got '" +
                       c.features.complexity_mode + "'");
  }
  if (j.contains("org_map")) {
    if (!j["org_map"].is_array())
      throw UsageError("config: org_map must be an array");
    c.org_map.clear();
    for (const nlohmann::json& row : j["org_map"]) {
      check_keys(row, "org_map entry", {"prefix", "org"});
      c.org_map.emplace_back(row.at("prefix").get<std::string>(),
                             row.at("org").get<std::string>());
    }
  }
  if (j.contains("policy")) {
    if (!j["policy"].is_array())
      throw UsageError(
          "config: policy must be an array of {zone, g} objects");
    c.policy.zones.clear();
    for (const nlohmann::json& row : j["policy"]) {
      check_keys(row, "policy entry", {"zone", "g"});
      c.policy.zones.emplace_back(row.at("zone").get<std::string>(),
                                  row.at("g").get<double>());
    }
    c.policy.validate();
  }
  if (j.contains("split")) {
    const nlohmann::json& s = j["split"];
    check_keys(s, "split", {"train_end", "val_end", "test_end"});
    SplitSpec spec;
    spec.train_end = s.at("train_end").get<std::int64_t>();
    spec.val_end = s.at("val_end").get<std::int64_t>();
    spec.test_end = s.at("test_end").get<std::int64_t>();
    if (!(spec.train_end < spec.val_end && spec.val_end < spec.test_end))
      throw UsageError(
          "config: split must satisfy train_end < val_end < test_end");
    c.split = spec;
  }
  if (j.contains("resample")) {
    const nlohmann::json& r = j["resample"];
    check_keys(r, "resample", {"neg_per_pos", "seed"});
    c.resample.neg_per_pos = r.value("neg_per_pos", c.resample.neg_per_pos);
    c.resample.seed = r.value("seed", c.resample.seed);
    if (c.resample.neg_per_pos == 0)
      throw UsageError("config: resample.neg_per_pos must be positive");
  }
  if (j.contains("logreg")) {
    const nlohmann::json& r = j["logreg"];
    check_keys(r, "logreg", {"l2", "lr", "epochs", "seed"});
    c.logreg.l2 = r.value("l2", c.logreg.l2);
    c.logreg.lr = r.value("lr", c.logreg.lr);
    c.logreg.epochs = r.value("epochs", c.logreg.epochs);
    c.logreg.seed = r.value("seed", c.logreg.seed);
  }
  if (j.contains("mlp")) {
    const nlohmann::json& r = j["mlp"];
    check_keys(r, "mlp", {"lr", "epochs", "batch_size", "l2", "seed"});
    c.mlp.lr = r.value("lr", c.mlp.lr);
    c.mlp.epochs = r.value("epochs", c.mlp.epochs);
    c.mlp.batch_size = r.value("batch_size", c.mlp.batch_size);
    c.mlp.l2 = r.value("l2", c.mlp.l2);
    c.mlp.seed = r.value("seed", c.mlp.seed);
  }
  if (j.contains("riskalign")) {
    const nlohmann::json& r = j["riskalign"];
    check_keys(r, "riskalign", {"lr", "l2", "epochs"});
    c.riskalign.lr = r.value("lr", c.riskalign.lr);
    c.riskalign.l2 = r.value("l2", c.riskalign.l2);
    c.riskalign.epochs = r.value("epochs", c.riskalign.epochs);
  }
  if (j.contains("embed")) {
    const nlohmann::json& r = j["embed"];
    check_keys(r, "embed", {"seed", "dim", "pool", "max_tokens", "provider"});
    c.embed.seed = r.value("seed", c.embed.seed);
    c.embed.dim = r.value("dim", c.embed.dim);
    c.embed.pool = r.value("pool", c.embed.pool);
    c.embed.max_tokens = r.value("max_tokens", c.embed.max_tokens);
    if (r.contains("provider"))
      c.embed.provider = string_list(r["provider"], "embed.provider");
    pool_from_name(c.embed.pool);  // validates the name
    if (c.embed.dim == 0)
      throw UsageError("config: embed.dim must be positive");
    if (c.embed.max_tokens <= 0)
      throw UsageError("config: embed.max_tokens must be positive");
  }
  if (j.contains("next_token_provider"))
    c.next_token_provider =
        string_list(j["next_token_provider"], "next_token_provider");
  if (j.contains("baseline")) {
    const nlohmann::json& r = j["baseline"];
    check_keys(r, "baseline", {"model", "trials", "seed"});
    c.baseline.model = r.value("model", c.baseline.model);
    c.baseline.trials = r.value("trials", c.baseline.trials);
    c.baseline.seed = r.value("seed", c.baseline.seed);
    if (c.baseline.trials <= 0)
      throw UsageError("config: baseline.trials must be positive");
  }
  if (j.contains("escalation")) {
    const nlohmann::json& r = j["escalation"];
    check_keys(r, "escalation", {"reasons", "log"});
    if (r.contains("reasons"))
      c.escalation.reasons =
          string_list(r["reasons"], "escalation.reasons");
    c.escalation.log = r.value("log", c.escalation.log);
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

SplitSpec require_split(const Config& c) {
  if (!c.split.has_value())
    throw UsageError(
        "this command needs a 'split' block (train_end/val_end/test_end) in "
        "the config");
  return *c.split;
}

std::string org_of_path(const Config& c, const std::string& path) {
  std::string best_org = "default";
  std::size_t best_len = 0;
  bool found = false;
  for (const auto& [prefix, org] : c.org_map) {
    if (path.rfind(prefix, 0) == 0 &&
        (!found || prefix.size() > best_len)) {
      best_org = org;
      best_len = prefix.size();
      found = true;
    }
  }
  return best_org;
}

std::string language_of_path(const Config& c, const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash))
    return "other";
  auto it = c.extension_languages.find(path.substr(dot));
  return it == c.extension_languages.end() ? "other" : it->second;
}

}  // namespace drs
