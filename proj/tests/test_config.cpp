#include "drs/config.hpp"

#include <fstream>
#include <string>

#include "doctest.h"
#include "drs/error.hpp"
#include "test_support.hpp"

using drs::Config;
using drs::config_from_json;
using drs::config_to_json;
using drs::default_config;

TEST_CASE("defaults are self-consistent and round trip") {
  const Config c = default_config();
  CHECK_NOTHROW(c.policy.validate());
  CHECK(c.features.languages.size() == 7);
  CHECK(c.resample.neg_per_pos == 5);
  CHECK(c.baseline.model == "random");
  CHECK(c.embed.pool == "maxpool");
  CHECK(c.extension_languages.at(".py") == "python");
  CHECK(c.extension_languages.at(".cc") == "cpp");
  CHECK(c.extension_languages.at(".ts") == "javascript");

  const nlohmann::json j = config_to_json(c);
  const Config back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.features.languages == c.features.languages);
  CHECK(back.policy.zones == c.policy.zones);
  CHECK(back.escalation.reasons == c.escalation.reasons);
}

TEST_CASE("policy serializes as an ordered array") {
  const nlohmann::json j = config_to_json(default_config());
  REQUIRE(j.at("policy").is_array());
  CHECK(j.at("policy")[0].at("zone") == "green");
  CHECK(j.at("policy")[0].at("g") == 0.0);
  CHECK(j.at("policy")[3].at("zone") == "red");
  // Re-ordered zones fail validation on load (fractions must increase).
  nlohmann::json bad = j;
  std::swap(bad["policy"][1], bad["policy"][3]);
  CHECK_THROWS_AS(config_from_json(bad), drs::UsageError);
}

TEST_CASE("unknown keys are rejected at several depths") {
  const nlohmann::json base = config_to_json(default_config());

  nlohmann::json top = base;
  top["surprise"] = 1;
  CHECK_THROWS_WITH_AS(config_from_json(top),
                       doctest::Contains("unknown key 'surprise'"),
                       drs::UsageError);

  nlohmann::json paths = base;
  paths["paths"]["cache_dir"] = "/tmp";
  CHECK_THROWS_WITH_AS(config_from_json(paths),
                       doctest::Contains("unknown key 'cache_dir'"),
                       drs::UsageError);

  nlohmann::json pol = base;
  pol["policy"][0]["color"] = "verde";
  CHECK_THROWS_WITH_AS(config_from_json(pol),
                       doctest::Contains("unknown key 'color'"),
                       drs::UsageError);

  nlohmann::json lg = base;
  lg["logreg"]["momentum"] = 0.9;
  CHECK_THROWS_WITH_AS(config_from_json(lg),
                       doctest::Contains("unknown key 'momentum'"),
                       drs::UsageError);
}

TEST_CASE("split blocks are validated and optional") {
  const Config c = default_config();
  CHECK_FALSE(c.split.has_value());
  CHECK_THROWS_WITH_AS(drs::require_split(c),
                       doctest::Contains("needs a 'split' block"),
                       drs::UsageError);

  nlohmann::json j = config_to_json(c);
  j["split"] = {{"train_end", 100}, {"val_end", 200}, {"test_end", 300}};
  const Config with = config_from_json(j);
  REQUIRE(with.split.has_value());
  CHECK(drs::require_split(with).val_end == 200);

  j["split"] = {{"train_end", 300}, {"val_end", 200}, {"test_end", 400}};
  CHECK_THROWS_AS(config_from_json(j), drs::UsageError);
}

TEST_CASE("value validation catches out-of-range settings") {
  const nlohmann::json base = config_to_json(default_config());

  nlohmann::json langs = base;
  langs["languages"] = {"cpp", "cpp"};
  CHECK_THROWS_AS(config_from_json(langs), drs::UsageError);

  nlohmann::json ext = base;
  ext["extension_languages"]["py"] = "python";  // missing the dot
  CHECK_THROWS_AS(config_from_json(ext), drs::UsageError);

  nlohmann::json cplx = base;
  cplx["complexity_mode"] = "halstead";
  CHECK_THROWS_AS(config_from_json(cplx), drs::UsageError);

  nlohmann::json pool = base;
  pool["embed"]["pool"] = "sumpool";
  CHECK_THROWS_AS(config_from_json(pool), drs::UsageError);

  nlohmann::json res = base;
  res["resample"]["neg_per_pos"] = 0;
  CHECK_THROWS_AS(config_from_json(res), drs::UsageError);

  nlohmann::json tr = base;
  tr["baseline"]["trials"] = 0;
  CHECK_THROWS_AS(config_from_json(tr), drs::UsageError);
}

TEST_CASE("org mapping picks the longest matching prefix") {
  Config c = default_config();
  c.org_map = {{"svc/", "orgA"}, {"svc/payments/", "orgPay"}};
  CHECK(drs::org_of_path(c, "svc/payments/api.cc") == "orgPay");
  CHECK(drs::org_of_path(c, "svc/search/idx.cc") == "orgA");
  CHECK(drs::org_of_path(c, "tools/x.cc") == "default");
  CHECK(drs::org_of_path(c, "") == "default");
}

TEST_CASE("language lookup keys on the final extension") {
  const Config c = default_config();
  CHECK(drs::language_of_path(c, "a/b/c.py") == "python");
  CHECK(drs::language_of_path(c, "a/b/c.test.ts") == "javascript");
  CHECK(drs::language_of_path(c, "a/b/Makefile") == "other");
  CHECK(drs::language_of_path(c, "a.py/readme") == "other");  // dot in dir
  CHECK(drs::language_of_path(c, "x.rs") == "rust");
  CHECK(drs::language_of_path(c, "go.mod") == "other");
}

TEST_CASE("config files load with named errors") {
  const std::string path = testgen::scratch_dir() + "/drs_test_config.json";
  {
    std::ofstream out(path);
    out << config_to_json(default_config()).dump(2);
  }
  CHECK_NOTHROW(drs::load_config(path));
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(drs::load_config(path), drs::UsageError);
  std::remove(path.c_str());
  CHECK_THROWS_WITH_AS(drs::load_config(path),
                       doctest::Contains(path.c_str()), drs::UsageError);
}
