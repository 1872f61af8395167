#include <gtest/gtest.h>

#include <algorithm>

#include "hookbench/config.hpp"
#include "test_support.hpp"

using namespace hookbench;
using nlohmann::json;

namespace {

json minimal() { return json::parse(R"({"conditions": [{"label": "baseline"}, {"label": "hooked"}]})"); }

std::vector<std::string> problems_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::ranges::any_of(problems, [&](const auto& p) { return p.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
  const auto cfg = parse_config(minimal());
  EXPECT_EQ(cfg.warmup_count, 4000u);
  EXPECT_DOUBLE_EQ(cfg.alpha, 0.05);
  EXPECT_EQ(cfg.load.total_requests, 50000u);
  EXPECT_FALSE(cfg.load.reconnect_per_request);
  ASSERT_EQ(cfg.conditions.size(), 2u);
  EXPECT_EQ(cfg.conditions[0].descriptor.hook_layer, HookLayer::none);
  EXPECT_EQ(cfg.conditions[0].descriptor.environment, "local");
  EXPECT_EQ(cfg.conditions[0].sut.delay_us, 0u);
}

TEST(Config, WarmupMustBeBelowRequestCount) {
  auto j = minimal();
  j["load"] = json{{"total_requests", 100}};
  j["warmup_count"] = 100;
  EXPECT_TRUE(mentions(problems_of(j), "warmup_count"));
}

TEST(Config, UnknownFieldsAreNamed) {
  auto j = minimal();
  j["bogus"] = 1;
  j["conditions"][1]["sut"] = json{{"port", 9000}, {"turbo", true}};
  const auto p = problems_of(j);
  EXPECT_TRUE(mentions(p, "unknown field 'bogus'"));
  EXPECT_TRUE(mentions(p, "unknown field 'conditions[1].sut.turbo'"));
}

TEST(Config, AllProblemsReportedTogether) {
  auto j = minimal();
  j["alpha"] = 1.5;
  j["load"] = json{{"total_requests", 0}};
  j["conditions"][0]["label"] = "bad label!";
  const auto p = problems_of(j);
  EXPECT_GE(p.size(), 3u);
  EXPECT_TRUE(mentions(p, "alpha"));
  EXPECT_TRUE(mentions(p, "total_requests"));
  EXPECT_TRUE(mentions(p, "label"));
}

TEST(Config, ExactlyTwoConditions) {
  auto j = minimal();
  j["conditions"].push_back({{"label", "third"}});
  EXPECT_TRUE(mentions(problems_of(j), "exactly two"));
  j["conditions"] = json::array();
  EXPECT_TRUE(mentions(problems_of(j), "exactly two"));
}

TEST(Config, DuplicateLabelsRejected) {
  auto j = minimal();
  j["conditions"][1]["label"] = "baseline";
  EXPECT_TRUE(mentions(problems_of(j), "duplicate"));
}

TEST(Config, HookImpliesLibraryLayer) {
  auto j = minimal();
  j["conditions"][1]["hook"] = json{{"library", "/opt/libhook.so"}, {"keywords", {"attack", "evil"}}};
  const auto cfg = parse_config(j);
  ASSERT_TRUE(cfg.conditions[1].hook.has_value());
  EXPECT_EQ(cfg.conditions[1].descriptor.hook_layer, HookLayer::library);
  EXPECT_EQ(cfg.conditions[1].hook->keywords, (std::vector<std::string>{"attack", "evil"}));

  j["conditions"][1]["hook_layer"] = "kernel";
  EXPECT_TRUE(mentions(problems_of(j), "library-layer"));
}

TEST(Config, HookNeedsLibraryAndCleanKeywords) {
  auto j = minimal();
  j["conditions"][1]["hook"] = json{{"keywords", {"a,b", ""}}};
  const auto p = problems_of(j);
  EXPECT_TRUE(mentions(p, "library"));
  EXPECT_TRUE(mentions(p, "','"));
  EXPECT_TRUE(mentions(p, "non-empty"));
}

TEST(Config, TypeAndRangeErrors) {
  auto j = minimal();
  j["conditions"][0]["sut"] = json{{"port", 70000}, {"delay_us", -5}};
  j["plots"] = "yes";
  const auto p = problems_of(j);
  EXPECT_TRUE(mentions(p, "port"));
  EXPECT_TRUE(mentions(p, "delay_us"));
  EXPECT_TRUE(mentions(p, "plots"));
}

TEST(Config, SignedAndUnsignedIntegersAccepted) {
  auto j = minimal();
  j["load"] = json{{"total_requests", std::int64_t{100}}};
  j["warmup_count"] = std::uint64_t{10};
  const auto cfg = parse_config(j);
  EXPECT_EQ(cfg.load.total_requests, 100u);
  EXPECT_EQ(cfg.warmup_count, 10u);
}

TEST(Config, KeywordEveryNeedsKeyword) {
  auto j = minimal();
  j["load"] = json{{"keyword_every", 3}};
  EXPECT_TRUE(mentions(problems_of(j), "requires 'keyword'"));
}

TEST(Config, CustomEnvironmentKeptVerbatim) {
  auto j = minimal();
  j["conditions"][0]["environment"] = "eks-pod";
  j["conditions"][1]["environment"] = "my laptop on battery";
  const auto cfg = parse_config(j);
  EXPECT_TRUE(is_known_environment(cfg.conditions[0].descriptor.environment));
  EXPECT_FALSE(is_known_environment(cfg.conditions[1].descriptor.environment));
}

TEST(Config, LoadFromFile) {
  const auto dir = testsupport::scratch_dir("config");
  io::write_file(dir / "ok.json", minimal().dump());
  io::write_file(dir / "broken.json", "{ not json");
  EXPECT_EQ(load_config(dir / "ok.json").conditions.size(), 2u);
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Config, EchoMakesDefaultsExplicit) {
  const auto echo = to_json(parse_config(minimal()));
  EXPECT_EQ(echo["warmup_count"], 4000);
  EXPECT_EQ(echo["alpha"], 0.05);
  EXPECT_EQ(echo["conditions"][1]["hook_layer"], "none");
  // The echo parses back to an equivalent config.
  nlohmann::json plain = nlohmann::json::parse(echo.dump());
  const auto again = parse_config(plain);
  EXPECT_EQ(to_json(again), echo);
}
