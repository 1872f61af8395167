#pragma once

// Experiment description loaded from JSON. Validation collects every problem
// before failing so a config can be fixed in one pass.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hookbench/error.hpp"
#include "hookbench/samples_csv.hpp"
#include "hookbench/stats.hpp"
#include "hookbench/sut.hpp"

namespace hookbench {

using ojson = nlohmann::ordered_json;

/// Where a hook is injected in the software stack. Only `library` hooks are
/// implemented (preloaded shared object); the rest are labels.
enum class HookLayer { application, runtime, library, kernel, none };

inline std::string_view to_string(HookLayer layer) {
  switch (layer) {
    case HookLayer::application: return "application";
    case HookLayer::runtime: return "runtime";
    case HookLayer::library: return "library";
    case HookLayer::kernel: return "kernel";
    case HookLayer::none: return "none";
  }
  return "none";
}

inline std::optional<HookLayer> parse_hook_layer(std::string_view s) {
  for (auto l : {HookLayer::application, HookLayer::runtime, HookLayer::library, HookLayer::kernel,
                 HookLayer::none}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

/// Known deployment environments; anything else is kept verbatim as custom text.
inline bool is_known_environment(std::string_view s) {
  return s == "docker" || s == "kind" || s == "eks-pod" || s == "eks-nodes" || s == "local";
}

struct HookConfig {
  std::filesystem::path library;  // preloaded shared object
  std::vector<std::string> keywords;
  bool sockets_only = false;
  std::optional<std::filesystem::path> timing_path;
  std::optional<int> block_errno;
};

struct ConditionDescriptor {
  std::string label;
  std::string environment = "local";
  HookLayer hook_layer = HookLayer::none;
  std::string notes;
};

struct Condition {
  ConditionDescriptor descriptor;
  sut::SutConfig sut;
  std::optional<HookConfig> hook;
};

struct LoadSettings {
  std::string host = "127.0.0.1";
  std::uint64_t total_requests = 50000;
  std::optional<std::string> keyword;
  std::optional<std::uint64_t> keyword_every;
  bool reconnect_per_request = false;
};

struct ExperimentConfig {
  std::vector<Condition> conditions;
  LoadSettings load;
  std::size_t warmup_count = stats::kDefaultWarmup;
  double alpha = stats::kDefaultAlpha;
  std::filesystem::path output_dir = "hookbench-out";
  bool plots = true;
  std::optional<std::filesystem::path> sut_binary;  // defaults to the running executable
  std::chrono::milliseconds resource_interval{100};
  std::chrono::milliseconds readiness_timeout{10000};
};

inline bool is_safe_label(std::string_view label) {
  if (label.empty() || label.size() > 64) return false;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return label != "." && label != "..";
}

namespace detail {

// Typed field access that records problems instead of throwing.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string path, std::vector<std::string>& problems,
               std::set<std::string> allowed)
      : obj_(obj), path_(std::move(path)), problems_(problems) {
    if (!obj_.is_object()) {
      problems_.push_back(where() + "must be an object");
      valid_ = false;
      return;
    }
    for (const auto& [key, _] : obj_.items()) {
      if (!allowed.contains(key)) problems_.push_back("unknown field '" + qualified(key) + "'");
    }
  }

  bool valid() const { return valid_; }
  bool has(const std::string& key) const { return valid_ && obj_.contains(key) && !obj_.at(key).is_null(); }
  const nlohmann::json& at(const std::string& key) const { return obj_.at(key); }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected integer");
        // Parsed documents store non-negative integers as unsigned; values
        // built in code may be signed either way.
        const bool negative = !v.is_number_unsigned() && v.get<std::int64_t>() < 0;
        if (negative && std::is_unsigned_v<T>) throw std::invalid_argument("must be >= 0");
        if (negative && v.get<std::int64_t>() < static_cast<std::int64_t>(std::numeric_limits<T>::min())) {
          throw std::invalid_argument("out of range");
        }
        if (!negative && v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
          throw std::invalid_argument("out of range");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected number");
      } else {
        if (!v.is_string()) throw std::invalid_argument("expected string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      problems_.push_back("field '" + qualified(key) + "': " + e.what());
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    T value{};
    const auto before = problems_.size();
    get(key, value);
    if (problems_.size() == before) out = value;
  }

  void problem(const std::string& key, const std::string& text) {
    problems_.push_back("field '" + qualified(key) + "': " + text);
  }

 private:
  std::string where() const { return path_.empty() ? "config " : "'" + path_ + "' "; }

  const nlohmann::json& obj_;
  std::string path_;
  std::vector<std::string>& problems_;
  bool valid_ = true;
};

inline std::optional<HookConfig> read_hook(const nlohmann::json& j, const std::string& path,
                                           std::vector<std::string>& problems) {
  ObjectReader r(j, path, problems, {"library", "keywords", "sockets_only", "timing_path", "block_errno"});
  if (!r.valid()) return std::nullopt;
  HookConfig hook;
  std::string library;
  r.get("library", library);
  if (library.empty()) problems.push_back("field '" + r.qualified("library") + "' is required");
  hook.library = library;
  if (r.has("keywords")) {
    const auto& kws = r.at("keywords");
    if (!kws.is_array()) {
      r.problem("keywords", "expected array of strings");
    } else {
      for (const auto& kw : kws) {
        if (!kw.is_string() || kw.get<std::string>().empty()) {
          r.problem("keywords", "keywords must be non-empty strings");
        } else if (kw.get<std::string>().find(',') != std::string::npos) {
          r.problem("keywords", "keywords cannot contain ','");
        } else {
          hook.keywords.push_back(kw.get<std::string>());
        }
      }
    }
  }
  r.get("sockets_only", hook.sockets_only);
  std::optional<std::string> timing;
  r.get("timing_path", timing);
  if (timing) hook.timing_path = *timing;
  r.get("block_errno", hook.block_errno);
  if (hook.block_errno && *hook.block_errno <= 0) r.problem("block_errno", "must be a positive errno value");
  return hook;
}

}  // namespace detail

/// Parses and validates an experiment config. Throws ConfigError listing every problem.
inline ExperimentConfig parse_config(const nlohmann::json& root) {
  std::vector<std::string> problems;
  ExperimentConfig cfg;
  detail::ObjectReader r(root, "", problems,
                         {"conditions", "load", "warmup_count", "alpha", "output_dir", "plots", "sut_binary",
                          "resource_interval_ms", "readiness_timeout_ms"});
  if (!r.valid()) throw ConfigError(problems);

  if (!r.has("conditions") || !r.at("conditions").is_array()) {
    problems.push_back("field 'conditions' is required and must be an array");
  } else {
    const auto& conds = r.at("conditions");
    if (conds.size() != 2) {
      problems.push_back("exactly two conditions are required per hypothesis test (got " +
                         std::to_string(conds.size()) + ")");
    }
    std::set<std::string> labels;
    for (std::size_t i = 0; i < conds.size(); ++i) {
      const auto path = "conditions[" + std::to_string(i) + "]";
      detail::ObjectReader c(conds[i], path, problems,
                             {"label", "environment", "hook_layer", "notes", "sut", "hook"});
      if (!c.valid()) continue;
      Condition cond;
      c.get("label", cond.descriptor.label);
      if (!is_safe_label(cond.descriptor.label)) {
        c.problem("label", "required; 1-64 characters from [A-Za-z0-9._-]");
      } else if (!labels.insert(cond.descriptor.label).second) {
        c.problem("label", "duplicate label '" + cond.descriptor.label + "'");
      }
      c.get("environment", cond.descriptor.environment);
      c.get("notes", cond.descriptor.notes);
      if (c.has("sut")) {
        detail::ObjectReader s(c.at("sut"), path + ".sut", problems, {"port", "delay_us", "max_connections"});
        if (s.valid()) {
          s.get("port", cond.sut.listen_port);
          s.get("delay_us", cond.sut.delay_us);
          s.get("max_connections", cond.sut.max_connections);
          if (cond.sut.listen_port == 0) s.problem("port", "must be in 1..65535");
          if (cond.sut.max_connections == 0) s.problem("max_connections", "must be positive");
        }
      }
      if (c.has("hook")) cond.hook = detail::read_hook(c.at("hook"), path + ".hook", problems);
      const HookLayer implied = cond.hook ? HookLayer::library : HookLayer::none;
      cond.descriptor.hook_layer = implied;
      if (c.has("hook_layer")) {
        std::string layer;
        c.get("hook_layer", layer);
        const auto parsed = parse_hook_layer(layer);
        if (!parsed) {
          c.problem("hook_layer", "unknown layer '" + layer + "'");
        } else if (cond.hook && *parsed != HookLayer::library) {
          c.problem("hook_layer", "a preloaded hook is a library-layer hook");
        } else {
          cond.descriptor.hook_layer = *parsed;
        }
      }
      cfg.conditions.push_back(std::move(cond));
    }
  }

  if (r.has("load")) {
    detail::ObjectReader l(r.at("load"), "load", problems,
                           {"host", "total_requests", "keyword", "keyword_every", "reconnect_per_request"});
    if (l.valid()) {
      l.get("host", cfg.load.host);
      l.get("total_requests", cfg.load.total_requests);
      l.get("keyword", cfg.load.keyword);
      l.get("keyword_every", cfg.load.keyword_every);
      l.get("reconnect_per_request", cfg.load.reconnect_per_request);
      if (cfg.load.total_requests < 1) l.problem("total_requests", "must be >= 1");
      if (cfg.load.keyword_every && *cfg.load.keyword_every < 1) l.problem("keyword_every", "must be >= 1");
      if (cfg.load.keyword_every && !cfg.load.keyword) l.problem("keyword_every", "requires 'keyword'");
      if (cfg.load.host.empty()) l.problem("host", "must not be empty");
    }
  }

  r.get("warmup_count", cfg.warmup_count);
  r.get("alpha", cfg.alpha);
  std::string out_dir = cfg.output_dir.string();
  r.get("output_dir", out_dir);
  cfg.output_dir = out_dir;
  r.get("plots", cfg.plots);
  std::optional<std::string> sut_binary;
  r.get("sut_binary", sut_binary);
  if (sut_binary) cfg.sut_binary = *sut_binary;
  std::int64_t interval_ms = cfg.resource_interval.count();
  r.get("resource_interval_ms", interval_ms);
  cfg.resource_interval = std::chrono::milliseconds(interval_ms);
  std::int64_t readiness_ms = cfg.readiness_timeout.count();
  r.get("readiness_timeout_ms", readiness_ms);
  cfg.readiness_timeout = std::chrono::milliseconds(readiness_ms);

  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) problems.push_back("field 'alpha' must lie in (0, 1)");
  if (cfg.warmup_count >= cfg.load.total_requests) {
    problems.push_back("field 'warmup_count' (" + std::to_string(cfg.warmup_count) +
                       ") must be smaller than load.total_requests (" + std::to_string(cfg.load.total_requests) +
                       ")");
  }
  if (interval_ms <= 0) problems.push_back("field 'resource_interval_ms' must be positive");
  if (readiness_ms <= 0) problems.push_back("field 'readiness_timeout_ms' must be positive");
  if (cfg.output_dir.empty()) problems.push_back("field 'output_dir' must not be empty");

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  } catch (const RuntimeFailure& e) {
    throw ConfigError({e.what()});
  }
  return parse_config(root);
}

inline ojson to_json(const HookConfig& hook) {
  ojson j;
  j["library"] = hook.library.string();
  j["keywords"] = hook.keywords;
  j["sockets_only"] = hook.sockets_only;
  j["timing_path"] = hook.timing_path ? ojson(hook.timing_path->string()) : ojson();
  j["block_errno"] = hook.block_errno ? ojson(*hook.block_errno) : ojson();
  return j;
}

/// Normalized echo of a config (all defaults made explicit).
inline ojson to_json(const ExperimentConfig& cfg) {
  ojson j;
  ojson conds = ojson::array();
  for (const auto& c : cfg.conditions) {
    ojson cj;
    cj["label"] = c.descriptor.label;
    cj["environment"] = c.descriptor.environment;
    cj["hook_layer"] = to_string(c.descriptor.hook_layer);
    cj["notes"] = c.descriptor.notes;
    cj["sut"] = {{"port", c.sut.listen_port}, {"delay_us", c.sut.delay_us}, {"max_connections", c.sut.max_connections}};
    cj["hook"] = c.hook ? to_json(*c.hook) : ojson();
    conds.push_back(std::move(cj));
  }
  j["conditions"] = std::move(conds);
  j["load"] = {{"host", cfg.load.host},
               {"total_requests", cfg.load.total_requests},
               {"keyword", cfg.load.keyword ? ojson(*cfg.load.keyword) : ojson()},
               {"keyword_every", cfg.load.keyword_every ? ojson(*cfg.load.keyword_every) : ojson()},
               {"reconnect_per_request", cfg.load.reconnect_per_request}};
  j["warmup_count"] = cfg.warmup_count;
  j["alpha"] = cfg.alpha;
  j["output_dir"] = cfg.output_dir.string();
  j["plots"] = cfg.plots;
  j["sut_binary"] = cfg.sut_binary ? ojson(cfg.sut_binary->string()) : ojson();
  j["resource_interval_ms"] = cfg.resource_interval.count();
  j["readiness_timeout_ms"] = cfg.readiness_timeout.count();
  return j;
}

}  // namespace hookbench
