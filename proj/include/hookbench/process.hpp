#pragma once

// Child-process supervision for SUT instances, plus environment construction
// for preloaded-hook conditions.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "hookbench/config.hpp"
#include "hookbench/error.hpp"

extern char** environ;

namespace hookbench::process {

inline constexpr std::string_view kHookEnvPrefix = "HOOKBENCH_";
inline constexpr std::string_view kPreloadVar = "LD_PRELOAD";

inline std::vector<std::string> current_environment() {
  std::vector<std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) env.emplace_back(*e);
  return env;
}

inline bool is_hook_variable(std::string_view entry) {
  const auto name = entry.substr(0, entry.find('='));
  return name == kPreloadVar || name.starts_with(kHookEnvPrefix);
}

/// Environment for a SUT process: the base environment scrubbed of any
/// preload/hook variables, plus the hook's variables when one is configured.
inline std::vector<std::string> build_sut_environment(const std::vector<std::string>& base,
                                                      const std::optional<HookConfig>& hook) {
  std::vector<std::string> env;
  for (const auto& e : base) {
    if (!is_hook_variable(e)) env.push_back(e);
  }
  if (!hook) return env;
  env.push_back(std::string(kPreloadVar) + "=" + std::filesystem::absolute(hook->library).string());
  std::string keywords;
  for (std::size_t i = 0; i < hook->keywords.size(); ++i) {
    if (i) keywords += ',';
    keywords += hook->keywords[i];
  }
  env.push_back("HOOKBENCH_KEYWORDS=" + keywords);
  env.push_back(std::string("HOOKBENCH_SOCKETS_ONLY=") + (hook->sockets_only ? "1" : "0"));
  if (hook->timing_path) env.push_back("HOOKBENCH_TIMING_PATH=" + std::filesystem::absolute(*hook->timing_path).string());
  if (hook->block_errno) env.push_back("HOOKBENCH_BLOCK_ERRNO=" + std::to_string(*hook->block_errno));
  return env;
}

/// NUL-separated environment of a live process, as the kernel exposes it.
inline std::vector<std::string> read_process_environment(pid_t pid) {
  std::ifstream f("/proc/" + std::to_string(pid) + "/environ", std::ios::binary);
  if (!f) throw RuntimeFailure("cannot read environment of pid " + std::to_string(pid));
  std::vector<std::string> env;
  std::string entry;
  while (std::getline(f, entry, '\0')) {
    if (!entry.empty()) env.push_back(entry);
  }
  return env;
}

inline std::filesystem::path self_executable() { return std::filesystem::read_symlink("/proc/self/exe"); }

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot hash " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (f) {
    f.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

class ChildProcess {
 public:
  ChildProcess() = default;
  ChildProcess(ChildProcess&& o) noexcept
      : pid_(std::exchange(o.pid_, -1)), exit_status_(std::exchange(o.exit_status_, std::nullopt)) {}
  ChildProcess& operator=(ChildProcess&& o) noexcept {
    if (this != &o) {
      kill_now();
      pid_ = std::exchange(o.pid_, -1);
      exit_status_ = std::exchange(o.exit_status_, std::nullopt);
    }
    return *this;
  }
  ~ChildProcess() { kill_now(); }

  /// Starts argv[0] with the given environment; stdout and stderr go to `log_path`
  /// (or are inherited when empty).
  static ChildProcess spawn(const std::vector<std::string>& argv, const std::vector<std::string>& env,
                            const std::filesystem::path& log_path = {}) {
    std::vector<char*> cargv, cenv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    for (const auto& e : env) cenv.push_back(const_cast<char*>(e.c_str()));
    cenv.push_back(nullptr);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    const std::string log = log_path.string();
    if (!log.empty()) {
      posix_spawn_file_actions_addopen(&actions, 1, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      posix_spawn_file_actions_adddup2(&actions, 1, 2);
    }
    ChildProcess child;
    const int rc = ::posix_spawn(&child.pid_, argv.at(0).c_str(), &actions, nullptr, cargv.data(), cenv.data());
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
      child.pid_ = -1;
      throw RuntimeFailure("spawn " + argv.at(0) + ": " + std::string(std::strerror(rc)));
    }
    return child;
  }

  pid_t pid() const noexcept { return pid_; }

  bool running() {
    if (pid_ < 0 || exit_status_) return false;
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      exit_status_ = status;
      return false;
    }
    return r == 0;
  }

  /// SIGTERM, then SIGKILL after `grace`. Returns the raw wait status.
  int terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(5000)) {
    if (pid_ < 0) return -1;
    if (running()) {
      ::kill(pid_, SIGTERM);
      const auto deadline = std::chrono::steady_clock::now() + grace;
      while (running() && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
      if (running()) {
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
        exit_status_ = status;
      }
    }
    return exit_status_.value_or(-1);
  }

 private:
  void kill_now() noexcept {
    if (pid_ > 0 && !exit_status_) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }

  pid_t pid_ = -1;
  std::optional<int> exit_status_;
};

}  // namespace hookbench::process
