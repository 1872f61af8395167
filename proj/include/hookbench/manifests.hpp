#pragma once

// Kubernetes manifests for running the harness in a cluster. Two placements:
//   same-pod   - SUT and load generator as two containers of one pod, talking
//                over the pod's shared loopback interface.
//   cross-node - one pod each, pinned to different nodes by node selectors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hookbench/error.hpp"
#include "hookbench/samples_csv.hpp"

namespace hookbench::manifests {

enum class Mode { same_pod, cross_node };

inline Mode parse_mode(std::string_view s) {
  if (s == "same-pod") return Mode::same_pod;
  if (s == "cross-node") return Mode::cross_node;
  throw Error("unknown manifest mode '" + std::string(s) + "' (expected same-pod or cross-node)");
}

struct ManifestOptions {
  std::string image = "hookbench:latest";
  std::string name = "hookbench";
  std::uint16_t port = 8080;
  std::uint64_t requests = 50000;
  std::uint32_t delay_us = 0;
  std::string sut_node = "node-a";
  std::string loadgen_node = "node-b";
  std::string node_label_key = "kubernetes.io/hostname";
  std::optional<std::string> hook_library;  // path inside the image
  std::vector<std::string> hook_keywords;
};

namespace detail {

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string sut_container(const ManifestOptions& o, std::string_view indent) {
  const std::string in(indent);
  std::string y;
  y += in + "- name: sut\n";
  y += in + "  image: " + quote(o.image) + "\n";
  y += in + "  args: [\"serve\", \"--port\", " + quote(std::to_string(o.port)) + ", \"--delay-us\", " +
       quote(std::to_string(o.delay_us)) + "]\n";
  y += in + "  ports:\n";
  y += in + "    - containerPort: " + std::to_string(o.port) + "\n";
  if (o.hook_library) {
    std::string keywords;
    for (std::size_t i = 0; i < o.hook_keywords.size(); ++i) keywords += (i ? "," : "") + o.hook_keywords[i];
    y += in + "  env:\n";
    y += in + "    - name: LD_PRELOAD\n";
    y += in + "      value: " + quote(*o.hook_library) + "\n";
    y += in + "    - name: HOOKBENCH_KEYWORDS\n";
    y += in + "      value: " + quote(keywords) + "\n";
  }
  return y;
}

inline std::string loadgen_container(const ManifestOptions& o, std::string_view target_host, std::string_view indent) {
  const std::string in(indent);
  std::string y;
  y += in + "- name: loadgen\n";
  y += in + "  image: " + quote(o.image) + "\n";
  y += in + "  args: [\"load\", \"--target\", " + quote(std::string(target_host) + ":" + std::to_string(o.port)) +
       ", \"--requests\", " + quote(std::to_string(o.requests)) + ", \"--out\", \"/results/samples.csv\"]\n";
  y += in + "  volumeMounts:\n";
  y += in + "    - name: results\n";
  y += in + "      mountPath: /results\n";
  return y;
}

inline std::string pod_header(std::string_view name, std::string_view role, const ManifestOptions& o) {
  std::string y;
  y += "apiVersion: v1\n";
  y += "kind: Pod\n";
  y += "metadata:\n";
  y += "  name: " + std::string(name) + "\n";
  y += "  labels:\n";
  y += "    app: " + o.name + "\n";
  y += "    role: " + std::string(role) + "\n";
  y += "spec:\n";
  y += "  restartPolicy: Never\n";
  return y;
}

inline std::string results_volume() { return "  volumes:\n    - name: results\n      emptyDir: {}\n"; }

}  // namespace detail

struct Manifest {
  std::string filename;
  std::string yaml;
};

inline std::vector<Manifest> build_manifests(Mode mode, const ManifestOptions& o) {
  using namespace detail;
  std::vector<Manifest> out;
  if (mode == Mode::same_pod) {
    std::string y = "# Load generator and SUT share one pod (and its network namespace).\n";
    y += pod_header(o.name, "benchmark", o);
    y += "  containers:\n";
    y += sut_container(o, "    ");
    y += loadgen_container(o, "127.0.0.1", "    ");
    y += results_volume();
    out.push_back({o.name + "-pod.yaml", y});
    return out;
  }
  std::string sut = "# SUT pod pinned to '" + o.sut_node + "'.\n";
  sut += pod_header(o.name + "-sut", "sut", o);
  sut += "  nodeSelector:\n";
  sut += "    " + o.node_label_key + ": " + quote(o.sut_node) + "\n";
  sut += "  containers:\n";
  sut += sut_container(o, "    ");
  out.push_back({o.name + "-sut-pod.yaml", sut});

  std::string lg = "# Load generator pod pinned to '" + o.loadgen_node + "'.\n";
  lg += "# Set SUT_POD_IP to the SUT pod's IP (kubectl get pod " + o.name + "-sut -o wide).\n";
  lg += pod_header(o.name + "-loadgen", "loadgen", o);
  lg += "  nodeSelector:\n";
  lg += "    " + o.node_label_key + ": " + quote(o.loadgen_node) + "\n";
  lg += "  containers:\n";
  lg += loadgen_container(o, "$(SUT_POD_IP)", "    ");
  lg += "      env:\n";
  lg += "        - name: SUT_POD_IP\n";
  lg += "          value: \"\"\n";
  lg += results_volume();
  out.push_back({o.name + "-loadgen-pod.yaml", lg});
  return out;
}

inline std::vector<std::filesystem::path> generate_manifests(Mode mode, const std::filesystem::path& output_dir,
                                                             const ManifestOptions& options = {}) {
  if (mode == Mode::cross_node && options.sut_node == options.loadgen_node) {
    throw Error("cross-node placement needs two distinct nodes");
  }
  std::filesystem::create_directories(output_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& m : build_manifests(mode, options)) {
    const auto path = output_dir / m.filename;
    io::write_file(path, m.yaml);
    written.push_back(path);
  }
  return written;
}

}  // namespace hookbench::manifests
