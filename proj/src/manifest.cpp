#include "ofm/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "ofm/common.hpp"

namespace ofm {

uint64_t fnv1a_hash(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw std::runtime_error("cannot read file for hashing: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  std::vector<char> buf(1 << 16);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const std::streamsize got = f.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<size_t>(i)]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::string manifest_path(const std::string& artifact_path) {
  return artifact_path + ".manifest.json";
}

namespace {

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t from_hex64(const std::string& s) {
  return std::strtoull(s.c_str(), nullptr, 16);
}

}  // namespace

void write_artifact_manifest(const std::string& artifact_path, const std::string& command,
                             uint64_t seed, const std::vector<std::string>& input_paths) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const std::string& in : input_paths)
    inputs.push_back({{"path", in}, {"hash", hex64(fnv1a_file(in))}});
  nlohmann::json j = {
      {"version", 1},
      {"command", command},
      {"seed", seed},
      {"artifact",
       {{"path", std::filesystem::path(artifact_path).filename().string()},
        {"hash", hex64(fnv1a_file(artifact_path))}}},
      {"inputs", inputs}};
  std::ofstream f(manifest_path(artifact_path));
  require(f.good(), "cannot write manifest");
  f << j.dump(2) << "\n";
}

Manifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::runtime_error("missing manifest: " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  Manifest m;
  m.version = j.at("version").get<int>();
  m.command = j.at("command").get<std::string>();
  m.seed = j.at("seed").get<uint64_t>();
  m.artifact.path = j.at("artifact").at("path").get<std::string>();
  m.artifact.hash = from_hex64(j.at("artifact").at("hash").get<std::string>());
  for (const auto& in : j.at("inputs")) {
    ManifestEntry e;
    e.path = in.at("path").get<std::string>();
    e.hash = from_hex64(in.at("hash").get<std::string>());
    m.inputs.push_back(e);
  }
  return m;
}

void verify_artifact(const std::string& artifact_path) {
  const Manifest m = read_manifest(manifest_path(artifact_path));
  const uint64_t have = fnv1a_file(artifact_path);
  if (have != m.artifact.hash)
    throw std::runtime_error("manifest mismatch: " + artifact_path +
                             " differs from the recorded hash");
  for (const ManifestEntry& in : m.inputs) {
    if (!std::filesystem::exists(in.path)) continue;  // inputs may have moved
    if (fnv1a_file(in.path) != in.hash)
      throw std::runtime_error("manifest mismatch: input " + in.path +
                               " differs from what produced " + artifact_path);
  }
}

}  // namespace ofm
