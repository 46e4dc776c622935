#pragma once

// Artifact provenance. Every file a subcommand writes gets a sibling
// <name>.manifest.json recording the producing command, the seed, a format
// version, the artifact's own content hash, and the content hashes of the
// inputs it was derived from. Consumers re-hash what is on disk and refuse
// artifacts whose recorded hashes no longer match.

#include <cstdint>
#include <string>
#include <vector>

namespace ofm {

struct ManifestEntry {
  std::string path;   // as passed to the producing command
  uint64_t hash = 0;  // FNV-1a 64 of the file bytes
};

struct Manifest {
  int version = 1;
  std::string command;  // producing subcommand
  uint64_t seed = 0;
  ManifestEntry artifact;
  std::vector<ManifestEntry> inputs;
};

uint64_t fnv1a_hash(const void* data, size_t len);
uint64_t fnv1a_file(const std::string& path);  // throws when unreadable

std::string manifest_path(const std::string& artifact_path);

// Hashes the artifact and all inputs, then writes artifact.manifest.json.
void write_artifact_manifest(const std::string& artifact_path, const std::string& command,
                             uint64_t seed, const std::vector<std::string>& input_paths);

Manifest read_manifest(const std::string& path);

// Re-hashes the artifact (must match) and every recorded input that still
// exists on disk (each must match). Throws std::runtime_error on a missing
// manifest or any hash mismatch.
void verify_artifact(const std::string& artifact_path);

}  // namespace ofm
