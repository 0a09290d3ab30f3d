#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "safeadapt/protocol.hpp"

namespace safeadapt {

// All files are versioned text documents with a leading format-version line;
// parameters are written as shortest round-trip decimal representations, so a
// save/load cycle reproduces every double bit-exactly.

std::string format_double(double value);
double parse_double(const std::string& token);

std::string sha1_hex(std::string_view bytes);
std::string sha1_file(const std::string& path);

void save_network(const NetworkParams& net, const std::string& path);
NetworkParams load_network(const std::string& path);

void save_experience(const ExperienceDataset& data, const std::string& path);
ExperienceDataset load_experience(const std::string& path);

// Writes every artifact file into `dir` plus a manifest holding the master
// seed, the resolved configuration (key=value lines supplied by the caller),
// and a SHA-1 content hash per file. The manifest is written last.
void save_artifacts(const PhaseArtifacts& art, const std::string& dir,
                    std::uint64_t master_seed,
                    const std::vector<std::pair<std::string, std::string>>&
                        config_entries);

// Loads an artifact directory; rejects version mismatches and hash mismatches
// with a descriptive error.
PhaseArtifacts load_artifacts(const std::string& dir);

// Recomputes every file hash listed in the manifest and throws on mismatch.
void verify_artifact_hashes(const std::string& dir);

}  // namespace safeadapt
