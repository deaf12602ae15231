// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

namespace qcfe {

/// FNV-1a 64-bit content hash used by the run manifest.
std::uint64_t fnv1a64(std::string_view bytes);

struct PipelineOptions {
  std::string out_dir;
  int threads = 0;  // 0 = library default
};

/// Execute a declarative run config (schema version 1): stages run in file
/// order, later stages reference earlier outputs by stage name, every
/// artifact lands under out_dir/<stage>/ and is listed in manifest.json with
/// its content hash. All randomness derives from the root seed via
/// (stage name, index), so an unchanged config reproduces byte-identical
/// numeric outputs. Returns the manifest.
nlohmann::json run_pipeline(const nlohmann::json& config,
                            const PipelineOptions& options);
nlohmann::json run_pipeline_file(const std::string& config_path,
                                 const PipelineOptions& options);

}  // namespace qcfe
