#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "simaudit/llm.hpp"
#include "simaudit/simindex.hpp"

namespace simaudit {

/// Provider settings. File shape (every key optional):
///   {"llm": {"endpoint": "...", "model": "...", "api_key": "...", "timeout_seconds": 120},
///    "embedder": {"endpoint": "...", "api_key": "...", "id": "...", "dimension": 384,
///                 "timeout_seconds": 30}}
/// SIMAUDIT_LLM_ENDPOINT, SIMAUDIT_LLM_KEY, SIMAUDIT_EMBED_ENDPOINT and
/// SIMAUDIT_EMBED_KEY override the file.
struct Config {
  RemoteLlmConfig llm;
  std::string model = "gpt-4-turbo";
  RemoteEmbedderConfig embedder;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

/// Reads the process environment.
std::optional<std::string> process_env(const char* name);

/// Throws Error(Io) for an unreadable file, Error(FileCorrupt) for bad JSON.
Config load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env = process_env);

}  // namespace simaudit
