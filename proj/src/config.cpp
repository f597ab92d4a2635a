#include "simaudit/config.hpp"

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "simaudit/errors.hpp"

namespace simaudit {

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

Config load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
  Config c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path->string());
    try {
      const auto j = nlohmann::json::parse(in);
      if (const auto it = j.find("llm"); it != j.end()) {
        c.llm.endpoint = it->value("endpoint", c.llm.endpoint);
        c.llm.api_key = it->value("api_key", c.llm.api_key);
        c.llm.timeout_seconds = it->value("timeout_seconds", c.llm.timeout_seconds);
        c.model = it->value("model", c.model);
      }
      if (const auto it = j.find("embedder"); it != j.end()) {
        c.embedder.endpoint = it->value("endpoint", c.embedder.endpoint);
        c.embedder.api_key = it->value("api_key", c.embedder.api_key);
        c.embedder.provider_id = it->value("id", c.embedder.provider_id);
        c.embedder.dimension = it->value("dimension", c.embedder.dimension);
        c.embedder.timeout_seconds = it->value("timeout_seconds", c.embedder.timeout_seconds);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::FileCorrupt, path->string() + ": " + e.what());
    }
  }
  if (auto v = env("SIMAUDIT_LLM_ENDPOINT")) c.llm.endpoint = *v;
  if (auto v = env("SIMAUDIT_LLM_KEY")) c.llm.api_key = *v;
  if (auto v = env("SIMAUDIT_EMBED_ENDPOINT")) c.embedder.endpoint = *v;
  if (auto v = env("SIMAUDIT_EMBED_KEY")) c.embedder.api_key = *v;
  return c;
}

}  // namespace simaudit
