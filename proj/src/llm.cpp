#include "simaudit/llm.hpp"

#include <fstream>

#include "simaudit/errors.hpp"
#include "simaudit/http_client.hpp"
#include "simaudit/sol_extract.hpp"

namespace simaudit {

using nlohmann::json;

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::Detector: return "detector";
    case AgentRole::Critic: return "critic";
    case AgentRole::Supporter: return "supporter";
    case AgentRole::Judge: return "judge";
  }
  return "detector";
}

AgentRole agent_role_from_string(std::string_view text) {
  for (auto role : kDebateOrder)
    if (to_string(role) == text) return role;
  throw Error(ErrorKind::FileCorrupt, "unknown agent role '" + std::string(text) + "'");
}

json to_wire(const ChatRequest& r) {
  json messages = json::array();
  for (const auto& m : r.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return json{{"model", r.model},
              {"messages", std::move(messages)},
              {"temperature", r.temperature},
              {"top_p", r.top_p},
              {"presence_penalty", r.presence_penalty},
              {"frequency_penalty", r.frequency_penalty}};
}

MockLlmProvider::MockLlmProvider(const json& fixture) {
  auto& mock = *this;
  try {
    if (fixture.contains("rules")) {
      for (const auto& r : fixture.at("rules")) {
        Rule rule;
        const auto role = r.value("role", std::string("*"));
        if (role != "*") rule.role = agent_role_from_string(role);
        if (r.contains("prompt_sha256")) rule.prompt_sha256 = r.at("prompt_sha256").get<std::string>();
        if (r.contains("prompt_contains"))
          rule.prompt_contains = r.at("prompt_contains").get<std::string>();
        rule.response = r.at("response").get<std::string>();
        mock.add_rule(std::move(rule));
      }
    }
    if (fixture.contains("defaults"))
      for (const auto& [role, text] : fixture.at("defaults").items())
        mock.set_default(agent_role_from_string(role), text.get<std::string>());
    if (fixture.contains("default")) mock.set_default(fixture.at("default").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FileCorrupt, std::string("malformed mock fixture: ") + e.what());
  }
}

std::unique_ptr<MockLlmProvider> MockLlmProvider::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open mock fixture " + path.string());
  try {
    return std::make_unique<MockLlmProvider>(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::FileCorrupt, path.string() + ": " + e.what());
  }
}

void MockLlmProvider::set_default(AgentRole role, std::string response) {
  defaults_[static_cast<int>(role)] = std::move(response);
}

std::string MockLlmProvider::complete(const ChatRequest& request) {
  {
    std::lock_guard lock(mutex_);
    calls_.push_back(request);
  }
  std::string prompt;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") {
      prompt = it->content;
      break;
    }
  }
  std::optional<std::string> hash;
  for (const auto& rule : rules_) {
    if (rule.role && *rule.role != request.agent) continue;
    if (rule.prompt_sha256) {
      if (!hash) hash = content_hash(prompt);
      if (*rule.prompt_sha256 != *hash) continue;
    }
    if (rule.prompt_contains && prompt.find(*rule.prompt_contains) == std::string::npos) continue;
    return rule.response;
  }
  if (const auto& d = defaults_[static_cast<int>(request.agent)]) return *d;
  if (fallback_) return *fallback_;
  throw Error(ErrorKind::ProviderError,
              "mock fixture has no response for role " + std::string(to_string(request.agent)));
}

std::size_t MockLlmProvider::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_.size();
}

std::vector<ChatRequest> MockLlmProvider::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

RemoteLlmProvider::RemoteLlmProvider(RemoteLlmConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty())
    throw Error(ErrorKind::ProviderError, "remote LLM provider has no endpoint configured");
}

std::string RemoteLlmProvider::complete(const ChatRequest& request) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  const auto res = post_json(config_.endpoint, to_wire(request).dump(), headers,
                             config_.timeout_seconds);
  if (res.status != 200)
    throw Error(ErrorKind::ProviderError,
                "LLM endpoint " + config_.endpoint + ": " +
                    (res.status == 0 ? res.body : "HTTP " + std::to_string(res.status)));
  try {
    return json::parse(res.body).at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ProviderError, std::string("malformed LLM response: ") + e.what());
  }
}

}  // namespace simaudit
