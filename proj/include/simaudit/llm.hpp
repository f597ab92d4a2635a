#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace simaudit {

enum class AgentRole { Detector, Critic, Supporter, Judge };

inline constexpr AgentRole kDebateOrder[] = {AgentRole::Detector, AgentRole::Critic,
                                             AgentRole::Supporter, AgentRole::Judge};

std::string_view to_string(AgentRole role);
AgentRole agent_role_from_string(std::string_view text);

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// One stateless chat completion. `agent` and `session_id` stay local; the
/// remaining fields are what goes on the wire.
struct ChatRequest {
  AgentRole agent = AgentRole::Detector;
  std::string session_id;
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  double top_p = 1.0;
  double presence_penalty = 0.0;
  double frequency_penalty = 0.0;
};

/// {model, messages, temperature, top_p, presence_penalty, frequency_penalty}
nlohmann::json to_wire(const ChatRequest& request);

/// Chat-completion backend. Implementations must tolerate concurrent calls
/// and throw Error(ProviderError) on failure.
class LlmProvider {
 public:
  virtual ~LlmProvider() = default;

  virtual std::string id() const = 0;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Canned responses keyed by (role, prompt hash), for tests and offline runs.
///
/// Fixture file (JSON):
///   {
///     "rules": [
///       {"role": "detector", "prompt_sha256": "<hex>", "response": "..."},
///       {"role": "*", "prompt_contains": "function transferFrom(", "response": "..."}
///     ],
///     "defaults": {"critic": "..."},
///     "default": "..."
///   }
/// Rules are tried in order; the hash is the SHA-256 of the last user
/// message. Unmatched requests fall back to defaults[role], then default,
/// and otherwise raise Error(ProviderError).
class MockLlmProvider final : public LlmProvider {
 public:
  struct Rule {
    std::optional<AgentRole> role;  // nullopt matches any role
    std::optional<std::string> prompt_sha256;
    std::optional<std::string> prompt_contains;
    std::string response;
  };

  MockLlmProvider() = default;
  /// Throws Error(FileCorrupt) on a malformed fixture.
  explicit MockLlmProvider(const nlohmann::json& fixture);
  static std::unique_ptr<MockLlmProvider> from_file(const std::filesystem::path& path);

  void add_rule(Rule rule) { rules_.push_back(std::move(rule)); }
  void set_default(AgentRole role, std::string response);
  void set_default(std::string response) { fallback_ = std::move(response); }

  std::string id() const override { return "mock"; }
  std::string complete(const ChatRequest& request) override;

  std::size_t call_count() const;
  std::vector<ChatRequest> calls() const;

 private:
  std::vector<Rule> rules_;
  std::optional<std::string> defaults_[4];
  std::optional<std::string> fallback_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> calls_;
};

struct RemoteLlmConfig {
  std::string endpoint;  // full chat-completions URL
  std::string api_key;
  int timeout_seconds = 120;
};

/// OpenAI-style chat completion over HTTP; reads choices[0].message.content.
class RemoteLlmProvider final : public LlmProvider {
 public:
  explicit RemoteLlmProvider(RemoteLlmConfig config);

  std::string id() const override { return "remote"; }
  std::string complete(const ChatRequest& request) override;

 private:
  RemoteLlmConfig config_;
};

}  // namespace simaudit
