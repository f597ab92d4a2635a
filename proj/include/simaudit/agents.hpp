#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "simaudit/corpus.hpp"
#include "simaudit/llm.hpp"
#include "simaudit/simindex.hpp"
#include "simaudit/sol_extract.hpp"

namespace simaudit {

/// Sampling settings for one debate role. The Detector samples at 0.8;
/// the three reviewing roles are greedy (0.0).
struct AgentConfig {
  AgentRole role = AgentRole::Detector;
  double temperature = 0.0;
  double top_p = 1.0;
  double presence_penalty = 0.0;
  double frequency_penalty = 0.0;
  std::string model_name = "gpt-4-turbo";
  std::string prompt_template_id;

  static AgentConfig defaults_for(AgentRole role);
};

class AgentConfigs {
 public:
  AgentConfigs();

  const AgentConfig& operator[](AgentRole role) const { return by_role_[index(role)]; }
  AgentConfig& operator[](AgentRole role) { return by_role_[index(role)]; }

  void set_model(const std::string& model);

 private:
  static std::size_t index(AgentRole role) { return static_cast<std::size_t>(role); }
  std::array<AgentConfig, 4> by_role_;
};

struct CalleeSummary {
  std::string unit_id;
  std::string summary;

  friend bool operator==(const CalleeSummary&, const CalleeSummary&) = default;
};

/// A retrieved reference with the corpus data the prompts need.
struct ReferenceMatch {
  SimilarityMatch match;
  std::string reference_source;
  Label label = Label::Clean;
  std::optional<std::string> vuln_note;
};

ReferenceMatch make_reference(const SimilarityMatch& match, const CorpusEntry& entry);

struct DetectionTask {
  FunctionUnit unit;
  std::vector<CalleeSummary> callee_summaries;
  /// References shown to the Detector, best first. For a Clone task the
  /// first one decides the verdict.
  std::vector<ReferenceMatch> matches;
  SimilarityCategory category = SimilarityCategory::Dissimilar;
};

enum class Confidence { Low, Medium, High };
enum class DecidedBy { Judge, CloneShortCircuit };

std::string_view to_string(Confidence confidence);
std::string_view to_string(DecidedBy decided_by);

struct Verdict {
  bool is_vulnerable = false;
  std::string vuln_type;
  std::string explanation;
  Confidence confidence = Confidence::Low;
  DecidedBy decided_by = DecidedBy::Judge;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// One line fed to callers' Detector prompts, e.g.
/// "vulnerable: reentrancy (high confidence)".
std::string summarize(const Verdict& verdict);

struct TranscriptTurn {
  AgentRole role = AgentRole::Detector;
  /// Fresh per call; the request carried no earlier turns.
  std::string session_id;
  std::size_t messages_sent = 0;
  /// 1, or 2 when the first answer was unparseable and the role was re-prompted.
  int attempts = 1;
  std::string prompt;
  std::string raw_response;
  nlohmann::json payload;
};

struct DebateTranscript {
  std::vector<TranscriptTurn> turns;
};

struct DebateResult {
  Verdict verdict;
  DebateTranscript transcript;
  std::size_t provider_calls = 0;
};

/// Named-slot prompt templates. `{{slot}}` is replaced by the slot value;
/// `{{#slot}}...{{/slot}}` is kept only when the slot is present and
/// non-empty. Values are inserted verbatim and never re-scanned.
class PromptTemplates {
 public:
  /// Templates compiled in from templates/*.txt.
  static PromptTemplates builtin();
  /// Builtins, overridden by any `<id>.txt` present in `dir`.
  static PromptTemplates with_overrides(const std::filesystem::path& dir);

  const std::string& get(const std::string& id) const;
  void set(const std::string& id, std::string text) { templates_[id] = std::move(text); }

 private:
  std::map<std::string, std::string> templates_;
};

using SlotMap = std::map<std::string, std::string>;

/// Throws Error(MissingTemplateSlot) for a `{{slot}}` without a value or a
/// malformed section.
std::string render_template(std::string_view tpl, const SlotMap& slots);

struct PriorOutputs {
  std::optional<std::string> detector;
  std::optional<std::string> critic;
  std::optional<std::string> supporter;
};

/// Builds the prompt for `role`. Reference snippets are rendered only for
/// Similar tasks; the Judge sees the target and the three role outputs.
std::string assemble_prompt(AgentRole role, const DetectionTask& task, const PriorOutputs& prior,
                            const PromptTemplates& templates, const AgentConfigs& configs);

/// Appended to a prompt whose first answer failed to parse.
std::string format_reminder(AgentRole role);

/// Extracts the first fenced JSON block of a role response and checks the
/// role's required keys:
///   detector: findings (array)     critic: rebuttals (array)
///   supporter: assessment          judge: is_vulnerable, vuln_type,
///                                         explanation, confidence
/// Throws ParseError carrying the raw text.
nlohmann::json parse_verdict(AgentRole role, std::string_view raw);

/// Judge payload (already validated) to a Verdict decided by the Judge.
Verdict verdict_from_judge(const nlohmann::json& payload);

/// Clone tasks are settled from the reference label with no provider
/// calls. Otherwise Detector, Critic, Supporter and Judge run once each,
/// in that order, every call in a fresh session. A failed call is retried
/// once (Error(ProviderError) after that); an unparseable answer is
/// re-prompted once with format_reminder (ParseError after that).
DebateResult run_debate(const DetectionTask& task, LlmProvider& provider,
                        const AgentConfigs& configs, const PromptTemplates& templates);

}  // namespace simaudit
