#include "simaudit/agents.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "simaudit/builtin_templates.hpp"
#include "simaudit/errors.hpp"

namespace simaudit {

using nlohmann::json;

AgentConfig AgentConfig::defaults_for(AgentRole role) {
  AgentConfig c;
  c.role = role;
  c.temperature = role == AgentRole::Detector ? 0.8 : 0.0;
  c.prompt_template_id = std::string(to_string(role));
  return c;
}

AgentConfigs::AgentConfigs() {
  for (auto role : kDebateOrder) by_role_[index(role)] = AgentConfig::defaults_for(role);
}

void AgentConfigs::set_model(const std::string& model) {
  for (auto& c : by_role_) c.model_name = model;
}

ReferenceMatch make_reference(const SimilarityMatch& match, const CorpusEntry& entry) {
  return {match, entry.unit.raw_source, entry.label, entry.vuln_note};
}

std::string_view to_string(Confidence confidence) {
  switch (confidence) {
    case Confidence::Low: return "low";
    case Confidence::Medium: return "medium";
    case Confidence::High: return "high";
  }
  return "low";
}

std::string_view to_string(DecidedBy decided_by) {
  return decided_by == DecidedBy::CloneShortCircuit ? "clone_short_circuit" : "judge";
}

std::string summarize(const Verdict& v) {
  std::string out = v.is_vulnerable ? "vulnerable: " + v.vuln_type : "not vulnerable";
  out += " (" + std::string(to_string(v.confidence)) + " confidence)";
  return out;
}

// ---------------------------------------------------------------------------
// Templates

PromptTemplates PromptTemplates::builtin() {
  PromptTemplates t;
  for (const auto& [id, text] : generated::kBuiltinTemplates) t.set(std::string(id), std::string(text));
  return t;
}

PromptTemplates PromptTemplates::with_overrides(const std::filesystem::path& dir) {
  auto t = builtin();
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorKind::Io, "template directory " + dir.string() + " does not exist");
  for (auto role : kDebateOrder) {
    const auto path = dir / (std::string(to_string(role)) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read template " + path.string());
    t.set(std::string(to_string(role)),
          std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  }
  return t;
}

const std::string& PromptTemplates::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end())
    throw Error(ErrorKind::MissingTemplateSlot, "no prompt template '" + id + "'");
  return it->second;
}

namespace {

void render_into(std::string& out, std::string_view tpl, const SlotMap& slots) {
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(pos));
      return;
    }
    out.append(tpl.substr(pos, open - pos));
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos)
      throw Error(ErrorKind::MissingTemplateSlot, "unclosed '{{' in prompt template");
    const auto tag = tpl.substr(open + 2, close - open - 2);
    if (!tag.empty() && tag.front() == '#') {
      const std::string name(tag.substr(1));
      const std::string end_tag = "{{/" + name + "}}";
      const auto end = tpl.find(end_tag, close + 2);
      if (end == std::string_view::npos)
        throw Error(ErrorKind::MissingTemplateSlot, "section '" + name + "' is never closed");
      auto it = slots.find(name);
      if (it != slots.end() && !it->second.empty())
        render_into(out, tpl.substr(close + 2, end - close - 2), slots);
      pos = end + end_tag.size();
      // Drop the newline after a section close so omitted sections leave no gap.
      if (pos < tpl.size() && tpl[pos] == '\n') ++pos;
      continue;
    }
    if (!tag.empty() && tag.front() == '/')
      throw Error(ErrorKind::MissingTemplateSlot, "unexpected '{{" + std::string(tag) + "}}'");
    auto it = slots.find(std::string(tag));
    if (it == slots.end())
      throw Error(ErrorKind::MissingTemplateSlot, "no value for template slot '" + std::string(tag) + "'");
    out.append(it->second);
    pos = close + 2;
  }
}

std::string format_similarity(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string render_references(const std::vector<ReferenceMatch>& refs) {
  std::string out;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& r = refs[i];
    out += "### Reference " + std::to_string(i + 1) + ": " + r.match.entry_id + " (similarity " +
           format_similarity(r.match.similarity) + ", label " + std::string(to_string(r.label)) +
           ")\n";
    if (r.vuln_note) out += "Known vulnerability in this reference: " + *r.vuln_note + "\n";
    out += "```solidity\n" + r.reference_source + "\n```\n";
  }
  return out;
}

std::string render_callees(const std::vector<CalleeSummary>& callees) {
  std::string out;
  for (const auto& c : callees) out += "- " + c.unit_id + ": " + c.summary + "\n";
  return out;
}

}  // namespace

std::string render_template(std::string_view tpl, const SlotMap& slots) {
  std::string out;
  render_into(out, tpl, slots);
  return out;
}

std::string assemble_prompt(AgentRole role, const DetectionTask& task, const PriorOutputs& prior,
                            const PromptTemplates& templates, const AgentConfigs& configs) {
  SlotMap slots;
  slots["target_code"] = task.unit.raw_source;
  slots["unit_name"] = task.unit.name;
  slots["contract"] = task.unit.contract.empty() ? "(file level)" : task.unit.contract;
  if (task.category == SimilarityCategory::Similar && !task.matches.empty())
    slots["reference_snippets"] = render_references(task.matches);
  if (!task.callee_summaries.empty()) slots["callee_summaries"] = render_callees(task.callee_summaries);
  if (prior.detector) slots["detector_output"] = *prior.detector;
  if (prior.critic) slots["critic_output"] = *prior.critic;
  if (prior.supporter) slots["supporter_output"] = *prior.supporter;
  return render_template(templates.get(configs[role].prompt_template_id), slots);
}

std::string format_reminder(AgentRole role) {
  std::string keys;
  switch (role) {
    case AgentRole::Detector: keys = R"("findings" (array))"; break;
    case AgentRole::Critic: keys = R"("rebuttals" (array))"; break;
    case AgentRole::Supporter: keys = R"("assessment")"; break;
    case AgentRole::Judge:
      keys = R"("is_vulnerable" (boolean), "vuln_type" (string), "explanation" (string), "confidence" ("low", "medium" or "high"))";
      break;
  }
  return "\n\nFORMAT REMINDER: your previous answer could not be parsed. Reply with exactly one "
         "fenced ```json block containing an object with the keys " +
         keys + ".\n";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<json> first_fenced_object(std::string_view raw) {
  std::size_t pos = 0;
  while (true) {
    const auto open = raw.find("```", pos);
    if (open == std::string_view::npos) return std::nullopt;
    const auto eol = raw.find('\n', open + 3);
    if (eol == std::string_view::npos) return std::nullopt;
    const auto close = raw.find("```", eol + 1);
    if (close == std::string_view::npos) return std::nullopt;
    const auto tag = lower(trim(raw.substr(open + 3, eol - open - 3)));
    if (tag.empty() || tag == "json") {
      auto parsed = json::parse(raw.substr(eol + 1, close - eol - 1), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    pos = close + 3;
  }
}

std::optional<Confidence> confidence_from(std::string_view text) {
  const auto t = lower(text);
  if (t == "low") return Confidence::Low;
  if (t == "medium") return Confidence::Medium;
  if (t == "high") return Confidence::High;
  return std::nullopt;
}

}  // namespace

json parse_verdict(AgentRole role, std::string_view raw) {
  const std::string who(to_string(role));
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(who + " response: " + why, std::string(raw));
  };
  auto payload = first_fenced_object(raw);
  if (!payload) throw fail("no fenced JSON object found");
  const auto& p = *payload;
  switch (role) {
    case AgentRole::Detector:
      if (!p.contains("findings") || !p["findings"].is_array()) throw fail("'findings' must be an array");
      break;
    case AgentRole::Critic:
      if (!p.contains("rebuttals") || !p["rebuttals"].is_array()) throw fail("'rebuttals' must be an array");
      break;
    case AgentRole::Supporter:
      if (!p.contains("assessment") || p["assessment"].is_null()) throw fail("missing 'assessment'");
      break;
    case AgentRole::Judge: {
      if (!p.contains("is_vulnerable") || !p["is_vulnerable"].is_boolean())
        throw fail("'is_vulnerable' must be a boolean");
      for (const char* key : {"vuln_type", "explanation", "confidence"})
        if (!p.contains(key) || !p[key].is_string()) throw fail(std::string("'") + key + "' must be a string");
      if (!confidence_from(p["confidence"].get<std::string>()))
        throw fail("'confidence' must be low, medium or high");
      if (p["is_vulnerable"].get<bool>() && trim(p["explanation"].get<std::string>()).empty())
        throw fail("a vulnerable verdict needs an explanation");
      break;
    }
  }
  return p;
}

Verdict verdict_from_judge(const json& payload) {
  Verdict v;
  v.is_vulnerable = payload.at("is_vulnerable").get<bool>();
  v.vuln_type = payload.at("vuln_type").get<std::string>();
  v.explanation = payload.at("explanation").get<std::string>();
  v.confidence = confidence_from(payload.at("confidence").get<std::string>()).value_or(Confidence::Low);
  v.decided_by = DecidedBy::Judge;
  return v;
}

// ---------------------------------------------------------------------------
// Debate

namespace {

Verdict clone_verdict(const DetectionTask& task) {
  if (task.matches.empty())
    throw std::invalid_argument("clone task for '" + task.unit.unit_id + "' carries no reference");
  const auto& ref = task.matches.front();
  Verdict v;
  v.decided_by = DecidedBy::CloneShortCircuit;
  v.confidence = Confidence::High;
  v.is_vulnerable = ref.label == Label::Vulnerable;
  if (v.is_vulnerable) {
    v.vuln_type = "known vulnerable clone";
    v.explanation = "exact clone of reference " + ref.match.entry_id +
                    ", labeled vulnerable: " + ref.vuln_note.value_or("");
  } else {
    v.explanation = "exact clone of reference " + ref.match.entry_id + ", labeled clean";
  }
  return v;
}

class DebateRunner {
 public:
  DebateRunner(const DetectionTask& task, LlmProvider& provider, const AgentConfigs& configs,
               const PromptTemplates& templates)
      : task_(task), provider_(provider), configs_(configs), templates_(templates) {}

  DebateResult run() {
    PriorOutputs prior;
    prior.detector = turn(AgentRole::Detector, prior);
    prior.critic = turn(AgentRole::Critic, prior);
    prior.supporter = turn(AgentRole::Supporter, prior);
    turn(AgentRole::Judge, prior);
    result_.verdict = verdict_from_judge(result_.transcript.turns.back().payload);
    return std::move(result_);
  }

 private:
  // Runs one role; returns its raw response for the later roles.
  std::string turn(AgentRole role, const PriorOutputs& prior) {
    const auto base_prompt = assemble_prompt(role, task_, prior, templates_, configs_);
    std::string last_raw;
    for (int attempt = 1; attempt <= 2; ++attempt) {
      const auto prompt = attempt == 1 ? base_prompt : base_prompt + format_reminder(role);
      auto request = make_request(role, prompt, attempt);
      last_raw = call_with_retry(request);
      try {
        auto payload = parse_verdict(role, last_raw);
        result_.transcript.turns.push_back({role, request.session_id, request.messages.size(),
                                            attempt, prompt, last_raw, std::move(payload)});
        return last_raw;
      } catch (const ParseError&) {
        if (attempt == 2) throw;
      }
    }
    throw ParseError(std::string(to_string(role)) + " response unparseable", last_raw);
  }

  ChatRequest make_request(AgentRole role, const std::string& prompt, int attempt) const {
    const auto& cfg = configs_[role];
    ChatRequest r;
    r.agent = role;
    r.model = cfg.model_name;
    r.temperature = cfg.temperature;
    r.top_p = cfg.top_p;
    r.presence_penalty = cfg.presence_penalty;
    r.frequency_penalty = cfg.frequency_penalty;
    r.messages = {{"user", prompt}};
    r.session_id = content_hash(task_.unit.unit_id + "\n" + std::string(to_string(role)) + "\n" +
                                std::to_string(attempt) + "\n" + prompt)
                       .substr(0, 16);
    return r;
  }

  std::string call_with_retry(const ChatRequest& request) {
    for (int attempt = 1;; ++attempt) {
      ++result_.provider_calls;
      try {
        return provider_.complete(request);
      } catch (const Error& e) {
        const bool transient =
            e.kind() == ErrorKind::ProviderError || e.kind() == ErrorKind::ProviderUnavailable;
        if (!transient) throw;
        if (attempt == 2)
          throw Error(ErrorKind::ProviderError, std::string(to_string(request.agent)) +
                                                    " call failed twice: " + e.what());
      }
    }
  }

  const DetectionTask& task_;
  LlmProvider& provider_;
  const AgentConfigs& configs_;
  const PromptTemplates& templates_;
  DebateResult result_;
};

}  // namespace

DebateResult run_debate(const DetectionTask& task, LlmProvider& provider,
                        const AgentConfigs& configs, const PromptTemplates& templates) {
  if (task.category == SimilarityCategory::Clone) return {clone_verdict(task), {}, 0};
  return DebateRunner(task, provider, configs, templates).run();
}

}  // namespace simaudit
