#include "simaudit/report.hpp"

#include <cstdio>
#include <map>
#include <ostream>

namespace simaudit {

using nlohmann::json;

std::string_view to_string(CloneSource source) {
  switch (source) {
    case CloneSource::None: return "none";
    case CloneSource::Hash: return "hash";
    case CloneSource::Embedding: return "embedding";
  }
  return "none";
}

std::size_t ScanReport::count_vulnerable() const {
  std::size_t n = 0;
  for (const auto& u : units) n += u.verdict && u.verdict->is_vulnerable;
  return n;
}

std::size_t ScanReport::count_errors() const {
  std::size_t n = 0;
  for (const auto& u : units) n += !u.verdict;
  return n;
}

std::size_t ScanReport::provider_calls() const {
  std::size_t n = 0;
  for (const auto& u : units) n += u.provider_calls;
  return n;
}

namespace {

json verdict_json(const Verdict& v) {
  return {{"is_vulnerable", v.is_vulnerable},
          {"vuln_type", v.vuln_type},
          {"explanation", v.explanation},
          {"confidence", to_string(v.confidence)},
          {"decided_by", to_string(v.decided_by)}};
}

json unit_json(const UnitRecord& u) {
  json matches = json::array();
  for (const auto& m : u.matches)
    matches.push_back({{"entry_id", m.match.entry_id},
                       {"similarity", m.match.similarity},
                       {"distance", m.match.distance},
                       {"category", to_string(m.match.category)},
                       {"injected", m.injected}});
  json callees = json::array();
  for (const auto& c : u.callee_summaries) callees.push_back({{"unit_id", c.unit_id}, {"summary", c.summary}});
  json transcript = json::array();
  for (const auto& t : u.transcript.turns)
    transcript.push_back({{"role", to_string(t.role)},
                          {"session_id", t.session_id},
                          {"messages_sent", t.messages_sent},
                          {"attempts", t.attempts},
                          {"prompt", t.prompt},
                          {"raw_response", t.raw_response},
                          {"payload", t.payload}});
  json error = nullptr;
  if (u.error) {
    error = {{"kind", to_string(u.error->kind)}, {"message", u.error->message}};
    if (u.error->raw_response) error["raw_response"] = *u.error->raw_response;
  }
  return {{"position", u.position},
          {"unit_id", u.unit_id},
          {"kind", to_string(u.kind)},
          {"contract", u.contract},
          {"name", u.name},
          {"file", u.file_path},
          {"content_hash", u.content_hash},
          {"category", to_string(u.category)},
          {"clone_source", to_string(u.clone_source)},
          {"matches", std::move(matches)},
          {"callee_summaries", std::move(callees)},
          {"verdict", u.verdict ? verdict_json(*u.verdict) : json("error")},
          {"error", std::move(error)},
          {"provider_calls", u.provider_calls},
          {"transcript", std::move(transcript)}};
}

}  // namespace

json report_to_json(const ScanReport& r, bool include_timing) {
  json units = json::array();
  for (const auto& u : r.units) units.push_back(unit_json(u));

  json edges = json::array();
  for (const auto& [from, to] : r.callgraph.edges) edges.push_back({from, to});
  json unresolved = json::array();
  for (const auto& c : r.callgraph.unresolved)
    unresolved.push_back({{"caller", c.caller_id}, {"callee", c.callee_name}, {"reason", to_string(c.reason)}});

  std::map<std::string, std::size_t> by_category{{"clone", 0}, {"similar", 0}, {"dissimilar", 0}};
  for (const auto& u : r.units) ++by_category[std::string(to_string(u.category))];

  json out{
      {"schema_version", kReportSchemaVersion},
      {"tool_version", r.tool_version},
      {"inputs", r.inputs},
      {"index", r.index_path.empty() ? json(nullptr) : json(r.index_path)},
      {"settings",
       {{"k", r.settings.k},
        {"delta", r.settings.delta},
        {"simcheck", r.settings.simcheck},
        {"llm_provider", r.settings.llm_provider},
        {"embedder", r.settings.embedder.empty() ? json(nullptr) : json(r.settings.embedder)},
        {"model", r.settings.model}}},
      {"callgraph",
       {{"vertices", r.callgraph.vertices},
        {"edges", std::move(edges)},
        {"unresolved", std::move(unresolved)},
        {"self_recursive", r.callgraph.self_recursive},
        {"cycles", r.callgraph.cycles}}},
      {"units", std::move(units)},
      {"summary",
       {{"units", r.units.size()},
        {"vulnerable", r.count_vulnerable()},
        {"not_vulnerable", r.units.size() - r.count_vulnerable() - r.count_errors()},
        {"error", r.count_errors()},
        {"by_category", by_category},
        {"provider_calls", r.provider_calls()}}},
      {"warnings", r.warnings},
  };
  if (include_timing)
    out["timing"] = {{"started_at", r.timing.started_at}, {"elapsed_ms", r.timing.elapsed_ms}};
  return out;
}

void write_report_json(const ScanReport& report, std::ostream& out, bool include_timing) {
  out << report_to_json(report, include_timing).dump(2) << '\n';
}

void write_report_markdown(const ScanReport& r, std::ostream& out) {
  out << "# simaudit scan report\n\n";
  out << "- tool version: " << r.tool_version << "\n";
  out << "- units: " << r.units.size() << " (vulnerable " << r.count_vulnerable() << ", errors "
      << r.count_errors() << ")\n";
  out << "- provider calls: " << r.provider_calls() << "\n";
  out << "- similarity check: " << (r.settings.simcheck ? "on" : "off") << ", k=" << r.settings.k
      << ", delta=" << r.settings.delta << "\n\n";

  out << "| # | unit | category | verdict | confidence |\n|---|---|---|---|---|\n";
  for (const auto& u : r.units) {
    out << "| " << u.position << " | `" << u.unit_id << "` | " << to_string(u.category) << " | ";
    if (!u.verdict)
      out << "error | - |\n";
    else
      out << (u.verdict->is_vulnerable ? "**vulnerable**: " + u.verdict->vuln_type : std::string("clean"))
          << " | " << to_string(u.verdict->confidence) << " |\n";
  }

  for (const auto& u : r.units) {
    if (!u.error && !(u.verdict && u.verdict->is_vulnerable)) continue;
    out << "\n## " << u.unit_id << "\n\n";
    if (u.error) {
      out << "Review failed (" << to_string(u.error->kind) << "): " << u.error->message << "\n";
      continue;
    }
    out << u.verdict->explanation << "\n";
    for (const auto& m : u.matches)
      if (m.injected) out << "\n- reference `" << m.match.entry_id << "` similarity " << m.match.similarity;
    out << "\n";
  }
  if (!r.warnings.empty()) {
    out << "\n## Warnings\n\n";
    for (const auto& w : r.warnings) out << "- " << w << "\n";
  }
}

EvalMetrics EvalMetrics::from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  EvalMetrics m;
  m.tp = tp;
  m.tn = tn;
  m.fp = fp;
  m.fn = fn;
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.accuracy = ratio(tp + tn, m.total());
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

std::string format_metric(const std::optional<double>& value, int decimals) {
  if (!value) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *value);
  return buf;
}

nlohmann::json metrics_to_json(const EvalMetrics& m) {
  const auto value = [](const std::optional<double>& v) { return v ? json(*v) : json("n/a"); };
  return {{"tp", m.tp},
          {"tn", m.tn},
          {"fp", m.fp},
          {"fn", m.fn},
          {"precision", value(m.precision)},
          {"recall", value(m.recall)},
          {"f1", value(m.f1)},
          {"accuracy", value(m.accuracy)}};
}

void write_metrics_table(const EvalMetrics& m, std::ostream& out) {
  out << "samples    " << m.total() << "\n";
  out << "tp " << m.tp << "  tn " << m.tn << "  fp " << m.fp << "  fn " << m.fn << "\n";
  out << "precision  " << format_metric(m.precision) << "\n";
  out << "recall     " << format_metric(m.recall) << "\n";
  out << "f1         " << format_metric(m.f1) << "\n";
  out << "accuracy   " << format_metric(m.accuracy) << "\n";
}

}  // namespace simaudit
