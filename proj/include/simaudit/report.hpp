#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simaudit/agents.hpp"
#include "simaudit/callgraph.hpp"
#include "simaudit/errors.hpp"
#include "simaudit/simindex.hpp"
#include "simaudit/sol_extract.hpp"

namespace simaudit {

inline constexpr const char* kReportSchemaVersion = "1.0";

struct ScanSettings {
  std::size_t k = 3;
  double delta = kDefaultDelta;
  bool simcheck = true;
  std::string llm_provider;
  std::string embedder;  // empty when no retrieval ran
  std::string model;
};

enum class CloneSource { None, Hash, Embedding };

std::string_view to_string(CloneSource source);

struct UnitError {
  ErrorKind kind = ErrorKind::ProviderError;
  std::string message;
  std::optional<std::string> raw_response;
};

struct RetrievedMatch {
  SimilarityMatch match;
  /// Passed to the Detector as a reference snippet.
  bool injected = false;
};

struct UnitRecord {
  std::size_t position = 0;
  std::string unit_id;
  UnitKind kind = UnitKind::Function;
  std::string contract;
  std::string name;
  std::string file_path;
  std::string content_hash;
  SimilarityCategory category = SimilarityCategory::Dissimilar;
  CloneSource clone_source = CloneSource::None;
  std::vector<RetrievedMatch> matches;
  std::vector<CalleeSummary> callee_summaries;
  /// Unset iff the debate failed; `error` says why.
  std::optional<Verdict> verdict;
  std::optional<UnitError> error;
  std::size_t provider_calls = 0;
  DebateTranscript transcript;
};

struct CallgraphSummary {
  std::size_t vertices = 0;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<UnresolvedCall> unresolved;
  std::vector<std::string> self_recursive;
  /// SCC groups with more than one member.
  std::vector<std::vector<std::string>> cycles;
};

struct ScanTiming {
  std::string started_at;
  double elapsed_ms = 0.0;
};

/// Result of one scan. Records follow the schedule; every scheduled unit
/// has exactly one.
struct ScanReport {
  std::string tool_version;
  std::vector<std::string> inputs;
  std::string index_path;
  ScanSettings settings;
  CallgraphSummary callgraph;
  std::vector<UnitRecord> units;
  std::vector<std::string> warnings;
  ScanTiming timing;

  std::size_t count_vulnerable() const;
  std::size_t count_errors() const;
  std::size_t provider_calls() const;
};

/// The "timing" block is the only part that varies between identical runs.
nlohmann::json report_to_json(const ScanReport& report, bool include_timing = true);
void write_report_json(const ScanReport& report, std::ostream& out, bool include_timing = true);
void write_report_markdown(const ScanReport& report, std::ostream& out);

/// Confusion-matrix metrics. A ratio with a zero denominator is unset.
struct EvalMetrics {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> accuracy;

  static EvalMetrics from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);
  std::size_t total() const { return tp + tn + fp + fn; }
};

/// "n/a" for an undefined metric, otherwise fixed-point with `decimals` places.
std::string format_metric(const std::optional<double>& value, int decimals = 4);

/// Metrics as JSON; undefined ratios are the string "n/a".
nlohmann::json metrics_to_json(const EvalMetrics& metrics);
void write_metrics_table(const EvalMetrics& metrics, std::ostream& out);

}  // namespace simaudit
