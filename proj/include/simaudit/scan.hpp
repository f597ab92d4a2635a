#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "simaudit/agents.hpp"
#include "simaudit/callgraph.hpp"
#include "simaudit/corpus.hpp"
#include "simaudit/llm.hpp"
#include "simaudit/report.hpp"
#include "simaudit/simindex.hpp"

namespace simaudit {

struct SourceFile {
  std::string path;
  std::string contents;
};

/// `.sol` files named by `inputs`: files as given, directories walked
/// recursively. Sorted and de-duplicated. Throws Error(Io).
std::vector<std::filesystem::path> collect_sol_files(const std::vector<std::filesystem::path>& inputs);
std::vector<SourceFile> read_sources(const std::vector<std::filesystem::path>& files);

struct ScanOptions {
  std::size_t k = 3;
  double delta = kDefaultDelta;
  /// Off: no clone check and no retrieval; every task is Dissimilar.
  bool simcheck = true;
};

/// What a scan needs besides the sources. `index` and `embedder` may be
/// null, in which case retrieval is skipped.
struct ScanContext {
  const CorpusIndex* index = nullptr;
  std::string index_path;
  EmbeddingProvider* embedder = nullptr;
  LlmProvider* llm = nullptr;
  const AgentConfigs* configs = nullptr;
  const PromptTemplates* templates = nullptr;
};

/// Extracted units with their call graph and schedule.
struct ScanPlan {
  std::vector<FunctionUnit> units;
  CallGraph graph;
  ScanSchedule schedule;
  std::vector<std::string> warnings;
};

/// Extracts every file (a file that fails to lex aborts the scan), builds
/// the call graph and orders it callees first.
ScanPlan plan_scan(const std::vector<SourceFile>& sources);

/// Reviews every unit of `plan` in schedule order. Provider and parse
/// failures are recorded per unit; the scan carries on.
ScanReport run_scan(const ScanPlan& plan, const ScanContext& ctx, const ScanOptions& options);

/// plan_scan then run_scan; `inputs` lists the source paths in the report.
ScanReport scan_sources(const std::vector<SourceFile>& sources, const ScanContext& ctx,
                        const ScanOptions& options);

/// Embedding provider matching the one an index was built with, for the
/// built-in embedder. Null when the index needs a remote provider.
std::unique_ptr<EmbeddingProvider> builtin_embedder_for(const CorpusIndex& index);

std::string tool_version();

}  // namespace simaudit
