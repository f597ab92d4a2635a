#include "simaudit/scan.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include "simaudit/errors.hpp"

#ifndef SIMAUDIT_VERSION
#define SIMAUDIT_VERSION "0.0.0"
#endif

namespace simaudit {

namespace fs = std::filesystem;

std::string tool_version() { return SIMAUDIT_VERSION; }

std::vector<fs::path> collect_sol_files(const std::vector<fs::path>& inputs) {
  std::set<fs::path> found;
  for (const auto& input : inputs) {
    std::error_code ec;
    if (fs::is_directory(input, ec)) {
      for (auto it = fs::recursive_directory_iterator(input, ec); !ec && it != fs::end(it);
           it.increment(ec))
        if (it->is_regular_file() && it->path().extension() == ".sol")
          found.insert(it->path().lexically_normal());
      if (ec) throw Error(ErrorKind::Io, "cannot walk " + input.string() + ": " + ec.message());
    } else if (fs::is_regular_file(input, ec)) {
      found.insert(input.lexically_normal());
    } else {
      throw Error(ErrorKind::Io, "input " + input.string() + " does not exist");
    }
  }
  return {found.begin(), found.end()};
}

std::vector<SourceFile> read_sources(const std::vector<fs::path>& files) {
  std::vector<SourceFile> out;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    out.push_back({path.generic_string(),
                   std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>())});
  }
  return out;
}

ScanPlan plan_scan(const std::vector<SourceFile>& sources) {
  ScanPlan plan;
  for (const auto& file : sources) {
    auto units = extract_units(file.contents, file.path);
    if (units.empty()) plan.warnings.push_back(file.path + ": no function bodies found");
    std::move(units.begin(), units.end(), std::back_inserter(plan.units));
  }
  // Extraction order follows the caller's file order; sorting keeps every
  // later step independent of it.
  std::sort(plan.units.begin(), plan.units.end(),
            [](const FunctionUnit& a, const FunctionUnit& b) { return a.unit_id < b.unit_id; });
  plan.graph = build_graph(plan.units);
  plan.schedule = topo_order(plan.graph);
  return plan;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Retrieval {
  SimilarityCategory category = SimilarityCategory::Dissimilar;
  CloneSource clone_source = CloneSource::None;
  std::vector<RetrievedMatch> matches;
  std::vector<ReferenceMatch> references;
};

Retrieval retrieve(const FunctionUnit& unit, const ScanContext& ctx, const ScanOptions& options) {
  Retrieval r;
  if (!options.simcheck || !ctx.index || ctx.index->empty()) return r;

  if (const auto* clone = ctx.index->find_clone(unit)) {
    SimilarityMatch m{clone->entry_id, 0.0, 1.0, SimilarityCategory::Clone};
    r.category = SimilarityCategory::Clone;
    r.clone_source = CloneSource::Hash;
    r.matches.push_back({m, true});
    r.references.push_back(make_reference(m, *clone));
    return r;
  }
  if (!ctx.embedder) return r;

  const auto target = embed(unit.normalized_source, *ctx.embedder);
  const auto top = query_top_k(target, *ctx.index, options.k, options.delta);
  if (top.empty()) return r;
  r.category = top.front().category;
  if (r.category == SimilarityCategory::Clone) r.clone_source = CloneSource::Embedding;
  for (const auto& m : top) {
    // A clone task is settled by its best match alone.
    const bool inject = r.category == SimilarityCategory::Clone ? r.references.empty()
                                                                : m.category != SimilarityCategory::Dissimilar;
    r.matches.push_back({m, inject});
    if (inject) r.references.push_back(make_reference(m, *ctx.index->find(m.entry_id)));
  }
  return r;
}

bool recoverable(ErrorKind kind) {
  return kind == ErrorKind::ProviderError || kind == ErrorKind::ParseError ||
         kind == ErrorKind::ProviderUnavailable;
}

}  // namespace

ScanReport run_scan(const ScanPlan& plan, const ScanContext& ctx, const ScanOptions& options) {
  if (!ctx.llm || !ctx.configs || !ctx.templates)
    throw std::invalid_argument("run_scan needs an LLM provider, agent configs and templates");
  if (options.k == 0) throw Error(ErrorKind::Usage, "k must be at least 1");
  if (!(options.delta >= 0.0 && options.delta <= 1.0)) throw Error(ErrorKind::Usage, "delta must lie in [0, 1]");

  const auto started = std::chrono::steady_clock::now();
  ScanReport report;
  report.tool_version = tool_version();
  report.timing.started_at = utc_now();
  report.index_path = ctx.index_path;
  report.settings = {options.k, options.delta, options.simcheck, ctx.llm->id(),
                     ctx.embedder && options.simcheck ? ctx.embedder->id() : std::string(),
                     (*ctx.configs)[AgentRole::Detector].model_name};
  report.warnings = plan.warnings;

  if (options.simcheck && ctx.index && ctx.embedder && !ctx.index->empty() &&
      ctx.index->meta().embedder_id != ctx.embedder->id())
    throw Error(ErrorKind::ProviderMismatch, "index was embedded by '" + ctx.index->meta().embedder_id +
                                                 "', scan uses '" + ctx.embedder->id() + "'");
  if (options.simcheck && !ctx.index) report.warnings.push_back("no index given; similarity check skipped");

  report.callgraph.vertices = plan.graph.vertices.size();
  report.callgraph.edges.assign(plan.graph.edges.begin(), plan.graph.edges.end());
  report.callgraph.unresolved = plan.graph.unresolved;
  report.callgraph.self_recursive = plan.graph.self_recursive;
  for (const auto& group : plan.schedule.scc_groups)
    if (group.size() > 1) report.callgraph.cycles.push_back(group);

  std::map<std::string, const FunctionUnit*> by_id;
  for (const auto& u : plan.units) by_id[u.unit_id] = &u;
  std::map<std::string, std::string> summaries;  // scanned unit -> one-line summary

  for (std::size_t pos = 0; pos < plan.schedule.order.size(); ++pos) {
    const auto& unit = *by_id.at(plan.schedule.order[pos]);
    UnitRecord rec;
    rec.position = pos;
    rec.unit_id = unit.unit_id;
    rec.kind = unit.kind;
    rec.contract = unit.contract;
    rec.name = unit.name;
    rec.file_path = unit.file_path;
    rec.content_hash = unit.content_hash;

    DetectionTask task;
    task.unit = unit;
    for (const auto& callee : plan.graph.callees(unit.unit_id))
      if (auto it = summaries.find(callee); it != summaries.end())
        task.callee_summaries.push_back({callee, it->second});
    rec.callee_summaries = task.callee_summaries;

    try {
      auto found = retrieve(unit, ctx, options);
      rec.category = task.category = found.category;
      rec.clone_source = found.clone_source;
      rec.matches = std::move(found.matches);
      task.matches = std::move(found.references);

      auto result = run_debate(task, *ctx.llm, *ctx.configs, *ctx.templates);
      rec.verdict = result.verdict;
      rec.provider_calls = result.provider_calls;
      rec.transcript = std::move(result.transcript);
      summaries[unit.unit_id] = summarize(result.verdict);
    } catch (const ParseError& e) {
      rec.error = UnitError{e.kind(), e.what(), e.raw_response()};
      summaries[unit.unit_id] = "review failed";
    } catch (const Error& e) {
      if (!recoverable(e.kind())) throw;
      rec.error = UnitError{e.kind(), e.what(), std::nullopt};
      summaries[unit.unit_id] = "review failed";
    }
    report.units.push_back(std::move(rec));
  }

  report.timing.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ScanReport scan_sources(const std::vector<SourceFile>& sources, const ScanContext& ctx,
                        const ScanOptions& options) {
  auto report = run_scan(plan_scan(sources), ctx, options);
  for (const auto& s : sources) report.inputs.push_back(s.path);
  return report;
}

std::unique_ptr<EmbeddingProvider> builtin_embedder_for(const CorpusIndex& index) {
  const auto& meta = index.meta();
  if (meta.embedder_id.empty()) return std::make_unique<FallbackEmbedder>();
  if (meta.dimension == 0) return nullptr;
  auto fallback = std::make_unique<FallbackEmbedder>(meta.dimension);
  if (fallback->id() != meta.embedder_id) return nullptr;
  return fallback;
}

}  // namespace simaudit
