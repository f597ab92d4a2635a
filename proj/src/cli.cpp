#include "simaudit/cli.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "simaudit/config.hpp"
#include "simaudit/corpus.hpp"
#include "simaudit/csv.hpp"
#include "simaudit/errors.hpp"
#include "simaudit/scan.hpp"

namespace simaudit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct IndexArgs {
  std::string archives;
  std::string labels;
  std::string out;
  std::string embedder = "fallback";
  std::size_t dimension = FallbackEmbedder::kDefaultDimension;
  std::string config;
};

struct ProviderArgs {
  std::string index;
  std::string provider = "remote";
  std::string mock_fixture;
  std::string embedder = "auto";
  std::string templates;
  std::string model;
  std::string config;
  std::size_t k = 3;
  double delta = kDefaultDelta;
  bool no_simcheck = false;
};

struct ScanArgs {
  std::vector<std::string> inputs;
  std::string report = "-";
  std::string markdown;
  std::string callgraph;
  bool fail_on_findings = false;
};

struct EvalArgs {
  std::string dataset;
  std::string labels;
  std::string out;
};

std::string utc_now() {
  const auto now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  return out;
}

int cmd_index(const IndexArgs& a, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(a.archives)) throw Error(ErrorKind::Io, "archive directory " + a.archives + " not found");
  std::vector<fs::path> archives;
  for (const auto& e : fs::directory_iterator(a.archives)) {
    const auto name = e.path().filename().string();
    const bool tarball = name.ends_with(".tar.gz") || name.ends_with(".tgz");
    if (e.is_regular_file() && tarball) archives.push_back(e.path());
  }
  std::sort(archives.begin(), archives.end());

  CorpusIndex index;
  for (const auto& path : archives) {
    const auto [package, version] = package_from_archive_name(path);
    const auto rep = ingest_archive(path, package, version, index);
    for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
  }
  if (!a.labels.empty()) {
    const auto rep = apply_labels(index, fs::path(a.labels));
    for (const auto& row : rep.no_match)
      err << "warning: " << a.labels << ":" << row.line << ": matched no entry (" << row.match_kind << " "
          << row.match_value << ")\n";
  }

  std::unique_ptr<EmbeddingProvider> embedder;
  if (a.embedder == "remote") {
    const auto config = load_config(opt_path(a.config));
    embedder = std::make_unique<RemoteEmbedder>(config.embedder);
  } else {
    embedder = std::make_unique<FallbackEmbedder>(a.dimension);
  }
  embed_corpus(index, *embedder);
  index.meta().created_at = utc_now();
  save_index(index, a.out);

  const auto s = index.stats();
  out << "files=" << s.files_seen << " functions_seen=" << s.functions_seen
      << " functions_kept=" << s.functions_kept << "\n";
  return 0;
}

/// Providers and templates shared by scan and eval.
class Session {
 public:
  explicit Session(const ProviderArgs& a) : templates_(PromptTemplates::builtin()) {
    const auto config = load_config(opt_path(a.config));
    if (a.provider == "mock") {
      if (a.mock_fixture.empty()) throw Error(ErrorKind::Usage, "--provider mock needs --mock-fixture");
      llm_ = MockLlmProvider::from_file(a.mock_fixture);
    } else {
      llm_ = std::make_unique<RemoteLlmProvider>(config.llm);
    }
    configs_.set_model(a.model.empty() ? config.model : a.model);
    if (!a.templates.empty()) templates_ = PromptTemplates::with_overrides(a.templates);

    if (!a.index.empty() && !a.no_simcheck) {
      index_ = load_index(a.index);
      if (a.embedder == "remote") {
        embedder_ = std::make_unique<RemoteEmbedder>(config.embedder);
      } else {
        embedder_ = builtin_embedder_for(*index_);
        if (!embedder_ && a.embedder == "fallback")
          throw Error(ErrorKind::ProviderMismatch,
                      "index was embedded by '" + index_->meta().embedder_id + "', not the built-in embedder");
        if (!embedder_) embedder_ = std::make_unique<RemoteEmbedder>(config.embedder);
      }
    }
    options_ = {a.k, a.delta, !a.no_simcheck};
    ctx_ = {index_ ? &*index_ : nullptr, a.index, embedder_.get(), llm_.get(), &configs_, &templates_};
  }

  ScanReport scan(const std::vector<SourceFile>& sources) const {
    return scan_sources(sources, ctx_, options_);
  }

  ScanPlan plan(const std::vector<SourceFile>& sources) const { return plan_scan(sources); }

 private:
  std::unique_ptr<LlmProvider> llm_;
  std::unique_ptr<EmbeddingProvider> embedder_;
  std::optional<CorpusIndex> index_;
  AgentConfigs configs_;
  PromptTemplates templates_;
  ScanOptions options_;
  ScanContext ctx_;
};

int cmd_scan(const ProviderArgs& p, const ScanArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> inputs(a.inputs.begin(), a.inputs.end());
  const auto sources = read_sources(collect_sol_files(inputs));
  if (sources.empty()) throw Error(ErrorKind::Io, "no .sol files found in the inputs");

  Session session(p);
  const auto plan = session.plan(sources);
  if (!a.callgraph.empty()) {
    auto dot = open_out(a.callgraph);
    write_dot(dot, plan.graph);
  }
  auto report = session.scan(sources);

  if (a.report == "-") {
    write_report_json(report, out);
  } else {
    auto f = open_out(a.report);
    write_report_json(report, f);
  }
  if (!a.markdown.empty()) {
    auto f = open_out(a.markdown);
    write_report_markdown(report, f);
  }
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  err << "scanned " << report.units.size() << " units: " << report.count_vulnerable() << " vulnerable, "
      << report.count_errors() << " errors, " << report.provider_calls() << " provider calls\n";
  return a.fail_on_findings && report.count_vulnerable() > 0 ? kExitFindings : 0;
}

std::optional<bool> parse_label(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (text == "positive" || text == "vulnerable" || text == "1" || text == "true") return true;
  if (text == "negative" || text == "clean" || text == "0" || text == "false") return false;
  return std::nullopt;
}

std::map<std::string, bool> read_sample_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open label file " + path);
  const auto rows = parse_csv(in, path);
  if (rows.empty() || rows.front().fields != std::vector<std::string>{"sample", "label"})
    throw Error(ErrorKind::LabelFileMalformed, path + ": header must be 'sample,label'");
  std::map<std::string, bool> labels;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto where = path + ":" + std::to_string(r.line);
    if (r.fields.size() != 2) throw Error(ErrorKind::LabelFileMalformed, where + ": expected 2 fields");
    const auto label = parse_label(r.fields[1]);
    if (!label) throw Error(ErrorKind::LabelFileMalformed, where + ": label must be positive or negative");
    if (!labels.emplace(r.fields[0], *label).second)
      throw Error(ErrorKind::LabelFileMalformed, where + ": sample '" + r.fields[0] + "' labeled twice");
  }
  return labels;
}

struct Sample {
  std::string name;
  std::vector<fs::path> files;
};

/// A sample is a top-level .sol file or a directory of them.
std::vector<Sample> list_samples(const fs::path& dataset) {
  if (!fs::is_directory(dataset)) throw Error(ErrorKind::Io, "dataset directory " + dataset.string() + " not found");
  std::vector<Sample> samples;
  for (const auto& e : fs::directory_iterator(dataset)) {
    if (e.is_directory()) {
      auto files = collect_sol_files({e.path()});
      if (!files.empty()) samples.push_back({e.path().filename().string(), std::move(files)});
    } else if (e.is_regular_file() && e.path().extension() == ".sol") {
      samples.push_back({e.path().filename().string(), {e.path()}});
    }
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.name < b.name; });
  return samples;
}

int cmd_eval(const ProviderArgs& p, const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto labels = read_sample_labels(a.labels);
  const auto samples = list_samples(a.dataset);

  std::vector<std::pair<const Sample*, bool>> labeled;
  for (const auto& s : samples) {
    auto it = labels.find(s.name);
    if (it == labels.end()) it = labels.find(fs::path(s.name).stem().string());
    if (it == labels.end()) throw Error(ErrorKind::LabelFileMalformed, "sample '" + s.name + "' has no label");
    labeled.emplace_back(&s, it->second);
  }

  Session session(p);
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0, errored = 0;
  json rows = json::array();
  for (const auto& [sample, expected] : labeled) {
    const auto report = session.scan(read_sources(sample->files));
    const bool predicted = report.count_vulnerable() > 0;
    if (report.count_errors() > 0) ++errored;
    if (predicted && expected) ++tp;
    if (predicted && !expected) ++fp;
    if (!predicted && expected) ++fn;
    if (!predicted && !expected) ++tn;
    rows.push_back({{"sample", sample->name},
                    {"expected", expected ? "positive" : "negative"},
                    {"predicted", predicted ? "positive" : "negative"},
                    {"units", report.units.size()},
                    {"unit_errors", report.count_errors()}});
  }

  const auto metrics = EvalMetrics::from_counts(tp, tn, fp, fn);
  json result{{"metrics", metrics_to_json(metrics)},
              {"simcheck", !p.no_simcheck},
              {"samples_with_errors", errored},
              {"samples", std::move(rows)}};
  write_metrics_table(metrics, out);
  if (errored > 0) err << "warning: " << errored << " samples had units whose review failed\n";
  if (a.out.empty()) {
    out << "\n" << result.dump(2) << "\n";
  } else {
    auto f = open_out(a.out);
    f << result.dump(2) << "\n";
  }
  return 0;
}

void add_provider_options(CLI::App* cmd, ProviderArgs& p) {
  cmd->add_option("--index", p.index, "Reference index written by 'simaudit index'");
  cmd->add_option("--provider", p.provider, "LLM provider")
      ->check(CLI::IsMember({"mock", "remote"}))
      ->capture_default_str();
  cmd->add_option("--mock-fixture", p.mock_fixture, "Canned responses for --provider mock");
  cmd->add_option("--embedder", p.embedder, "Embedding provider for queries")
      ->check(CLI::IsMember({"auto", "fallback", "remote"}))
      ->capture_default_str();
  cmd->add_option("--k", p.k, "References retrieved per function")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--delta", p.delta, "Similarity threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_flag("--no-simcheck", p.no_simcheck, "Skip clone check and reference retrieval");
  cmd->add_option("--templates", p.templates, "Directory of prompt template overrides");
  cmd->add_option("--model", p.model, "Model name sent to the LLM endpoint");
  cmd->add_option("--config", p.config, "JSON provider configuration");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Similarity-guided multi-agent auditing of Solidity contracts", "simaudit"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  IndexArgs ia;
  auto* index = app.add_subcommand("index", "Build a reference index from package archives");
  index->add_option("--archives", ia.archives, "Directory of <package>-<version>.tar.gz archives")->required();
  index->add_option("--labels", ia.labels, "CSV marking vulnerable reference functions");
  index->add_option("--out", ia.out, "Index file to write")->required();
  index->add_option("--embedder", ia.embedder, "Embedding provider")
      ->check(CLI::IsMember({"fallback", "remote"}))
      ->capture_default_str();
  index->add_option("--dimension", ia.dimension, "Dimension of the built-in embedder")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  index->add_option("--config", ia.config, "JSON provider configuration");

  ProviderArgs pa;
  ScanArgs sa;
  auto* scan = app.add_subcommand("scan", "Audit Solidity sources");
  scan->add_option("--input", sa.inputs, ".sol files or directories")->required();
  scan->add_option("--report", sa.report, "JSON report path, '-' for stdout")->capture_default_str();
  scan->add_option("--markdown", sa.markdown, "Also write a Markdown report");
  scan->add_option("--emit-callgraph", sa.callgraph, "Write the call graph as Graphviz DOT");
  scan->add_flag("--fail-on-findings", sa.fail_on_findings, "Exit 1 when any function is flagged");
  add_provider_options(scan, pa);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score verdicts against labeled samples");
  eval->add_option("--dataset", ea.dataset, "Directory of samples (.sol files or directories)")->required();
  eval->add_option("--labels", ea.labels, "CSV with header sample,label")->required();
  eval->add_option("--out", ea.out, "Write metrics JSON here instead of stdout");
  add_provider_options(eval, pa);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "simaudit: " << e.what() << "\n";
    return exit_code_for(ErrorKind::Usage);
  }

  try {
    if (index->parsed()) return cmd_index(ia, out, err);
    if (scan->parsed()) return cmd_scan(pa, sa, out, err);
    return cmd_eval(pa, ea, out, err);
  } catch (const Error& e) {
    err << "simaudit: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "simaudit: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace simaudit::cli
