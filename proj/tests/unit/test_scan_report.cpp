#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "simaudit/cli.hpp"
#include "simaudit/config.hpp"
#include "simaudit/errors.hpp"
#include "simaudit/report.hpp"
#include "simaudit/scan.hpp"
#include "support.hpp"

using namespace simaudit;
using namespace simaudit::testing;
using nlohmann::json;

namespace {

const char* kChain =
    "contract K {\n"
    "  function A() public { B(); }\n"
    "  function B() internal { C(); }\n"
    "  function C() internal {}\n"
    "}\n";

std::unique_ptr<MockLlmProvider> scripted() { return MockLlmProvider::from_file(fixture_dir() / "e2e/mock.json"); }

struct Harness {
  FallbackEmbedder embedder;
  CorpusIndex index = e2e_index(embedder);
  std::unique_ptr<MockLlmProvider> llm = scripted();
  AgentConfigs configs;
  PromptTemplates templates = PromptTemplates::builtin();

  ScanContext ctx(bool with_index = true) {
    return {with_index ? &index : nullptr, with_index ? "e2e.idx" : "", with_index ? &embedder : nullptr,
            llm.get(), &configs, &templates};
  }
};

const UnitRecord& record(const ScanReport& r, const std::string& name) {
  for (const auto& u : r.units)
    if (u.name == name) return u;
  throw std::runtime_error("no record " + name);
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult simaudit_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "simaudit");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

/// Reference library packed the way the indexer expects it.
std::filesystem::path reference_archives(const TempDir& dir) {
  const auto archives = dir / "archives";
  std::filesystem::create_directories(archives);
  write_tar_gz(archives / "openzeppelin-contracts-2.5.0.tar.gz",
               members_from_dir(fixture_dir() / "e2e/reference", "openzeppelin-contracts-2.5.0"));
  return archives;
}

}  // namespace

TEST(Metrics, WorkedExample) {
  const auto m = EvalMetrics::from_counts(38, 63, 12, 30);
  EXPECT_NEAR(*m.precision, 0.76, 1e-12);
  EXPECT_NEAR(*m.recall, 38.0 / 68.0, 1e-12);
  EXPECT_NEAR(*m.accuracy, 101.0 / 143.0, 1e-12);
  EXPECT_EQ(format_metric(m.precision, 2), "0.76");
  EXPECT_EQ(format_metric(m.recall, 2), "0.56");
  EXPECT_EQ(format_metric(m.accuracy, 2), "0.71");
  EXPECT_EQ(format_metric(m.f1, 2), "0.64");
  EXPECT_EQ(m.total(), 143u);
}

TEST(Metrics, UndefinedRatiosAreNa) {
  const auto none_flagged = EvalMetrics::from_counts(0, 5, 0, 0);
  EXPECT_FALSE(none_flagged.precision);
  EXPECT_FALSE(none_flagged.recall);
  EXPECT_FALSE(none_flagged.f1);
  EXPECT_EQ(*none_flagged.accuracy, 1.0);
  EXPECT_EQ(format_metric(none_flagged.precision), "n/a");

  const auto all_wrong = EvalMetrics::from_counts(0, 0, 3, 2);
  EXPECT_EQ(*all_wrong.precision, 0.0);
  EXPECT_EQ(*all_wrong.recall, 0.0);
  EXPECT_FALSE(all_wrong.f1);

  const auto empty = EvalMetrics::from_counts(0, 0, 0, 0);
  EXPECT_FALSE(empty.accuracy);
  const auto j = metrics_to_json(empty);
  EXPECT_EQ(j["precision"], "n/a");
  EXPECT_EQ(j["accuracy"], "n/a");
  EXPECT_EQ(j["tp"], 0);
}

TEST(Metrics, RandomCountsMatchFormulas) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<std::size_t> count(0, 40);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t tp = count(rng), tn = count(rng), fp = count(rng), fn = count(rng);
    const auto m = EvalMetrics::from_counts(tp, tn, fp, fn);
    const double p = tp + fp ? double(tp) / double(tp + fp) : NAN;
    const double r = tp + fn ? double(tp) / double(tp + fn) : NAN;
    ASSERT_EQ(m.precision.has_value(), tp + fp > 0);
    ASSERT_EQ(m.recall.has_value(), tp + fn > 0);
    if (m.precision) {
      EXPECT_DOUBLE_EQ(*m.precision, p);
    }
    if (m.recall) {
      EXPECT_DOUBLE_EQ(*m.recall, r);
    }
    if (m.precision && m.recall && p + r > 0) {
      ASSERT_TRUE(m.f1);
      EXPECT_NEAR(*m.f1, 2.0 * double(tp) / double(2 * tp + fp + fn), 1e-12);
    } else {
      EXPECT_FALSE(m.f1);
    }
    if (m.total()) {
      EXPECT_DOUBLE_EQ(*m.accuracy, double(tp + tn) / double(m.total()));
    }
  }
}

TEST(Metrics, Table) {
  std::ostringstream out;
  write_metrics_table(EvalMetrics::from_counts(20, 0, 10, 0), out);
  EXPECT_NE(out.str().find("0.6667"), std::string::npos);
}

TEST(Scan, ChainIsReviewedCalleesFirst) {
  Harness h;
  const auto report = scan_sources({{"k.sol", kChain}}, h.ctx(false), {});
  ASSERT_EQ(report.units.size(), 3u);
  EXPECT_EQ(report.units[0].name, "C");
  EXPECT_EQ(report.units[1].name, "B");
  EXPECT_EQ(report.units[2].name, "A");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(report.units[i].position, i);
  EXPECT_EQ(report.units[1].callee_summaries,
            (std::vector<CalleeSummary>{{"k.sol::K::C#0", "not vulnerable (medium confidence)"}}));
  EXPECT_TRUE(report.units[0].callee_summaries.empty());
  EXPECT_EQ(report.callgraph.edges.size(), 2u);
  EXPECT_EQ(report.provider_calls(), 12u);
}

TEST(Scan, CalleeSummaryReachesDetectorPrompt) {
  Harness h;
  scan_sources({{"k.sol", kChain}}, h.ctx(false), {});
  const auto calls = h.llm->calls();
  const auto a_detector = std::find_if(calls.begin(), calls.end(), [](const ChatRequest& r) {
    return r.agent == AgentRole::Detector && r.messages[0].content.find("function A()") != std::string::npos;
  });
  ASSERT_NE(a_detector, calls.end());
  EXPECT_NE(a_detector->messages[0].content.find("- k.sol::K::B#0: not vulnerable"), std::string::npos);
}

TEST(Scan, TargetWithReferenceIndex) {
  Harness h;
  const auto report = scan_sources(e2e_target_sources(), h.ctx(), {});
  const auto& tf = record(report, "transferFrom");
  EXPECT_EQ(tf.category, SimilarityCategory::Similar);
  ASSERT_TRUE(tf.verdict);
  EXPECT_TRUE(tf.verdict->is_vulnerable);
  EXPECT_EQ(tf.provider_calls, 4u);
  EXPECT_TRUE(std::any_of(tf.matches.begin(), tf.matches.end(), [](const auto& m) { return m.injected; }));

  const auto& mint = record(report, "mint");
  EXPECT_EQ(mint.category, SimilarityCategory::Dissimilar);
  EXPECT_FALSE(mint.verdict->is_vulnerable);
  EXPECT_TRUE(std::none_of(mint.matches.begin(), mint.matches.end(), [](const auto& m) { return m.injected; }));

  for (const auto& u : report.units) {
    if (u.name == "transferFrom" || u.name == "mint") continue;
    EXPECT_EQ(u.category, SimilarityCategory::Clone) << u.unit_id;
    EXPECT_EQ(u.clone_source, CloneSource::Hash) << u.unit_id;
    EXPECT_EQ(u.provider_calls, 0u) << u.unit_id;
    EXPECT_EQ(u.verdict->decided_by, DecidedBy::CloneShortCircuit);
  }
  EXPECT_EQ(report.count_vulnerable(), 1u);
  EXPECT_EQ(report.provider_calls(), 8u);
}

TEST(Scan, ReferenceLibraryItselfIsAllClones) {
  Harness h;
  std::vector<SourceFile> sources;
  for (auto& m : members_from_dir(fixture_dir() / "e2e/reference", "ref")) sources.push_back({m.path, m.contents});
  const auto report = scan_sources(sources, h.ctx(), {});
  ASSERT_FALSE(report.units.empty());
  EXPECT_EQ(report.provider_calls(), 0u);
  EXPECT_EQ(h.llm->call_count(), 0u);
}

TEST(Scan, DeterministicAndOrderIndependent) {
  Harness h1, h2;
  auto sources = e2e_target_sources();
  const auto a = report_to_json(scan_sources(sources, h1.ctx(), {}), false);
  std::reverse(sources.begin(), sources.end());
  auto b = report_to_json(scan_sources(sources, h2.ctx(), {}), false);
  // Only the echoed input list follows the caller's order.
  b["inputs"] = a["inputs"];
  EXPECT_EQ(a.dump(2), b.dump(2));
}

TEST(Scan, NoSimcheckMeansDissimilarEverywhere) {
  Harness h;
  const auto report = scan_sources(e2e_target_sources(), h.ctx(), {3, kDefaultDelta, false});
  for (const auto& u : report.units) {
    EXPECT_EQ(u.category, SimilarityCategory::Dissimilar);
    EXPECT_TRUE(u.matches.empty());
  }
  EXPECT_FALSE(report.settings.simcheck);
  EXPECT_EQ(report.provider_calls(), 4 * report.units.size());
  EXPECT_EQ(report.count_vulnerable(), 0u);
}

TEST(Scan, FailedUnitDoesNotStopTheScan) {
  Harness h;
  h.llm = std::make_unique<MockLlmProvider>();
  h.llm->add_rule({AgentRole::Judge, std::nullopt, std::string("function B()"), "I refuse to use JSON."});
  h.llm->set_default(AgentRole::Detector, "```json\n{\"findings\": []}\n```");
  h.llm->set_default(AgentRole::Critic, "```json\n{\"rebuttals\": []}\n```");
  h.llm->set_default(AgentRole::Supporter, "```json\n{\"assessment\": \"ok\"}\n```");
  h.llm->set_default(AgentRole::Judge,
                     "```json\n{\"is_vulnerable\": false, \"vuln_type\": \"\", \"explanation\": \"\", \"confidence\": \"low\"}\n```");
  const auto report = scan_sources({{"k.sol", kChain}}, h.ctx(false), {});
  ASSERT_EQ(report.units.size(), 3u);
  const auto& b = record(report, "B");
  EXPECT_FALSE(b.verdict);
  ASSERT_TRUE(b.error);
  EXPECT_EQ(b.error->kind, ErrorKind::ParseError);
  EXPECT_EQ(b.error->raw_response, "I refuse to use JSON.");
  EXPECT_TRUE(record(report, "A").verdict);
  EXPECT_TRUE(record(report, "C").verdict);
  EXPECT_EQ(record(report, "A").callee_summaries[0].summary, "review failed");
  EXPECT_EQ(report.count_errors(), 1u);

  const auto j = report_to_json(report);
  const auto& jb = j["units"][1];
  EXPECT_EQ(jb["verdict"], "error");
  EXPECT_EQ(jb["error"]["kind"], "ParseError");
  EXPECT_EQ(jb["error"]["raw_response"], "I refuse to use JSON.");
  EXPECT_EQ(j["summary"]["error"], 1);
  EXPECT_EQ(j["summary"]["not_vulnerable"], 2);
}

TEST(Scan, EmbedderMismatchRejected) {
  Harness h;
  FallbackEmbedder other(64);
  auto ctx = h.ctx();
  ctx.embedder = &other;
  try {
    scan_sources(e2e_target_sources(), ctx, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ProviderMismatch);
  }
}

TEST(Scan, BadOptionsAreUsageErrors) {
  Harness h;
  for (const ScanOptions& o : {ScanOptions{0, 0.65, true}, ScanOptions{3, 1.5, true}}) {
    try {
      scan_sources({{"k.sol", kChain}}, h.ctx(false), o);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Usage);
    }
  }
}

TEST(Scan, UnlexableFileAbortsWithLocation) {
  Harness h;
  try {
    scan_sources({{"ok.sol", kChain}, {"bad.sol", "contract X { function f() {"}}, h.ctx(false), {});
    FAIL();
  } catch (const SourceError& e) {
    EXPECT_EQ(e.file(), "bad.sol");
  }
}

TEST(Scan, CollectsSolFilesSorted) {
  TempDir dir;
  write_file(dir / "b.sol", "contract B {}");
  std::filesystem::create_directories(dir / "sub");
  write_file(dir / "sub/a.sol", "contract A {}");
  write_file(dir / "notes.txt", "x");
  const auto files = collect_sol_files({dir.path(), dir / "b.sol"});
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "b.sol");
  EXPECT_EQ(files[1].filename(), "a.sol");
  EXPECT_THROW(collect_sol_files({dir / "missing"}), Error);
}

TEST(Report, JsonShape) {
  Harness h;
  const auto j = report_to_json(scan_sources(e2e_target_sources(), h.ctx(), {}));
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  for (const auto* key : {"tool_version", "inputs", "index", "settings", "callgraph", "units", "summary", "warnings", "timing"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["settings"]["embedder"], "fallback-trigram-v1-384");
  EXPECT_EQ(j["summary"]["vulnerable"], 1);
  EXPECT_EQ(j["summary"]["by_category"]["similar"], 1);
  EXPECT_EQ(j["summary"]["provider_calls"], 8);
  for (const auto& u : j["units"]) {
    EXPECT_TRUE(u["verdict"].is_object());
    EXPECT_TRUE(u["error"].is_null());
  }
  const auto no_timing = report_to_json(scan_sources(e2e_target_sources(), h.ctx(), {}), false);
  EXPECT_FALSE(no_timing.contains("timing"));
}

TEST(Report, Markdown) {
  Harness h;
  std::ostringstream md;
  write_report_markdown(scan_sources(e2e_target_sources(), h.ctx(), {}), md);
  EXPECT_NE(md.str().find("**vulnerable**: logic error"), std::string::npos);
  EXPECT_NE(md.str().find("## target/Token.sol::RedactedToken::transferFrom#0"), std::string::npos);
}

TEST(Config, FileAndEnvironment) {
  TempDir dir;
  write_file(dir / "c.json", R"({"llm": {"endpoint": "http://file/llm", "model": "m1", "timeout_seconds": 9},
                                 "embedder": {"endpoint": "http://file/emb", "id": "e5", "dimension": 768}})");
  const auto none = [](const char*) -> std::optional<std::string> { return std::nullopt; };
  const auto c = load_config(dir / "c.json", none);
  EXPECT_EQ(c.llm.endpoint, "http://file/llm");
  EXPECT_EQ(c.llm.timeout_seconds, 9);
  EXPECT_EQ(c.model, "m1");
  EXPECT_EQ(c.embedder.dimension, 768u);

  const auto env = [](const char* name) -> std::optional<std::string> {
    if (std::string(name) == "SIMAUDIT_LLM_ENDPOINT") return "http://env/llm";
    if (std::string(name) == "SIMAUDIT_LLM_KEY") return "secret";
    if (std::string(name) == "SIMAUDIT_EMBED_KEY") return "ek";
    return std::nullopt;
  };
  const auto e = load_config(dir / "c.json", env);
  EXPECT_EQ(e.llm.endpoint, "http://env/llm");
  EXPECT_EQ(e.llm.api_key, "secret");
  EXPECT_EQ(e.embedder.api_key, "ek");
  EXPECT_EQ(e.embedder.endpoint, "http://file/emb");

  EXPECT_EQ(load_config(std::nullopt, none).model, "gpt-4-turbo");
  write_file(dir / "bad.json", "{nope");
  try {
    load_config(dir / "bad.json", none);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::FileCorrupt);
  }
  EXPECT_THROW(load_config(dir / "absent.json", none), Error);
}

TEST(Cli, IndexEmptyDirectory) {
  TempDir dir;
  std::filesystem::create_directories(dir / "archives");
  const auto r = simaudit_cli({"index", "--archives", (dir / "archives").string(), "--out", (dir / "i.idx").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("functions_kept=0"), std::string::npos);
  EXPECT_TRUE(load_index(dir / "i.idx").empty());
}

TEST(Cli, IndexDeduplicatesSyntheticArchives) {
  TempDir dir;
  const auto corpus = make_synthetic_corpus(10, 4, 5);
  write_synthetic_archives(corpus, dir / "archives");
  const auto r = simaudit_cli({"index", "--archives", (dir / "archives").string(), "--out", (dir / "i.idx").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("functions_seen=10 functions_kept=6"), std::string::npos) << r.out;
  EXPECT_EQ(load_index(dir / "i.idx").size(), 6u);
}

TEST(Cli, CorruptArchiveIsNamed) {
  TempDir dir;
  std::filesystem::create_directories(dir / "archives");
  write_file(dir / "archives/broken-1.0.0.tar.gz", "definitely not gzip");
  const auto r = simaudit_cli({"index", "--archives", (dir / "archives").string(), "--out", (dir / "i.idx").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("broken-1.0.0.tar.gz"), std::string::npos) << r.err;
}

TEST(Cli, ScanWithMockFlagsTheTarget) {
  TempDir dir;
  const auto archives = reference_archives(dir);
  const auto idx = (dir / "ref.idx").string();
  ASSERT_EQ(simaudit_cli({"index", "--archives", archives.string(), "--out", idx}).code, 0);

  const auto mock = (fixture_dir() / "e2e/mock.json").string();
  const auto target = (fixture_dir() / "e2e/target").string();
  const auto r = simaudit_cli({"scan", "--input", target, "--index", idx, "--provider", "mock", "--mock-fixture", mock,
                               "--report", (dir / "r.json").string(), "--markdown", (dir / "r.md").string(),
                               "--emit-callgraph", (dir / "g.dot").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(read_file(dir / "r.json"));
  EXPECT_EQ(report["summary"]["vulnerable"], 1);
  EXPECT_EQ(report["summary"]["provider_calls"], 8);
  EXPECT_NE(read_file(dir / "g.dot").find("digraph"), std::string::npos);
  EXPECT_NE(read_file(dir / "r.md").find("logic error"), std::string::npos);

  const auto failing = simaudit_cli({"scan", "--input", target, "--index", idx, "--provider", "mock",
                                     "--mock-fixture", mock, "--fail-on-findings"});
  EXPECT_EQ(failing.code, cli::kExitFindings);
  EXPECT_EQ(json::parse(failing.out)["summary"]["vulnerable"], 1);

  const auto wrong_dim = simaudit_cli({"scan", "--input", target, "--index", idx, "--provider", "mock",
                                       "--mock-fixture", mock, "--embedder", "fallback", "--k", "0"});
  EXPECT_EQ(wrong_dim.code, 64);
}

TEST(Cli, UsageAndInputErrors) {
  EXPECT_EQ(simaudit_cli({}).code, 64);
  EXPECT_EQ(simaudit_cli({"scan"}).code, 64);
  EXPECT_EQ(simaudit_cli({"scan", "--input", "x.sol", "--bogus"}).code, 64);
  EXPECT_EQ(simaudit_cli({"scan", "--input", "x.sol", "--delta", "2"}).code, 64);
  const auto target = (fixture_dir() / "e2e/target").string();
  EXPECT_EQ(simaudit_cli({"scan", "--input", target, "--provider", "mock"}).code, 64);
  EXPECT_EQ(simaudit_cli({"scan", "--input", "/nonexistent/dir"}).code, 2);
  EXPECT_EQ(simaudit_cli({"--version"}).code, 0);
  EXPECT_EQ(simaudit_cli({"--help"}).code, 0);
}

TEST(Cli, EvalCountsSamples) {
  TempDir dir;
  const auto archives = reference_archives(dir);
  const auto idx = (dir / "ref.idx").string();
  ASSERT_EQ(simaudit_cli({"index", "--archives", archives.string(), "--out", idx}).code, 0);

  const auto data = dir / "dataset";
  std::filesystem::create_directories(data / "token");
  write_file(data / "token/Token.sol", read_file(fixture_dir() / "e2e/target/Token.sol"));
  write_file(data / "ctx.sol", read_file(fixture_dir() / "e2e/target/Context.sol"));
  write_file(data / "chain.sol", kChain);
  write_file(dir / "labels.csv", "sample,label\ntoken,positive\nctx,negative\nchain.sol,vulnerable\n");

  const auto mock = (fixture_dir() / "e2e/mock.json").string();
  const auto r = simaudit_cli({"eval", "--dataset", data.string(), "--labels", (dir / "labels.csv").string(), "--index",
                               idx, "--provider", "mock", "--mock-fixture", mock, "--out", (dir / "m.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = json::parse(read_file(dir / "m.json"));
  EXPECT_EQ(m["metrics"]["tp"], 1);
  EXPECT_EQ(m["metrics"]["tn"], 1);
  EXPECT_EQ(m["metrics"]["fn"], 1);
  EXPECT_EQ(m["metrics"]["fp"], 0);
  EXPECT_EQ(m["samples"].size(), 3u);

  write_file(dir / "short.csv", "sample,label\ntoken,positive\n");
  const auto missing = simaudit_cli({"eval", "--dataset", data.string(), "--labels", (dir / "short.csv").string(),
                                     "--provider", "mock", "--mock-fixture", mock});
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(missing.err.find("chain.sol"), std::string::npos) << missing.err;
}
