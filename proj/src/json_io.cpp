#include "json_io.hpp"

#include "simaudit/errors.hpp"

namespace simaudit::detail {

json unit_to_json(const FunctionUnit& u) {
  return json{{"unit_id", u.unit_id},
              {"kind", to_string(u.kind)},
              {"name", u.name},
              {"contract", u.contract},
              {"file_path", u.file_path},
              {"raw_source", u.raw_source},
              {"normalized_source", u.normalized_source},
              {"content_hash", u.content_hash},
              {"declared_calls", u.declared_calls},
              {"source_span", {u.source_span.begin, u.source_span.end}}};
}

FunctionUnit unit_from_json(const json& j) {
  FunctionUnit u;
  u.unit_id = j.at("unit_id").get<std::string>();
  u.kind = unit_kind_from_string(j.at("kind").get<std::string>());
  u.name = j.at("name").get<std::string>();
  u.contract = j.at("contract").get<std::string>();
  u.file_path = j.at("file_path").get<std::string>();
  u.raw_source = j.at("raw_source").get<std::string>();
  u.normalized_source = j.at("normalized_source").get<std::string>();
  u.content_hash = j.at("content_hash").get<std::string>();
  u.declared_calls = j.at("declared_calls").get<std::vector<std::string>>();
  const auto& span = j.at("source_span");
  u.source_span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
  return u;
}

json entry_to_json(const CorpusEntry& e) {
  json j{{"entry_id", e.entry_id},
         {"package", e.package},
         {"version", e.version},
         {"label", to_string(e.label)},
         {"vuln_note", e.vuln_note ? json(*e.vuln_note) : json(nullptr)},
         {"unit", unit_to_json(e.unit)}};
  j["embedding"] = e.embedding ? json(e.embedding->values) : json(nullptr);
  return j;
}

CorpusEntry entry_from_json(const json& j, const std::string& provider_id) {
  CorpusEntry e;
  e.entry_id = j.at("entry_id").get<std::string>();
  e.package = j.at("package").get<std::string>();
  e.version = j.at("version").get<std::string>();
  const auto label = j.at("label").get<std::string>();
  if (label == "vulnerable")
    e.label = Label::Vulnerable;
  else if (label == "clean")
    e.label = Label::Clean;
  else
    throw Error(ErrorKind::FileCorrupt, "unknown label '" + label + "'");
  if (!j.at("vuln_note").is_null()) e.vuln_note = j.at("vuln_note").get<std::string>();
  e.unit = unit_from_json(j.at("unit"));
  if (!j.at("embedding").is_null())
    e.embedding = EmbeddingVector{j.at("embedding").get<std::vector<double>>(), provider_id};
  return e;
}

}  // namespace simaudit::detail
