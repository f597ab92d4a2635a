#pragma once

#include <nlohmann/json.hpp>

#include "simaudit/corpus.hpp"
#include "simaudit/sol_extract.hpp"

namespace simaudit::detail {

using nlohmann::json;

json unit_to_json(const FunctionUnit& unit);
FunctionUnit unit_from_json(const json& j);

json entry_to_json(const CorpusEntry& entry);
CorpusEntry entry_from_json(const json& j, const std::string& provider_id);

}  // namespace simaudit::detail
