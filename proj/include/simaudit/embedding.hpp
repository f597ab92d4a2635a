#pragma once

#include <string>
#include <vector>

namespace simaudit {

/// Dense code embedding tagged with the provider that produced it.
struct EmbeddingVector {
  std::vector<double> values;
  std::string provider_id;

  std::size_t dimension() const { return values.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

}  // namespace simaudit
