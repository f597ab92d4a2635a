#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simaudit/corpus.hpp"
#include "simaudit/embedding.hpp"

namespace simaudit {

/// Turns code into fixed-dimension vectors.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;
};

/// Deterministic offline embedder: a bag of hashed byte trigrams, projected
/// to `dimension` coordinates with a fixed-seed random +/-1 matrix, then
/// L2-normalized.
class FallbackEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDimension = 384;
  static constexpr std::uint64_t kSeed = 0x5eed'c0de'2024'0065ULL;

  explicit FallbackEmbedder(std::size_t dimension = kDefaultDimension);

  std::string id() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

  EmbeddingVector embed_one(std::string_view text) const;

 private:
  std::size_t dimension_;
};

struct RemoteEmbedderConfig {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string api_key;
  std::string provider_id = "remote";
  std::size_t dimension = 384;
  int timeout_seconds = 30;
};

/// POSTs {"texts": [...]} and expects {"vectors": [[...], ...]}.
/// A failed request is retried once, then Error(ProviderUnavailable).
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  std::string id() const override { return config_.provider_id; }
  std::size_t dimension() const override { return config_.dimension; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

 private:
  RemoteEmbedderConfig config_;
};

/// Embeds one text. Throws Error(EmptyText) when `text` is blank.
EmbeddingVector embed(std::string_view text, EmbeddingProvider& provider);

enum class SimilarityCategory { Clone, Similar, Dissimilar };

std::string_view to_string(SimilarityCategory category);

struct SimilarityScore {
  double distance = 0.0;
  double similarity = 1.0;
};

/// distance = |e1 - e2| / (|e1| + |e2|), similarity = 1 - distance.
/// Two zero vectors are identical (distance 0). Not scale invariant:
/// similarity(a, 2a) = 2/3. Throws Error(DimensionMismatch).
SimilarityScore similarity(const EmbeddingVector& e1, const EmbeddingVector& e2);
SimilarityScore similarity(std::span<const double> e1, std::span<const double> e2);

inline constexpr double kDefaultDelta = 0.65;
inline constexpr double kCloneTolerance = 1e-9;

/// Clone when similarity is 1 within kCloneTolerance, Similar when above
/// delta, otherwise Dissimilar.
SimilarityCategory classify(double similarity, double delta = kDefaultDelta);

struct SimilarityMatch {
  std::string entry_id;
  double distance = 0.0;
  double similarity = 0.0;
  SimilarityCategory category = SimilarityCategory::Dissimilar;

  friend bool operator==(const SimilarityMatch&, const SimilarityMatch&) = default;
};

/// Exact scan over every entry. Returns the k best matches by descending
/// similarity, ties by ascending entry_id. Matches at or below delta are
/// kept, tagged Dissimilar. Throws Error(ProviderMismatch) when an entry is
/// not embedded by target's provider.
std::vector<SimilarityMatch> query_top_k(const EmbeddingVector& target, const CorpusIndex& index,
                                         std::size_t k = 3, double delta = kDefaultDelta);

/// Embeds every entry's normalized source with `provider` and records the
/// provider in the index meta. Entries are sent in batches of `batch`.
void embed_corpus(CorpusIndex& index, EmbeddingProvider& provider, std::size_t batch = 64);

}  // namespace simaudit
