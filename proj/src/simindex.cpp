#include "simaudit/simindex.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "simaudit/errors.hpp"
#include "simaudit/http_client.hpp"

namespace simaudit {

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

void check_vector(const EmbeddingVector& v, std::size_t dimension) {
  if (v.dimension() != dimension)
    throw Error(ErrorKind::DimensionMismatch,
                "provider '" + v.provider_id + "' returned dimension " +
                    std::to_string(v.dimension()) + ", expected " + std::to_string(dimension));
  for (double x : v.values)
    if (!std::isfinite(x))
      throw Error(ErrorKind::ProviderError, "provider '" + v.provider_id + "' returned a non-finite value");
}

}  // namespace

FallbackEmbedder::FallbackEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw Error(ErrorKind::DimensionMismatch, "embedding dimension must be > 0");
}

std::string FallbackEmbedder::id() const {
  return "fallback-trigram-v1-" + std::to_string(dimension_);
}

EmbeddingVector FallbackEmbedder::embed_one(std::string_view text) const {
  std::vector<std::uint64_t> grams;
  if (text.size() < 3) {
    grams.push_back(fnv1a64(text));
  } else {
    grams.reserve(text.size() - 2);
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) grams.push_back(fnv1a64(text.substr(i, 3)));
  }
  std::sort(grams.begin(), grams.end());

  std::vector<double> values(dimension_, 0.0);
  for (std::size_t i = 0; i < grams.size();) {
    std::size_t j = i;
    while (j < grams.size() && grams[j] == grams[i]) ++j;
    const double count = static_cast<double>(j - i);
    // Row `grams[i]` of the projection matrix, one sign bit per coordinate.
    std::uint64_t state = kSeed ^ grams[i];
    std::uint64_t bits = 0;
    for (std::size_t d = 0; d < dimension_; ++d) {
      if (d % 64 == 0) bits = splitmix64(state);
      values[d] += (bits >> (d % 64)) & 1U ? count : -count;
    }
    i = j;
  }

  double norm = 0.0;
  for (double v : values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : values) v /= norm;
  return {std::move(values), id()};
}

std::vector<EmbeddingVector> FallbackEmbedder::embed_batch(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty())
    throw Error(ErrorKind::ProviderUnavailable, "remote embedder has no endpoint configured");
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  nlohmann::json body{{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto res = post_json(config_.endpoint, body.dump(), headers, config_.timeout_seconds);
    if (res.status != 200) {
      last_error = res.status == 0 ? res.body : "HTTP " + std::to_string(res.status);
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(res.body);
      const auto& vectors = j.at("vectors");
      if (vectors.size() != texts.size()) {
        last_error = "expected " + std::to_string(texts.size()) + " vectors, got " +
                     std::to_string(vectors.size());
        continue;
      }
      std::vector<EmbeddingVector> out;
      for (const auto& v : vectors) {
        out.push_back({v.get<std::vector<double>>(), config_.provider_id});
        check_vector(out.back(), config_.dimension);
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorKind::ProviderUnavailable,
              "embedding endpoint " + config_.endpoint + " failed twice: " + last_error);
}

EmbeddingVector embed(std::string_view text, EmbeddingProvider& provider) {
  if (blank(text)) throw Error(ErrorKind::EmptyText, "cannot embed empty text");
  const std::string owned(text);
  auto out = provider.embed_batch(std::span<const std::string>(&owned, 1));
  if (out.size() != 1)
    throw Error(ErrorKind::ProviderError, "provider returned " + std::to_string(out.size()) + " vectors for 1 text");
  check_vector(out.front(), provider.dimension());
  return std::move(out.front());
}

std::string_view to_string(SimilarityCategory category) {
  switch (category) {
    case SimilarityCategory::Clone: return "clone";
    case SimilarityCategory::Similar: return "similar";
    case SimilarityCategory::Dissimilar: return "dissimilar";
  }
  return "dissimilar";
}

SimilarityScore similarity(std::span<const double> e1, std::span<const double> e2) {
  if (e1.size() != e2.size())
    throw Error(ErrorKind::DimensionMismatch, "cannot compare vectors of dimension " +
                                                  std::to_string(e1.size()) + " and " +
                                                  std::to_string(e2.size()));
  double diff = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    const double d = e1[i] - e2[i];
    diff += d * d;
    n1 += e1[i] * e1[i];
    n2 += e2[i] * e2[i];
  }
  const double norms = std::sqrt(n1) + std::sqrt(n2);
  if (norms == 0.0) return {0.0, 1.0};
  // Rounding can push the ratio a hair past the triangle-inequality bound.
  const double distance = std::clamp(std::sqrt(diff) / norms, 0.0, 1.0);
  return {distance, 1.0 - distance};
}

SimilarityScore similarity(const EmbeddingVector& e1, const EmbeddingVector& e2) {
  return similarity(std::span<const double>(e1.values), std::span<const double>(e2.values));
}

SimilarityCategory classify(double similarity, double delta) {
  if (std::abs(similarity - 1.0) <= kCloneTolerance) return SimilarityCategory::Clone;
  if (similarity > delta) return SimilarityCategory::Similar;
  return SimilarityCategory::Dissimilar;
}

std::vector<SimilarityMatch> query_top_k(const EmbeddingVector& target, const CorpusIndex& index,
                                         std::size_t k, double delta) {
  std::vector<SimilarityMatch> all;
  all.reserve(index.size());
  for (const auto& e : index.entries()) {
    if (!e.embedding)
      throw Error(ErrorKind::ProviderMismatch, "entry '" + e.entry_id + "' has no embedding");
    if (e.embedding->provider_id != target.provider_id)
      throw Error(ErrorKind::ProviderMismatch, "entry '" + e.entry_id + "' embedded by '" +
                                                   e.embedding->provider_id + "', query by '" +
                                                   target.provider_id + "'");
    const auto score = similarity(target, *e.embedding);
    all.push_back({e.entry_id, score.distance, score.similarity, classify(score.similarity, delta)});
  }
  const auto better = [](const SimilarityMatch& a, const SimilarityMatch& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.entry_id < b.entry_id;
  };
  const auto take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), better);
  all.resize(take);
  return all;
}

void embed_corpus(CorpusIndex& index, EmbeddingProvider& provider, std::size_t batch) {
  index.meta().embedder_id = provider.id();
  index.meta().dimension = provider.dimension();
  batch = std::max<std::size_t>(batch, 1);
  for (std::size_t start = 0; start < index.size(); start += batch) {
    const auto stop = std::min(index.size(), start + batch);
    std::vector<std::string> texts;
    for (auto i = start; i < stop; ++i) texts.push_back(index.entries()[i].unit.normalized_source);
    auto vectors = provider.embed_batch(texts);
    if (vectors.size() != texts.size())
      throw Error(ErrorKind::ProviderError, "provider returned a short batch");
    for (auto i = start; i < stop; ++i) {
      check_vector(vectors[i - start], provider.dimension());
      index.set_embedding(i, std::move(vectors[i - start]));
    }
  }
}

}  // namespace simaudit
