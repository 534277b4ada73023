#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aof::embed {

struct EmbeddingVector {
    std::vector<double> values; // L2-normalized when produced by an Embedder
    std::string model_id;

    size_t dimension() const { return values.size(); }
};

enum class ProviderKind { http, deterministic };

struct EmbeddingProviderConfig {
    ProviderKind kind = ProviderKind::deterministic;
    std::string model_id = "all-MiniLM-L6-v2";
    std::string endpoint;      // http only, e.g. "http://host:port/v1/embeddings"
    size_t dimension = 0;      // deterministic only, >= 16
    std::string api_key_env;   // http only; empty sends no Authorization header
    int retry_attempts = 3;
    int retry_backoff_ms = 500;

    void validate() const; // throws ConfigError
};

// Standard cosine, symmetric, clamped to [-1, 1]. Bitwise-equal inputs
// return exactly 1.0 so that a candidate identical to a reference scores 1
// regardless of rounding in the norm. Throws on dimension/model mismatch and
// on zero vectors.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Offline stand-in for a sentence-embedding model: signed feature hashing of
// character 3-grams of the normalized text, L2-normalized. Pure function of
// (text, dimension); the hash is pinned (FNV-1a 64), so vectors are stable
// across runs and platforms.
EmbeddingVector deterministic_embed(std::string_view text, size_t dimension,
                                    std::string_view model_id = "deterministic");

// Append-only on-disk key→vector file. Record layout, little-endian:
//   u32 key_len | key bytes | u32 dimension | dimension × f32
// Raw (pre-normalization) float32 components are stored; normalization
// happens after load, so cached and freshly computed vectors are
// bit-identical. Writes are serialized; reads are concurrent.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path file);

    std::optional<std::vector<float>> lookup(const std::string& key) const;
    void insert(const std::string& key, std::span<const float> raw);
    size_t size() const;

private:
    std::filesystem::path file_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::vector<float>> entries_;
};

// Provider + cache behind one call. Thread-safe. The canonical raw embedding
// is float32 (what the cache stores); the returned vector is that raw
// embedding L2-normalized in double precision.
class Embedder {
public:
    explicit Embedder(EmbeddingProviderConfig config,
                      std::optional<std::filesystem::path> cache_file = std::nullopt);
    ~Embedder();

    Embedder(const Embedder&) = delete;
    Embedder& operator=(const Embedder&) = delete;

    // Throws on empty text (after normalization) and on transport failure
    // that survived the retry policy.
    EmbeddingVector embed(std::string_view text);

    const EmbeddingProviderConfig& config() const { return config_; }

    static std::string cache_key(std::string_view model_id, std::string_view normalized_text);

private:
    std::vector<float> fetch_raw(const std::string& normalized);
    std::vector<float> fetch_raw_http(const std::string& normalized);

    EmbeddingProviderConfig config_;
    std::unique_ptr<EmbeddingCache> disk_cache_;
    std::mutex memo_mutex_;
    std::unordered_map<std::string, std::vector<float>> memo_;
};

} // namespace aof::embed
