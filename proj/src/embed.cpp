#include "aof/embed.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "aof/error.hpp"
#include "aof/kernels.hpp"
#include "aof/rng.hpp"
#include "aof/unicode.hpp"

namespace aof::embed {
namespace {

using nlohmann::json;

constexpr size_t kMinDeterministicDimension = 16;

std::vector<double> widen(std::span<const float> raw) {
    std::vector<double> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<double>(raw[i]);
    return out;
}

EmbeddingVector normalize_raw(std::span<const float> raw, std::string_view model_id) {
    EmbeddingVector vec{widen(raw), std::string(model_id)};
    double norm = kernels::l2_norm(vec.values);
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw Error("embed: degenerate (zero or non-finite) embedding from provider '" +
                    std::string(model_id) + "'");
    for (double& v : vec.values) v /= norm;
    return vec;
}

// host+port and path split of an http:// URL.
struct UrlParts {
    std::string base; // "http://host:port"
    std::string path; // "/v1/embeddings"
};

UrlParts split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("invalid endpoint URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

} // namespace

void EmbeddingProviderConfig::validate() const {
    if (model_id.empty()) throw ConfigError("embedding provider: model_id must be non-empty");
    if (kind == ProviderKind::http) {
        if (endpoint.empty()) throw ConfigError("embedding provider: http kind requires an endpoint");
    } else {
        if (dimension < kMinDeterministicDimension)
            throw ConfigError("embedding provider: deterministic kind requires dimension >= " +
                              std::to_string(kMinDeterministicDimension));
    }
    if (retry_attempts < 1) throw ConfigError("embedding provider: retry_attempts must be >= 1");
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.model_id != b.model_id)
        throw Error("cosine: model mismatch ('" + a.model_id + "' vs '" + b.model_id + "')");
    if (a.values.size() != b.values.size())
        throw Error("cosine: dimension mismatch (" + std::to_string(a.values.size()) + " vs " +
                    std::to_string(b.values.size()) + ")");
    if (a.values.empty()) throw Error("cosine: empty vectors");
    if (a.values == b.values) return 1.0;

    double na = kernels::l2_norm(a.values);
    double nb = kernels::l2_norm(b.values);
    if (na == 0.0 || nb == 0.0) throw Error("cosine: zero vector");
    double c = kernels::dot(a.values, b.values) / (na * nb);
    if (c > 1.0) return 1.0;
    if (c < -1.0) return -1.0;
    return c;
}

namespace {

// Signed feature hashing of character 3-grams. Texts shorter than three
// codepoints contribute a single gram covering the whole text.
std::vector<float> hash_features(const std::string& normalized, size_t dimension) {
    std::vector<float> raw(dimension, 0.0f);
    std::vector<char32_t> cps = uni::decode_utf8(normalized);

    auto add_gram = [&](size_t begin, size_t len) {
        std::string gram;
        for (size_t i = begin; i < begin + len; ++i) uni::append_utf8(gram, cps[i]);
        uint64_t h = rng::fnv1a64(gram);
        size_t bucket = static_cast<size_t>(h % dimension);
        float sign = (h >> 63) ? -1.0f : 1.0f;
        raw[bucket] += sign;
    };

    if (cps.size() < 3) {
        add_gram(0, cps.size());
    } else {
        for (size_t i = 0; i + 3 <= cps.size(); ++i) add_gram(i, 3);
    }
    return raw;
}

} // namespace

EmbeddingVector deterministic_embed(std::string_view text, size_t dimension,
                                    std::string_view model_id) {
    if (dimension < kMinDeterministicDimension)
        throw Error("deterministic_embed: dimension must be >= " +
                    std::to_string(kMinDeterministicDimension));
    std::string normalized = uni::normalize_text(text);
    if (normalized.empty()) throw Error("deterministic_embed: empty text after normalization");
    return normalize_raw(hash_features(normalized, dimension), model_id);
}

// ---------------------------------------------------------------------------
// EmbeddingCache
//
// Record layout is pinned little-endian regardless of host byte order.

namespace {

void put_u32_le(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

bool get_u32_le(std::istream& in, uint32_t& v) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
    v = uint32_t(bytes[0]) | uint32_t(bytes[1]) << 8 | uint32_t(bytes[2]) << 16 |
        uint32_t(bytes[3]) << 24;
    return true;
}

} // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_, std::ios::binary);
    if (!in) return; // fresh cache
    while (true) {
        uint32_t key_len = 0;
        if (!get_u32_le(in, key_len)) break;
        std::string key(key_len, '\0');
        if (!in.read(key.data(), key_len)) throw Error("embedding cache truncated: " + file_.string());
        uint32_t dim = 0;
        if (!get_u32_le(in, dim))
            throw Error("embedding cache truncated: " + file_.string());
        std::vector<float> values(dim);
        for (uint32_t i = 0; i < dim; ++i) {
            uint32_t bits = 0;
            if (!get_u32_le(in, bits))
                throw Error("embedding cache truncated: " + file_.string());
            values[i] = std::bit_cast<float>(bits);
        }
        entries_[key] = std::move(values); // later records win, matching append order
    }
}

std::optional<std::vector<float>> EmbeddingCache::lookup(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingCache::insert(const std::string& key, std::span<const float> raw) {
    std::unique_lock lock(mutex_);
    if (entries_.count(key)) return;
    std::ofstream out(file_, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot open embedding cache for append: " + file_.string());
    std::string record;
    record.reserve(8 + key.size() + 4 * raw.size());
    put_u32_le(record, static_cast<uint32_t>(key.size()));
    record += key;
    put_u32_le(record, static_cast<uint32_t>(raw.size()));
    for (float f : raw) put_u32_le(record, std::bit_cast<uint32_t>(f));
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
    out.flush();
    if (!out) throw Error("failed writing embedding cache: " + file_.string());
    entries_[key] = std::vector<float>(raw.begin(), raw.end());
}

size_t EmbeddingCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// Embedder

Embedder::Embedder(EmbeddingProviderConfig config, std::optional<std::filesystem::path> cache_file)
    : config_(std::move(config)) {
    config_.validate();
    if (cache_file) disk_cache_ = std::make_unique<EmbeddingCache>(*cache_file);
}

Embedder::~Embedder() = default;

std::string Embedder::cache_key(std::string_view model_id, std::string_view normalized_text) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(rng::fnv1a64(normalized_text)));
    return std::string(model_id) + ":" + hex;
}

EmbeddingVector Embedder::embed(std::string_view text) {
    std::string normalized = uni::normalize_text(text);
    if (normalized.empty()) throw Error("embed: empty text after normalization");
    const std::string key = cache_key(config_.model_id, normalized);

    {
        std::lock_guard lock(memo_mutex_);
        auto it = memo_.find(key);
        if (it != memo_.end()) return normalize_raw(it->second, config_.model_id);
    }
    if (disk_cache_) {
        if (auto raw = disk_cache_->lookup(key)) {
            std::lock_guard lock(memo_mutex_);
            memo_[key] = *raw;
            return normalize_raw(*raw, config_.model_id);
        }
    }

    std::vector<float> raw = fetch_raw(normalized);
    if (disk_cache_) disk_cache_->insert(key, raw);
    {
        std::lock_guard lock(memo_mutex_);
        memo_[key] = raw;
    }
    return normalize_raw(raw, config_.model_id);
}

std::vector<float> Embedder::fetch_raw(const std::string& normalized) {
    if (config_.kind == ProviderKind::deterministic)
        return hash_features(normalized, config_.dimension);
    return fetch_raw_http(normalized);
}

std::vector<float> Embedder::fetch_raw_http(const std::string& normalized) {
    UrlParts url = split_url(config_.endpoint);
    httplib::Client client(url.base);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || key[0] == '\0')
            throw ConfigError("embedding provider: API key environment variable '" +
                              config_.api_key_env + "' is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json request = {{"model", config_.model_id}, {"input", json::array({normalized})}};
    const std::string body = request.dump();

    std::string last_error;
    int backoff_ms = config_.retry_backoff_ms;
    for (int attempt = 1; attempt <= config_.retry_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (retryable_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("embedding endpoint returned HTTP " + std::to_string(res->status) +
                                 ": " + res->body.substr(0, 200));
        try {
            json response = json::parse(res->body);
            const json& data = response.at("data").at(0).at("embedding");
            std::vector<float> raw;
            raw.reserve(data.size());
            for (const json& v : data) raw.push_back(v.get<float>());
            if (raw.empty()) throw Error("embedding endpoint returned an empty vector");
            return raw;
        } catch (const json::exception& e) {
            throw TransportError(std::string("malformed embedding response: ") + e.what());
        }
    }
    throw TransportError("embedding request failed after " + std::to_string(config_.retry_attempts) +
                         " attempts (" + last_error + ") against " + config_.endpoint);
}

} // namespace aof::embed
