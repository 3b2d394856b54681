#include "qcoder/gateway.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "qcoder/errors.hpp"
#include "qcoder/hash.hpp"
#include "qcoder/jsonl.hpp"
#include "qcoder/textutil.hpp"

namespace qcoder {

namespace {

std::string format_temperature(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", t);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::string ChatRequest::request_hash() const {
    return sha256_hex(model_id + "\x1f" + format_temperature(temperature) + "\x1f" + prompt);
}

Transcript Transcript::load(const std::string& path) {
    Transcript t;
    for (const auto& rec : read_jsonl(path)) {
        t.entries_[rec.at("request_hash").get<std::string>()] =
            rec.at("response").get<std::string>();
    }
    return t;
}

void Transcript::save(const std::string& path) const {
    std::vector<nlohmann::json> records;
    records.reserve(entries_.size());
    for (const auto& [hash, response] : entries_) {
        records.push_back(nlohmann::json{{"request_hash", hash}, {"response", response}});
    }
    write_jsonl(path, records);
}

std::optional<std::string> Transcript::lookup(const std::string& request_hash) const {
    auto it = entries_.find(request_hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Transcript::record(const std::string& request_hash, const std::string& response) {
    entries_[request_hash] = response;
}

std::string Gateway::chat(const ChatRequest& req) {
    if (req.prompt.empty()) {
        throw PreconditionError("chat: empty prompt");
    }
    return chat_impl(req);
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts,
                                            const std::string& model_id) {
    if (texts.empty()) {
        throw PreconditionError("embed: empty batch");
    }
    for (const auto& t : texts) {
        if (t.empty()) {
            throw PreconditionError("embed: empty text in batch");
        }
    }

    // Resolve from the cache first; fetch only the distinct misses.
    std::vector<std::string> keys(texts.size());
    std::vector<std::string> misses;
    std::vector<std::size_t> miss_of;  // index into misses for each unseen key
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        std::unordered_map<std::string, std::size_t> pending;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            keys[i] = model_id + ":" + sha256_hex(texts[i]);
            if (!embed_cache_.count(keys[i]) && !pending.count(keys[i])) {
                pending[keys[i]] = misses.size();
                misses.push_back(texts[i]);
            }
        }
    }

    if (!misses.empty()) {
        auto fetched = embed_impl(misses, model_id);
        if (fetched.size() != misses.size()) {
            throw GatewayError("embed: response count mismatch (" + std::to_string(fetched.size()) +
                               " vectors for " + std::to_string(misses.size()) + " texts)");
        }
        std::size_t dims = fetched.front().size();
        for (const auto& v : fetched) {
            if (v.size() != dims) {
                throw GatewayError("embed: dims mismatch across batch");
            }
        }
        std::lock_guard<std::mutex> lock(cache_mutex_);
        for (std::size_t i = 0; i < misses.size(); ++i) {
            embed_cache_[model_id + ":" + sha256_hex(misses[i])] = fetched[i];
        }
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::lock_guard<std::mutex> lock(cache_mutex_);
    std::size_t dims = embed_cache_.at(keys.front()).size();
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto& values = embed_cache_.at(keys[i]);
        if (values.size() != dims) {
            throw GatewayError("embed: dims mismatch across batch");
        }
        out.push_back(EmbeddingVector{model_id, static_cast<int>(dims), values});
    }
    return out;
}

std::vector<double> hash_embedding(const std::string& text, int dims) {
    std::vector<double> v(static_cast<std::size_t>(dims), 0.0);
    auto tokens = tokenize_lower(text);
    for (const auto& tok : tokens) {
        std::uint64_t h = fnv1a64(tok);
        std::size_t slot = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dims));
        double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
        v[slot] += sign;
    }
    // Whole-string fallback slot keeps token-free inputs off the zero vector.
    std::uint64_t h = fnv1a64(text);
    v[static_cast<std::size_t>(h % static_cast<std::uint64_t>(dims))] += 0.125;
    return v;
}

MockGateway::MockGateway(Transcript transcript, int embed_dims)
    : transcript_(std::move(transcript)), embed_dims_(embed_dims) {}

std::string MockGateway::chat_impl(const ChatRequest& req) {
    auto hit = transcript_.lookup(req.request_hash());
    if (!hit) {
        throw GatewayError("missing transcript entry for request " + req.request_hash() +
                           " (model " + req.model_id + ")");
    }
    return *hit;
}

std::vector<std::vector<double>> MockGateway::embed_impl(const std::vector<std::string>& texts,
                                                         const std::string&) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(hash_embedding(t, embed_dims_));
    }
    return out;
}

namespace {
std::atomic<std::uint64_t> transport_calls{0};
}

std::uint64_t http_transport_call_count() { return transport_calls.load(); }

Transport make_http_transport(const std::string& base_url, int timeout_seconds) {
    return [base_url, timeout_seconds](const std::string& path,
                                       const std::string& body) -> TransportResponse {
        transport_calls.fetch_add(1);
        httplib::Client client(base_url);
        client.set_connection_timeout(timeout_seconds, 0);
        client.set_read_timeout(timeout_seconds, 0);
        auto res = client.Post(path, body, "application/json");
        if (!res) {
            return TransportResponse{0, "", httplib::to_string(res.error())};
        }
        return TransportResponse{res->status, res->body, ""};
    };
}

HttpGateway::HttpGateway(Transport transport) : transport_(std::move(transport)) {}

TransportResponse HttpGateway::post_with_retries(const std::string& path,
                                                 const std::string& body) {
    const int max_attempts = 3;
    std::chrono::seconds backoff(1);
    TransportResponse last;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        last = transport_(path, body);
        if (last.error.empty() && last.status >= 200 && last.status < 300) {
            return last;
        }
        bool retryable = !last.error.empty() || last.status >= 500;
        if (!retryable || attempt == max_attempts) break;
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
    std::string detail = last.error.empty() ? "HTTP " + std::to_string(last.status) : last.error;
    throw GatewayError("request to " + path + " failed after retries: " + detail);
}

std::string HttpGateway::chat_impl(const ChatRequest& req) {
    nlohmann::json body{
        {"model", req.model_id},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.temperature},
    };
    auto res = post_with_retries("/v1/chat/completions", body.dump());
    try {
        auto j = nlohmann::json::parse(res.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError("malformed chat completion response: " + std::string(e.what()));
    }
}

std::vector<std::vector<double>> HttpGateway::embed_impl(const std::vector<std::string>& texts,
                                                         const std::string& model_id) {
    nlohmann::json body{{"model", model_id}, {"input", texts}};
    auto res = post_with_retries("/v1/embeddings", body.dump());
    try {
        auto j = nlohmann::json::parse(res.body);
        std::vector<std::vector<double>> out(texts.size());
        for (const auto& item : j.at("data")) {
            std::size_t index = item.at("index").get<std::size_t>();
            if (index >= out.size()) {
                throw GatewayError("embedding response index out of range");
            }
            out[index] = item.at("embedding").get<std::vector<double>>();
        }
        for (const auto& v : out) {
            if (v.empty()) {
                throw GatewayError("embedding response missing an input index");
            }
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError("malformed embeddings response: " + std::string(e.what()));
    }
}

RecordingGateway::RecordingGateway(std::shared_ptr<Gateway> inner, std::string transcript_path)
    : inner_(std::move(inner)), path_(std::move(transcript_path)) {}

RecordingGateway::~RecordingGateway() {
    try {
        flush();
    } catch (...) {
        // destructor must not throw; the explicit flush() reports errors
    }
}

void RecordingGateway::flush() {
    std::lock_guard<std::mutex> lock(mutex_);
    transcript_.save(path_);
}

std::string RecordingGateway::chat_impl(const ChatRequest& req) {
    std::string response = inner_->chat(req);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        transcript_.record(req.request_hash(), response);
    }
    return response;
}

std::vector<std::vector<double>> RecordingGateway::embed_impl(
    const std::vector<std::string>& texts, const std::string& model_id) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& v : inner_->embed(texts, model_id)) {
        out.push_back(v.values);
    }
    return out;
}

}  // namespace qcoder
