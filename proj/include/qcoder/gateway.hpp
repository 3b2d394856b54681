#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qcoder/domain.hpp"

namespace qcoder {

struct ChatRequest {
    std::string model_id;
    std::string prompt;
    double temperature = 0.0;

    // Deterministic digest of (model_id, prompt, temperature); the replay key.
    std::string request_hash() const;
};

// Recorded request -> response map, stored on disk as JSON Lines of
// {request_hash, response}. Replay of a recorded hash returns byte-identical
// text.
class Transcript {
  public:
    static Transcript load(const std::string& path);
    void save(const std::string& path) const;

    std::optional<std::string> lookup(const std::string& request_hash) const;
    void record(const std::string& request_hash, const std::string& response);
    std::size_t size() const { return entries_.size(); }

  private:
    std::map<std::string, std::string> entries_;
};

// Every generative-model and embedding-model call passes through here.
// chat() output is forwarded unmodified — no trimming, no case change — so
// parsers see exactly what the model emitted. embed() validates the batch,
// dedupes through a per-gateway cache keyed by (model_id, text digest), and
// returns unnormalized vectors in input order.
class Gateway {
  public:
    virtual ~Gateway() = default;

    std::string chat(const ChatRequest& req);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       const std::string& model_id);

  protected:
    virtual std::string chat_impl(const ChatRequest& req) = 0;
    // One vector per input text; called only for cache misses.
    virtual std::vector<std::vector<double>> embed_impl(const std::vector<std::string>& texts,
                                                        const std::string& model_id) = 0;

  private:
    std::mutex cache_mutex_;
    std::unordered_map<std::string, std::vector<double>> embed_cache_;
};

// Deterministic offline embedder: feature-hashed bag of words. Similar texts
// share slots, identical texts map to identical vectors. Never zero.
std::vector<double> hash_embedding(const std::string& text, int dims);

// Replay-only gateway. Never performs network activity; a chat request whose
// hash is not in the transcript is a missing-transcript error.
class MockGateway : public Gateway {
  public:
    MockGateway(Transcript transcript, int embed_dims);

  protected:
    std::string chat_impl(const ChatRequest& req) override;
    std::vector<std::vector<double>> embed_impl(const std::vector<std::string>& texts,
                                                const std::string& model_id) override;

  private:
    Transcript transcript_;
    int embed_dims_;
};

struct TransportResponse {
    int status = 0;
    std::string body;
    std::string error;  // non-empty on transport failure
};

// POSTs a JSON body to base_url+path. Injected so tests can fake or count
// network activity.
using Transport =
    std::function<TransportResponse(const std::string& path, const std::string& json_body)>;

Transport make_http_transport(const std::string& base_url, int timeout_seconds = 300);

// Counts every outbound call made by transports from make_http_transport.
// Offline modes must leave it untouched; tests assert on it.
std::uint64_t http_transport_call_count();

// Talks a chat-completion-style HTTP+JSON protocol (v1/chat/completions and
// v1/embeddings) against a configurable base URL, so any common local model
// server works. Transient failures are retried 3 times with exponential
// backoff starting at 1s.
class HttpGateway : public Gateway {
  public:
    explicit HttpGateway(Transport transport);

  protected:
    std::string chat_impl(const ChatRequest& req) override;
    std::vector<std::vector<double>> embed_impl(const std::vector<std::string>& texts,
                                                const std::string& model_id) override;

  private:
    TransportResponse post_with_retries(const std::string& path, const std::string& body);

    Transport transport_;
};

// Wraps another gateway and appends every chat exchange to a transcript,
// which can later drive MockGateway replay.
class RecordingGateway : public Gateway {
  public:
    RecordingGateway(std::shared_ptr<Gateway> inner, std::string transcript_path);
    ~RecordingGateway() override;

    void flush();

  protected:
    std::string chat_impl(const ChatRequest& req) override;
    std::vector<std::vector<double>> embed_impl(const std::vector<std::string>& texts,
                                                const std::string& model_id) override;

  private:
    std::shared_ptr<Gateway> inner_;
    std::string path_;
    std::mutex mutex_;
    Transcript transcript_;
};

}  // namespace qcoder
