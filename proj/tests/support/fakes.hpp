#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qcoder/gateway.hpp"

namespace fakes {

// Programmable chat handler over the deterministic hash embedder; the test
// double for induction/theme/simulator flows whose prompts depend on prior
// pipeline state.
class FakeChat : public qcoder::Gateway {
  public:
    using Handler = std::function<std::string(const qcoder::ChatRequest&)>;

    explicit FakeChat(Handler handler, int embed_dims = 64)
        : handler_(std::move(handler)), embed_dims_(embed_dims) {}

  protected:
    std::string chat_impl(const qcoder::ChatRequest& req) override { return handler_(req); }

    std::vector<std::vector<double>> embed_impl(const std::vector<std::string>& texts,
                                                const std::string&) override {
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(qcoder::hash_embedding(t, embed_dims_));
        return out;
    }

  private:
    Handler handler_;
    int embed_dims_;
};

inline std::string decline_transcript() {
    return "My expert analysis:\nStep 1 (codebook examination)\n1. Reviewed.\n"
           "My logical recommendation:\nNo new codes needed\n";
}

inline std::string create_transcript(const std::string& label, const std::string& definition) {
    return "My expert analysis:\nStep 1 (codebook examination)\n1. Reviewed.\n"
           "My logical recommendation:\nCode: " +
           label + "\nDefinition: " + definition + "\n";
}

}  // namespace fakes
