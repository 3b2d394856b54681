#pragma once

#include "qcoder/gateway.hpp"

namespace qcoder {

// A deterministic stand-in "model" for offline runs: it recognizes each
// pipeline prompt by its fixed phrases and synthesizes a plausible,
// well-formed response from the prompt's own data blocks. Purely a function
// of the prompt text, so recorded transcripts replay bit-identically and the
// whole pipeline can run end-to-end with no server. Not a language model;
// useful for demos, fixtures, and large-scale smoke runs.
class ScriptedGateway : public Gateway {
  public:
    explicit ScriptedGateway(int embed_dims);

  protected:
    std::string chat_impl(const ChatRequest& req) override;
    std::vector<std::vector<double>> embed_impl(const std::vector<std::string>& texts,
                                                const std::string& model_id) override;

  private:
    int embed_dims_;
};

}  // namespace qcoder
