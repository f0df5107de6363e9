#pragma once

#include "cityvl/gateway.hpp"

namespace cityvl {

// Deterministic offline provider. Recognizes the pipeline's prompt families
// (QA generation, paraphrase, quality check, judging, answering) and
// synthesizes plausible responses from a request-key-seeded stream. Used to
// author replay fixtures and to run the pipeline with no network at all.
class ScriptedTransport : public Transport {
 public:
  CompletionResponse send(const CompletionRequest& request) override;
  bool offline() const override { return true; }
};

}  // namespace cityvl
