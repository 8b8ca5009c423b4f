#pragma once

#include <memory>

#include "rmt/gateway.hpp"

namespace rmt {

// Deterministic stand-in for a live model. Answers are a pure function of
// the request content: concept lists for extraction prompts, a strategy
// letter for selection prompts, and tagged think/answer text for
// incorporate/refine prompts, converging toward the embedded reference one
// token per refinement step. Used to build replay fixtures and to run the
// whole synthesis pipeline offline.
std::shared_ptr<ChatTransport> make_scripted_transport();

}  // namespace rmt
