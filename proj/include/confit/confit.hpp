// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Everything except the HTTP transport (confit/llm_client.hpp).

#include "confit/core.hpp"
#include "confit/engine.hpp"
#include "confit/error.hpp"
#include "confit/grpo.hpp"
#include "confit/metrics.hpp"
#include "confit/parallel.hpp"
#include "confit/random.hpp"
#include "confit/ranker.hpp"
#include "confit/synthetic.hpp"
#include "confit/window_pipeline.hpp"

namespace confit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace confit
