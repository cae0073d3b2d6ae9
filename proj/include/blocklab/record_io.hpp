// Copyright 2026 The blocklab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include <json.hpp>

#include "blocklab/inference.hpp"

namespace blocklab {

/// JSON record for a node's posterior, for fixture exchange:
/// {node, method, probs, label, seed}.
inline nlohmann::json posterior_record(NodeId node, const std::string& method,
                                       const PosteriorVector& post,
                                       std::uint64_t seed) {
  return nlohmann::json{{"node", node},
                        {"method", method},
                        {"probs", post.probs},
                        {"label", post.argmax()},
                        {"seed", seed}};
}

/// JSON record for a census outcome: {node, method, s, label, seed}.
inline nlohmann::json census_record(NodeId node, const std::string& method,
                                    const CensusResult& res,
                                    std::uint64_t seed) {
  return nlohmann::json{{"node", node},
                        {"method", method},
                        {"s", res.census.s},
                        {"level", res.census.level},
                        {"label", res.label},
                        {"seed", seed}};
}

}  // namespace blocklab
