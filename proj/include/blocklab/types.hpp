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

#include <cstdint>

namespace blocklab {

/// Dense 0-based node id, valid within one graph or tree.
using NodeId = std::uint32_t;

/// Cluster / broadcast label, 1-based: values live in {1, ..., k}.
using Label = std::uint32_t;

/// Seed used when the caller does not provide one. Fixed (not time-based)
/// so bare invocations are reproducible.
inline constexpr std::uint64_t kDefaultSeed = 20140704ULL;

}  // namespace blocklab
