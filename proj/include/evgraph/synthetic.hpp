// Copyright 2026 The EventGraph Authors.
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

// Seeded generator of templated event-annotated sentences. Used in place of
// licensed corpora for training and testing.

#pragma once

#include <cstddef>
#include <cstdint>

#include "evgraph/corpus_io.hpp"

namespace evgraph {

// Sentences carry 0-3 events. The generator produces multi-token triggers,
// arguments shared between events, nested argument spans and arguments
// longer than five tokens. Trigger words are specific to the event type and
// argument roles are introduced by role-specific cue words, so labels are
// predictable from the text. The output is a pure function of the
// arguments and is identical on every platform.
Corpus gen_synthetic(std::uint64_t seed, std::size_t n_sentences,
                     int n_event_types, int n_roles);

}  // namespace evgraph
