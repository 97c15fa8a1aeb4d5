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

// Trigger classification (Trg-C), argument classification (Arg-C) under
// exact and relaxed span matching, and sentence-level event presence
// accuracy.

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "evgraph/corpus_io.hpp"
#include "json.hpp"

namespace evgraph {

struct Counts {
  std::size_t tp = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    n_pred += o.n_pred;
    n_gold += o.n_gold;
    return *this;
  }
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;

  static PRF from_counts(const Counts& c);
};

struct ScoreReport {
  PRF trg_c;
  PRF arg_c_perfect;
  PRF arg_c_overlap;
  double presence_accuracy = 0.0;
};

enum class SpanMatch { kPerfect, kOverlap80 };

// Gold spans of at most five tokens always need an exact match. Longer gold
// spans match when the prediction covers at least 80% of their tokens.
bool spans_match(const Span& pred, const Span& gold, SpanMatch mode);

// Size of a maximum matching in the bipartite graph given by compatible().
std::size_t max_bipartite_matching(
    std::size_t n_left, std::size_t n_right,
    const std::function<bool(std::size_t, std::size_t)>& compatible);

// Per-sentence counts. Arguments are (event type, role, span) instances.
Counts trigger_counts(const std::vector<EventMention>& pred,
                      const std::vector<EventMention>& gold);
Counts argument_counts(const std::vector<EventMention>& pred,
                       const std::vector<EventMention>& gold, SpanMatch mode);

// Corpus-level scores. pred and gold must cover the same sentence ids,
// otherwise AlignmentError is thrown.
PRF score_triggers(const Corpus& pred, const Corpus& gold);
PRF score_arguments(const Corpus& pred, const Corpus& gold, SpanMatch mode);
double presence_accuracy(const Corpus& pred, const Corpus& gold);

// All metrics in one pass; sentences are scored in parallel.
ScoreReport score_report(const Corpus& pred, const Corpus& gold);

namespace serial {
ScoreReport score_report(const Corpus& pred, const Corpus& gold);
}  // namespace serial

nlohmann::ordered_json report_to_json(const ScoreReport& report);
std::string report_table(const ScoreReport& report);

}  // namespace evgraph
