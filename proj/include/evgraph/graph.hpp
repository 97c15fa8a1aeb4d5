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

// Event mentions, labeled-edge event graphs, and the lossless conversion
// between them.
//
// A graph has a single dummy top node. Every other node is anchored to a
// token span. Top -> trigger edges carry the event type; trigger -> argument
// edges carry the argument role. An argument span shared by several events
// (or by several roles of one event) is a single node.

#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

namespace evgraph {

// Half-open token range [start, end).
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  bool valid() const { return 0 <= start && start < end; }
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Argument {
  std::string role;
  Span span;
  friend auto operator<=>(const Argument&, const Argument&) = default;
};

struct EventMention {
  Span trigger;
  std::string event_type;
  std::vector<Argument> arguments;
  friend bool operator==(const EventMention&, const EventMention&) = default;
};

struct Node {
  int id = 0;
  std::vector<Span> anchors;  // empty only for the top node
  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  int source = 0;
  int target = 0;
  std::string label;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct EventGraph {
  std::string sentence_id;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  int top = 0;

  const Node* find_node(int id) const;
  friend bool operator==(const EventGraph&, const EventGraph&) = default;
};

// Empty violation means the graph is well formed.
struct ValidationResult {
  std::string violation;

  bool ok() const { return violation.empty(); }
  explicit operator bool() const { return ok(); }
};

// Sorts spans and merges overlapping or adjacent ones.
std::vector<Span> normalize_anchors(std::vector<Span> spans);

// Throws BoundsError for spans outside the sentence, DuplicateAnnotationError
// for a repeated (event type, trigger, role, argument) tuple or two mentions
// sharing both event type and trigger span.
EventGraph encode_graph(const Sentence& sentence,
                        const std::vector<EventMention>& mentions);

// Throws ValidationError when the graph does not validate, or when a node
// carries a non-contiguous anchor.
std::vector<EventMention> decode_graph(const EventGraph& graph,
                                       const Sentence& sentence);

// Structural checks only when sentence is null; bounds and id checks too
// otherwise. Reports the first violation found.
ValidationResult validate_graph(const EventGraph& graph,
                                const Sentence* sentence = nullptr);
inline ValidationResult validate_graph(const EventGraph& graph,
                                       const Sentence& sentence) {
  return validate_graph(graph, &sentence);
}

// Span containment check used by the readers and the encoder.
void check_span(const Span& span, const Sentence& sentence,
                const std::string& what);

}  // namespace evgraph
