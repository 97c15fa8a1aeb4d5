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

#include "evgraph/graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>
#include <utility>

#include "evgraph/errors.hpp"

namespace evgraph {

namespace {

std::string span_text(const Span& s) {
  return "[" + std::to_string(s.start) + "," + std::to_string(s.end) + ")";
}

std::string anchors_text(const std::vector<Span>& anchors) {
  std::string out;
  for (const Span& s : anchors) out += span_text(s);
  return out;
}

}  // namespace

const Node* EventGraph::find_node(int id) const {
  for (const Node& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

std::vector<Span> normalize_anchors(std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end());
  std::vector<Span> merged;
  for (const Span& s : spans) {
    if (!merged.empty() && s.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

void check_span(const Span& span, const Sentence& sentence,
                const std::string& what) {
  if (!span.valid() || span.end > sentence.size()) {
    throw BoundsError(what + " span " + span_text(span) +
                      " out of bounds for sentence '" + sentence.id +
                      "' with " + std::to_string(sentence.size()) + " tokens");
  }
}

EventGraph encode_graph(const Sentence& sentence,
                        const std::vector<EventMention>& mentions) {
  if (sentence.tokens.empty())
    throw ValidationError("sentence '" + sentence.id + "' has no tokens");

  std::set<std::pair<std::string, Span>> triggers_seen;
  for (const EventMention& m : mentions) {
    check_span(m.trigger, sentence, "trigger");
    if (m.event_type.empty())
      throw ValidationError("empty event type in sentence '" + sentence.id + "'");
    if (!triggers_seen.emplace(m.event_type, m.trigger).second) {
      throw DuplicateAnnotationError(
          "duplicate event '" + m.event_type + "' on trigger " +
          span_text(m.trigger) + " in sentence '" + sentence.id + "'");
    }
    std::set<Argument> args_seen;
    for (const Argument& a : m.arguments) {
      check_span(a.span, sentence, "argument");
      if (a.role.empty())
        throw ValidationError("empty role in sentence '" + sentence.id + "'");
      if (!args_seen.insert(a).second) {
        throw DuplicateAnnotationError(
            "duplicate argument '" + a.role + "' " + span_text(a.span) +
            " of event '" + m.event_type + "' in sentence '" + sentence.id +
            "'");
      }
    }
  }

  EventGraph g;
  g.sentence_id = sentence.id;
  g.top = 0;
  g.nodes.push_back(Node{0, {}});
  int next_id = 1;
  for (const EventMention& m : mentions) {
    const int id = next_id++;
    g.nodes.push_back(Node{id, {m.trigger}});
    g.edges.push_back(Edge{0, id, m.event_type});
  }
  std::map<Span, int> arg_nodes;
  for (const EventMention& m : mentions) {
    for (const Argument& a : m.arguments) {
      if (!arg_nodes.contains(a.span)) {
        const int id = next_id++;
        arg_nodes.emplace(a.span, id);
        g.nodes.push_back(Node{id, {a.span}});
      }
    }
  }
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const int trigger_id = static_cast<int>(i) + 1;
    for (const Argument& a : mentions[i].arguments)
      g.edges.push_back(Edge{trigger_id, arg_nodes.at(a.span), a.role});
  }
  return g;
}

ValidationResult validate_graph(const EventGraph& graph,
                                const Sentence* sentence) {
  auto fail = [](std::string msg) { return ValidationResult{std::move(msg)}; };

  if (sentence && graph.sentence_id != sentence->id) {
    return fail("graph id '" + graph.sentence_id +
                "' does not match sentence id '" + sentence->id + "'");
  }
  std::unordered_map<int, std::size_t> index;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    if (!index.emplace(graph.nodes[i].id, i).second)
      return fail("duplicate node id " + std::to_string(graph.nodes[i].id));
  }
  if (!index.contains(graph.top))
    return fail("top node " + std::to_string(graph.top) + " does not exist");

  for (const Node& n : graph.nodes) {
    const std::string who = "node " + std::to_string(n.id);
    if (n.id == graph.top) {
      if (!n.anchors.empty())
        return fail("top must be a dummy node (" + who + " has anchors)");
      continue;
    }
    if (n.anchors.empty()) return fail(who + " has no anchor");
    for (std::size_t k = 0; k < n.anchors.size(); ++k) {
      const Span& s = n.anchors[k];
      if (!s.valid()) return fail(who + " has invalid anchor " + span_text(s));
      if (sentence && s.end > sentence->size())
        return fail(who + " anchor " + span_text(s) + " exceeds sentence length " +
                    std::to_string(sentence->size()));
      if (k > 0 && s.start <= n.anchors[k - 1].end)
        return fail(who + " anchors are not merged and sorted");
    }
  }

  // Trigger nodes are exactly the targets of top edges.
  std::map<int, std::vector<std::string>> event_types;
  for (const Edge& e : graph.edges) {
    if (e.source == graph.top && index.contains(e.target))
      event_types[e.target].push_back(e.label);
  }

  std::set<std::tuple<int, int, std::string>> seen;
  std::set<int> has_trigger_parent;
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const Edge& e = graph.edges[i];
    const std::string who = "edge " + std::to_string(i) + " (" +
                            std::to_string(e.source) + "->" +
                            std::to_string(e.target) + ")";
    if (e.label.empty()) return fail(who + " has an empty label");
    if (!index.contains(e.source)) return fail(who + " source does not exist");
    if (!index.contains(e.target)) return fail(who + " target does not exist");
    if (e.source == e.target) return fail(who + " is a self loop");
    if (e.target == graph.top) return fail(who + " targets the top node");
    const bool from_top = e.source == graph.top;
    if (!from_top && !event_types.contains(e.source))
      return fail(who + ": edge source is not top or a trigger");
    if (!from_top && event_types.contains(e.target))
      return fail(who + ": trigger edge must target an argument node");
    if (!seen.emplace(e.source, e.target, e.label).second)
      return fail(who + " duplicates an existing (source, target, label)");
    if (!from_top) has_trigger_parent.insert(e.target);
  }

  std::set<std::pair<std::vector<Span>, std::string>> trigger_keys;
  std::set<std::vector<Span>> argument_anchors;
  for (const Node& n : graph.nodes) {
    if (n.id == graph.top) continue;
    const std::string who = "node " + std::to_string(n.id);
    auto it = event_types.find(n.id);
    if (it != event_types.end()) {
      if (it->second.size() > 1)
        return fail(who + " carries more than one event type");
      if (!trigger_keys.emplace(n.anchors, it->second.front()).second)
        return fail(who + " repeats trigger " + anchors_text(n.anchors) +
                    " with event type '" + it->second.front() + "'");
    } else {
      if (!has_trigger_parent.contains(n.id))
        return fail(who + " is attached to no trigger");
      if (!argument_anchors.insert(n.anchors).second)
        return fail(who + " repeats argument anchor " + anchors_text(n.anchors));
    }
  }
  return {};
}

std::vector<EventMention> decode_graph(const EventGraph& graph,
                                       const Sentence& sentence) {
  if (ValidationResult r = validate_graph(graph, &sentence); !r)
    throw ValidationError(r.violation);

  auto single_span = [&](int id) {
    const Node* n = graph.find_node(id);
    if (n->anchors.size() != 1) {
      throw ValidationError("node " + std::to_string(id) +
                            " has a non-contiguous anchor");
    }
    return n->anchors.front();
  };

  std::map<int, std::string> event_type;
  for (const Edge& e : graph.edges)
    if (e.source == graph.top) event_type.emplace(e.target, e.label);

  std::vector<EventMention> mentions;
  for (const Node& n : graph.nodes) {
    auto it = event_type.find(n.id);
    if (it == event_type.end()) continue;
    EventMention m;
    m.trigger = single_span(n.id);
    m.event_type = it->second;
    for (const Edge& e : graph.edges)
      if (e.source == n.id)
        m.arguments.push_back(Argument{e.label, single_span(e.target)});
    mentions.push_back(std::move(m));
  }
  return mentions;
}

}  // namespace evgraph
