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

#include "evgraph/corpus_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "evgraph/errors.hpp"

namespace evgraph {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool sorted_contains(const std::vector<std::string>& v, const std::string& s) {
  return std::binary_search(v.begin(), v.end(), s);
}

void sorted_insert(std::vector<std::string>& v, const std::string& s) {
  auto it = std::lower_bound(v.begin(), v.end(), s);
  if (it == v.end() || *it != s) v.insert(it, s);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string at_line(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

// Calls fn(json, line_number) for every non-blank line.
template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(at_line(line) + "JSON syntax error: " + e.what(), line);
    }
    try {
      fn(j, line);
    } catch (const json::exception& e) {
      throw ParseError(at_line(line) + "schema error: " + e.what(), line);
    }
  }
  if (in.bad()) throw Error("read failure");
}

Span span_from(const json& j) {
  return Span{j.at("start").get<int>(), j.at("end").get<int>()};
}

}  // namespace

bool Ontology::has_event_type(const std::string& label) const {
  return sorted_contains(event_types, label);
}
bool Ontology::has_role(const std::string& label) const {
  return sorted_contains(roles, label);
}
void Ontology::add_event_type(const std::string& label) {
  sorted_insert(event_types, label);
}
void Ontology::add_role(const std::string& label) { sorted_insert(roles, label); }

Ontology infer_ontology(const std::vector<AnnotatedSentence>& sentences) {
  Ontology o;
  for (const AnnotatedSentence& s : sentences) {
    for (const EventMention& m : s.events) {
      o.add_event_type(m.event_type);
      for (const Argument& a : m.arguments) o.add_role(a.role);
    }
  }
  return o;
}

Ontology load_ontology(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("ontology '" + path.string() + "': " + e.what(), 1);
  }
  Ontology o;
  for (const auto& t : j.at("event_types")) o.add_event_type(t.get<std::string>());
  for (const auto& r : j.at("roles")) o.add_role(r.get<std::string>());
  return o;
}

void save_ontology(const Ontology& ontology, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  ordered_json j;
  j["event_types"] = ontology.event_types;
  j["roles"] = ontology.roles;
  out << j.dump() << '\n';
}

ordered_json sentence_to_json(const AnnotatedSentence& s) {
  ordered_json j;
  j["sent_id"] = s.sentence.id;
  j["tokens"] = s.sentence.tokens;
  ordered_json events = ordered_json::array();
  for (const EventMention& m : s.events) {
    ordered_json e;
    e["trigger"] = {{"start", m.trigger.start},
                    {"end", m.trigger.end},
                    {"type", m.event_type}};
    ordered_json args = ordered_json::array();
    for (const Argument& a : m.arguments)
      args.push_back({{"start", a.span.start}, {"end", a.span.end}, {"role", a.role}});
    e["arguments"] = std::move(args);
    events.push_back(std::move(e));
  }
  j["events"] = std::move(events);
  return j;
}

AnnotatedSentence sentence_from_json(const json& j) {
  AnnotatedSentence s;
  s.sentence.id = j.at("sent_id").get<std::string>();
  s.sentence.tokens = j.at("tokens").get<std::vector<std::string>>();
  if (j.contains("events")) {
    for (const json& e : j.at("events")) {
      EventMention m;
      const json& t = e.at("trigger");
      m.trigger = span_from(t);
      m.event_type = t.at("type").get<std::string>();
      if (e.contains("arguments")) {
        for (const json& a : e.at("arguments"))
          m.arguments.push_back(Argument{a.at("role").get<std::string>(), span_from(a)});
      }
      s.events.push_back(std::move(m));
    }
  }
  return s;
}

ordered_json graph_to_json(const EventGraph& g) {
  ordered_json j;
  j["id"] = g.sentence_id;
  j["tops"] = ordered_json::array({g.top});
  ordered_json nodes = ordered_json::array();
  for (const Node& n : g.nodes) {
    ordered_json anchors = ordered_json::array();
    for (const Span& s : n.anchors) anchors.push_back({{"start", s.start}, {"end", s.end}});
    nodes.push_back({{"id", n.id}, {"anchors", std::move(anchors)}});
  }
  j["nodes"] = std::move(nodes);
  ordered_json edges = ordered_json::array();
  for (const Edge& e : g.edges)
    edges.push_back({{"source", e.source}, {"target", e.target}, {"label", e.label}});
  j["edges"] = std::move(edges);
  return j;
}

EventGraph graph_from_json(const json& j) {
  EventGraph g;
  g.sentence_id = j.at("id").get<std::string>();
  const json& tops = j.at("tops");
  if (tops.size() != 1)
    throw ValidationError("expected exactly one top node, found " +
                          std::to_string(tops.size()));
  g.top = tops.at(0).get<int>();
  for (const json& n : j.at("nodes")) {
    Node node;
    node.id = n.at("id").get<int>();
    if (n.contains("anchors"))
      for (const json& a : n.at("anchors")) node.anchors.push_back(span_from(a));
    g.nodes.push_back(std::move(node));
  }
  for (const json& e : j.at("edges")) {
    g.edges.push_back(Edge{e.at("source").get<int>(), e.at("target").get<int>(),
                           e.at("label").get<std::string>()});
  }
  return g;
}

Corpus read_corpus(std::istream& in, const Ontology* declared) {
  Corpus corpus;
  std::set<std::string> ids;
  for_each_json_line(in, [&](const json& j, std::size_t line) {
    AnnotatedSentence s = sentence_from_json(j);
    if (s.sentence.tokens.empty())
      throw ParseError(at_line(line) + "sentence has no tokens", line);
    if (!ids.insert(s.sentence.id).second)
      throw ParseError(at_line(line) + "duplicate sent_id '" + s.sentence.id + "'",
                       line);
    for (const EventMention& m : s.events) {
      try {
        check_span(m.trigger, s.sentence, "trigger");
        for (const Argument& a : m.arguments) check_span(a.span, s.sentence, "argument");
      } catch (const BoundsError& e) {
        throw BoundsError(at_line(line) + e.what());
      }
      if (declared) {
        if (!declared->has_event_type(m.event_type))
          throw VocabularyError(at_line(line) + "event type '" + m.event_type +
                                "' is not in the ontology");
        for (const Argument& a : m.arguments)
          if (!declared->has_role(a.role))
            throw VocabularyError(at_line(line) + "role '" + a.role +
                                  "' is not in the ontology");
      }
    }
    corpus.sentences.push_back(std::move(s));
  });
  corpus.ontology = declared ? *declared : infer_ontology(corpus.sentences);
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path, const Ontology* declared) {
  std::ifstream in = open_in(path);
  return read_corpus(in, declared);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const AnnotatedSentence& s : corpus.sentences)
    out << sentence_to_json(s).dump() << '\n';
  if (!out) throw Error("write failure");
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_corpus(corpus, out);
}

std::vector<EventGraph> read_graphs(std::istream& in) {
  std::vector<EventGraph> graphs;
  for_each_json_line(in, [&](const json& j, std::size_t line) {
    EventGraph g;
    try {
      g = graph_from_json(j);
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(line) + e.what());
    }
    if (ValidationResult r = validate_graph(g); !r)
      throw ValidationError(at_line(line) + r.violation);
    graphs.push_back(std::move(g));
  });
  return graphs;
}

std::vector<EventGraph> read_graphs(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_graphs(in);
}

void write_graphs(const std::vector<EventGraph>& graphs, std::ostream& out) {
  for (const EventGraph& g : graphs) out << graph_to_json(g).dump() << '\n';
  if (!out) throw Error("write failure");
}

void write_graphs(const std::vector<EventGraph>& graphs,
                  const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_graphs(graphs, out);
}

FileSchema detect_schema(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(at_line(line) + "JSON syntax error: " + e.what(), line);
    }
    if (j.is_object() && j.contains("tops") && j.contains("nodes"))
      return FileSchema::kGraph;
    if (j.is_object() && j.contains("sent_id") && j.contains("tokens"))
      return FileSchema::kCorpus;
    throw ParseError(at_line(line) + "neither a corpus nor a graph record", line);
  }
  return FileSchema::kEmpty;
}

CorpusStats compute_stats(const Corpus& corpus) {
  CorpusStats st;
  st.sentence_count = corpus.sentences.size();
  std::size_t trigger_tokens = 0, arg_tokens = 0, single = 0;
  for (const AnnotatedSentence& s : corpus.sentences) {
    for (const EventMention& m : s.events) {
      ++st.event_count;
      trigger_tokens += static_cast<std::size_t>(m.trigger.length());
      for (const Argument& a : m.arguments) {
        ++st.role_count;
        arg_tokens += static_cast<std::size_t>(a.span.length());
        if (a.span.length() == 1) ++single;
      }
    }
  }
  if (st.event_count > 0)
    st.avg_trigger_len = static_cast<double>(trigger_tokens) / st.event_count;
  if (st.role_count > 0) {
    st.avg_arg_len = static_cast<double>(arg_tokens) / st.role_count;
    st.single_token_arg_pct = 100.0 * single / st.role_count;
    st.multi_token_arg_pct = 100.0 * (st.role_count - single) / st.role_count;
  }
  return st;
}

}  // namespace evgraph
