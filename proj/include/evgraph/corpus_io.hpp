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

// Line-delimited JSON corpora and graph files, ontologies, and corpus
// statistics.
//
// Corpus line:
//   {"sent_id": str, "tokens": [str],
//    "events": [{"trigger": {"start": int, "end": int, "type": str},
//                "arguments": [{"start": int, "end": int, "role": str}]}]}
// Graph line:
//   {"id": str, "tops": [int],
//    "nodes": [{"id": int, "anchors": [{"start": int, "end": int}]}],
//    "edges": [{"source": int, "target": int, "label": str}]}
// Span ends are exclusive.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "evgraph/graph.hpp"
#include "json.hpp"

namespace evgraph {

// Sorted, duplicate-free label sets.
struct Ontology {
  std::vector<std::string> event_types;
  std::vector<std::string> roles;

  bool has_event_type(const std::string& label) const;
  bool has_role(const std::string& label) const;
  void add_event_type(const std::string& label);
  void add_role(const std::string& label);
  bool empty() const { return event_types.empty() && roles.empty(); }
  friend bool operator==(const Ontology&, const Ontology&) = default;
};

struct AnnotatedSentence {
  Sentence sentence;
  std::vector<EventMention> events;
  friend bool operator==(const AnnotatedSentence&,
                         const AnnotatedSentence&) = default;
};

struct Corpus {
  std::vector<AnnotatedSentence> sentences;
  Ontology ontology;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct CorpusStats {
  std::size_t sentence_count = 0;
  std::size_t event_count = 0;
  std::size_t role_count = 0;
  double avg_trigger_len = 0.0;
  double avg_arg_len = 0.0;
  double single_token_arg_pct = 0.0;
  double multi_token_arg_pct = 0.0;
};

Ontology infer_ontology(const std::vector<AnnotatedSentence>& sentences);
Ontology load_ontology(const std::filesystem::path& path);
void save_ontology(const Ontology& ontology, const std::filesystem::path& path);

// With a declared ontology, labels outside it raise VocabularyError;
// otherwise the ontology is inferred from the data.
Corpus read_corpus(std::istream& in, const Ontology* declared = nullptr);
Corpus read_corpus(const std::filesystem::path& path,
                   const Ontology* declared = nullptr);
void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Every graph is validated structurally while loading.
std::vector<EventGraph> read_graphs(std::istream& in);
std::vector<EventGraph> read_graphs(const std::filesystem::path& path);
void write_graphs(const std::vector<EventGraph>& graphs, std::ostream& out);
void write_graphs(const std::vector<EventGraph>& graphs,
                  const std::filesystem::path& path);

nlohmann::ordered_json sentence_to_json(const AnnotatedSentence& s);
AnnotatedSentence sentence_from_json(const nlohmann::json& j);
nlohmann::ordered_json graph_to_json(const EventGraph& g);
EventGraph graph_from_json(const nlohmann::json& j);

enum class FileSchema { kEmpty, kCorpus, kGraph };

// Looks at the first non-blank line.
FileSchema detect_schema(const std::filesystem::path& path);

CorpusStats compute_stats(const Corpus& corpus);

}  // namespace evgraph
