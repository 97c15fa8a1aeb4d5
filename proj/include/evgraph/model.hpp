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

// Text-to-graph event parser.
//
//   tokens -> contextual embeddings (T, d)
//          -> n queries per token (T*n, d)
//          -> permutation-invariant decoder (no positional information)
//          -> node presence, anchor, edge presence and edge label scores
//
// Row t*n+i of every query-indexed output belongs to query i of token t.
// Edge scores use one extra source row 0 for the virtual top node, so query
// q is source row q+1.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "evgraph/graph.hpp"
#include "evgraph/matching.hpp"
#include "evgraph/transformer.hpp"
#include "json.hpp"

namespace evgraph {

enum class EncoderKind { kToy, kExternal };

struct ModelConfig {
  int d_model = 64;
  int n_queries_per_token = 2;
  int n_decoder_layers = 3;
  int n_encoder_layers = 2;
  int n_heads = 4;
  int hidden_size_anchor = 256;
  int hidden_size_edge_presence = 256;
  int hidden_size_edge_label = 256;
  double dropout_transformer = 0.25;
  double dropout_attention = 0.1;
  EncoderKind encoder = EncoderKind::kToy;
  int n_hash_buckets = 8192;
  int external_dim = 0;
  double threshold = 0.5;
  double w_node = 1.0;
  double w_anchor = 1.0;
  double w_edge_presence = 1.0;
  double w_edge_label = 1.0;
  std::uint64_t init_seed = 1;
  // Edge labels are the event types followed by the roles.
  std::vector<std::string> event_types;
  std::vector<std::string> roles;

  std::size_t n_labels() const { return event_types.size() + roles.size(); }
  // Throws ConfigError.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Parameter groups with separate optimizer settings.
inline constexpr int kEncoderGroup = 0;
inline constexpr int kDecoderGroup = 1;

// Raw parser scores for one sentence of length T with n queries per token.
template <typename Real>
struct ParseOutput {
  Tensor<Real> node_presence;   // (T*n)
  Tensor<Real> anchors;         // (T*n, T)
  Tensor<Real> edge_presence;   // (T*n+1, T*n)
  Tensor<Real> edge_labels;     // (T*n+1, T*n, L)

  std::size_t n_queries() const { return node_presence.size(); }
  std::size_t n_tokens() const { return anchors.rank() == 2 ? anchors.shape[1] : 0; }
};

// The same scores as tape variables.
struct ParseVars {
  Var node_presence;
  Var anchors;
  Var edge_presence;
  Var edge_labels;
};

template <typename Real>
ParseOutput<Real> values_of(const Tape<Real>& t, const ParseVars& v);

// Per-token vectors supplied from a file, keyed by sentence id.
struct ExternalEmbeddings {
  std::size_t dim = 0;
  std::unordered_map<std::string, Tensor<float>> by_sentence;
};

// Line-delimited {"sent_id": str, "vectors": [[float, ...], ...]}.
ExternalEmbeddings load_external_embeddings(const std::filesystem::path& path);

struct ForwardContext {
  ops::DropoutContext dropout;
};

struct LossTerms {
  Var total;
  double node = 0.0;
  double anchor = 0.0;
  double edge_presence = 0.0;
  double edge_label = 0.0;
  double value = 0.0;
};

template <typename Real>
class EventGraphParser {
 public:
  // Parameters are initialized from config.init_seed.
  explicit EventGraphParser(ModelConfig config);
  // Adopts the given parameters; names and shapes must match the config.
  EventGraphParser(ModelConfig config, ParamStore<Real> params);

  const ModelConfig& config() const { return config_; }
  ParamStore<Real>& params() { return params_; }
  const ParamStore<Real>& params() const { return params_; }

  void set_external_embeddings(std::shared_ptr<const ExternalEmbeddings> table);

  // (T, d_model) contextual token embeddings.
  Var embed_sentence(Tape<Real>& t, const Sentence& sentence, const ForwardContext& ctx) const;
  // Softmax-weighted sum of subword vectors (s, d) with learned scores; (1, d).
  Var pool_subwords(Tape<Real>& t, Var subwords) const;
  // (T, d) -> (T*n, d).
  Var generate_queries(Tape<Real>& t, Var token_embeddings) const;
  Var run_decoder(Tape<Real>& t, Var queries, const ForwardContext& ctx) const;
  ParseVars score_heads(Tape<Real>& t, Var augmented_queries, Var token_embeddings) const;
  ParseVars forward(Tape<Real>& t, const Sentence& sentence, const ForwardContext& ctx) const;

  // Scores without dropout.
  ParseOutput<Real> parse(const Sentence& sentence) const;
  EventGraph predict_graph(const Sentence& sentence) const;

 private:
  void build();
  std::vector<std::size_t> subword_buckets(const std::string& token) const;

  ModelConfig config_;
  ParamStore<Real> params_;
  std::shared_ptr<const ExternalEmbeddings> external_;

  // Parameter indices.
  std::size_t embedding_ = 0, subword_score_ = 0;
  std::size_t external_w_ = 0, external_b_ = 0;
  std::vector<BlockParams> encoder_blocks_;
  std::size_t encoder_ln_gain_ = 0, encoder_ln_bias_ = 0;
  std::size_t query_w_ = 0, query_b_ = 0;
  std::vector<BlockParams> decoder_blocks_;
  std::size_t presence_w_ = 0, presence_b_ = 0;
  std::size_t top_ = 0;
  struct DeepBiaffine {
    std::size_t src_w, src_b, tgt_w, tgt_b, u, w, b;
  };
  DeepBiaffine anchor_{}, edge_presence_{}, edge_label_{};
  DeepBiaffine add_biaffine(const std::string& prefix, std::size_t d_src, std::size_t d_tgt,
                            std::size_t hidden, std::size_t k, bool tied, std::mt19937_64& rng);
  Var apply_biaffine(Tape<Real>& t, const DeepBiaffine& p, Var src, Var tgt) const;
};

// Gold graph nodes (everything but top) in canonical order, with token masks.
struct GoldNodes {
  std::vector<int> ids;
  std::vector<std::vector<char>> masks;  // one (T) mask per node
};
GoldNodes gold_nodes(const EventGraph& gold, std::size_t n_tokens);

// Matching cost of gold node g against query q:
//   bce(presence_q, 1) + mean_t bce(anchor_{q,t}, mask_g[t])
template <typename Real>
std::vector<std::vector<double>> matching_costs(const ParseOutput<Real>& out,
                                                const GoldNodes& gold);

// Gold node (gold_nodes order) -> query row. CapacityError when
// the graph has more nodes than there are queries.
template <typename Real>
Assignment match_targets(const ParseOutput<Real>& out, const EventGraph& gold);

// Weighted sum of node, anchor, edge presence and edge label losses.
template <typename Real>
LossTerms training_loss(Tape<Real>& t, const ParseVars& vars, const EventGraph& gold,
                        const Assignment& assignment, const ModelConfig& config);

// Deterministic thresholded decode of raw scores into a valid graph.
template <typename Real>
EventGraph decode_output(const ParseOutput<Real>& out, const Sentence& sentence,
                         const ModelConfig& config);

// Longest run of true entries, earliest on ties; empty span when none.
Span longest_run(const std::vector<char>& mask);

}  // namespace evgraph
