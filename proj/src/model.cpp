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

#include "evgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "evgraph/errors.hpp"

namespace evgraph {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const char* encoder_name(EncoderKind k) {
  return k == EncoderKind::kToy ? "toy" : "external";
}

// Residual branches start small so deep stacks begin near the identity.
double residual_scale(int n_layers) { return 1.0 / std::sqrt(2.0 * std::max(1, n_layers)); }

// Distinct dropout site ranges per layer.
constexpr std::uint64_t kEncoderSite = 100;
constexpr std::uint64_t kDecoderSite = 1000;

}  // namespace

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("model config: " + what);
  };
  need(d_model >= 1, "d_model must be >= 1");
  need(n_queries_per_token >= 1, "n_queries_per_token must be >= 1");
  need(n_decoder_layers >= 0 && n_encoder_layers >= 0, "layer counts must be >= 0");
  need(n_heads >= 1 && d_model % n_heads == 0, "d_model must be divisible by n_heads");
  need(hidden_size_anchor >= 1 && hidden_size_edge_presence >= 1 &&
           hidden_size_edge_label >= 1,
       "hidden sizes must be >= 1");
  need(dropout_transformer >= 0.0 && dropout_transformer < 1.0 && dropout_attention >= 0.0 &&
           dropout_attention < 1.0,
       "dropout rates must lie in [0, 1)");
  need(n_hash_buckets >= 1, "n_hash_buckets must be >= 1");
  need(encoder == EncoderKind::kToy || external_dim >= 1,
       "external encoder needs external_dim >= 1");
  need(!event_types.empty(), "label vocabulary needs at least one event type");
  std::set<std::string> seen_types(event_types.begin(), event_types.end());
  std::set<std::string> seen_roles(roles.begin(), roles.end());
  need(seen_types.size() == event_types.size() && seen_roles.size() == roles.size(),
       "duplicate labels");
}

ordered_json ModelConfig::to_json() const {
  ordered_json j;
  j["d_model"] = d_model;
  j["n_queries_per_token"] = n_queries_per_token;
  j["n_decoder_layers"] = n_decoder_layers;
  j["n_encoder_layers"] = n_encoder_layers;
  j["n_heads"] = n_heads;
  j["hidden_size_anchor"] = hidden_size_anchor;
  j["hidden_size_edge_presence"] = hidden_size_edge_presence;
  j["hidden_size_edge_label"] = hidden_size_edge_label;
  j["dropout_transformer"] = dropout_transformer;
  j["dropout_attention"] = dropout_attention;
  j["encoder"] = encoder_name(encoder);
  j["n_hash_buckets"] = n_hash_buckets;
  j["external_dim"] = external_dim;
  j["threshold"] = threshold;
  j["w_node"] = w_node;
  j["w_anchor"] = w_anchor;
  j["w_edge_presence"] = w_edge_presence;
  j["w_edge_label"] = w_edge_label;
  j["init_seed"] = init_seed;
  j["event_types"] = event_types;
  j["roles"] = roles;
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("d_model", c.d_model);
  get("n_queries_per_token", c.n_queries_per_token);
  get("n_decoder_layers", c.n_decoder_layers);
  get("n_encoder_layers", c.n_encoder_layers);
  get("n_heads", c.n_heads);
  get("hidden_size_anchor", c.hidden_size_anchor);
  get("hidden_size_edge_presence", c.hidden_size_edge_presence);
  get("hidden_size_edge_label", c.hidden_size_edge_label);
  get("dropout_transformer", c.dropout_transformer);
  get("dropout_attention", c.dropout_attention);
  if (j.contains("encoder")) {
    const std::string kind = j.at("encoder").get<std::string>();
    if (kind == "toy") c.encoder = EncoderKind::kToy;
    else if (kind == "external") c.encoder = EncoderKind::kExternal;
    else throw ConfigError("unknown encoder kind '" + kind + "'");
  }
  get("n_hash_buckets", c.n_hash_buckets);
  get("external_dim", c.external_dim);
  get("threshold", c.threshold);
  get("w_node", c.w_node);
  get("w_anchor", c.w_anchor);
  get("w_edge_presence", c.w_edge_presence);
  get("w_edge_label", c.w_edge_label);
  get("init_seed", c.init_seed);
  get("event_types", c.event_types);
  get("roles", c.roles);
  return c;
}

template <typename Real>
ParseOutput<Real> values_of(const Tape<Real>& t, const ParseVars& v) {
  return ParseOutput<Real>{t.value(v.node_presence), t.value(v.anchors),
                           t.value(v.edge_presence), t.value(v.edge_labels)};
}

ExternalEmbeddings load_external_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings '" + path.string() + "'");
  ExternalEmbeddings table;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(text);
      const std::string id = j.at("sent_id").get<std::string>();
      const auto rows = j.at("vectors").get<std::vector<std::vector<float>>>();
      if (rows.empty()) throw ParseError("line " + std::to_string(line) + ": no vectors", line);
      if (table.dim == 0) table.dim = rows.front().size();
      Tensor<float> t({rows.size(), table.dim});
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != table.dim)
          throw ParseError("line " + std::to_string(line) + ": vector width " +
                               std::to_string(rows[i].size()) + ", expected " +
                               std::to_string(table.dim),
                           line);
        std::copy(rows[i].begin(), rows[i].end(), t.data.begin() + i * table.dim);
      }
      table.by_sentence[id] = std::move(t);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
    }
  }
  return table;
}

template <typename Real>
EventGraphParser<Real>::EventGraphParser(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  build();
}

template <typename Real>
EventGraphParser<Real>::EventGraphParser(ModelConfig config, ParamStore<Real> params)
    : config_(std::move(config)) {
  config_.validate();
  build();
  if (params.size() != params_.size())
    throw CheckpointError("expected " + std::to_string(params_.size()) + " parameters, got " +
                          std::to_string(params.size()));
  for (auto& p : params_) {
    if (!params.contains(p.name)) throw CheckpointError("missing parameter '" + p.name + "'");
    const auto& src = params.at(p.name);
    if (src.value.shape != p.value.shape)
      throw CheckpointError("parameter '" + p.name + "' has shape " +
                            shape_str(src.value.shape) + ", expected " +
                            shape_str(p.value.shape));
    p.value = src.value;
  }
}

template <typename Real>
typename EventGraphParser<Real>::DeepBiaffine EventGraphParser<Real>::add_biaffine(
    const std::string& prefix, std::size_t d_src, std::size_t d_tgt, std::size_t hidden,
    std::size_t k, bool tied, std::mt19937_64& rng) {
  auto weight = [&](const std::string& name, std::size_t in, std::size_t out) {
    Tensor<Real> w({in, out});
    init_uniform(w, xavier_bound(in, out), rng);
    return params_.add(prefix + "." + name, std::move(w), kDecoderGroup);
  };
  DeepBiaffine p{};
  p.src_w = weight("src_w", d_src, hidden);
  p.src_b = params_.add(prefix + ".src_b", Tensor<Real>({hidden}), kDecoderGroup);
  Tensor<Real> u({hidden, k, hidden});
  if (tied && d_src == d_tgt) {
    // Shared projections and a scaled identity make a query score the
    // tokens most similar to itself highest before any training.
    p.tgt_w = params_.add(prefix + ".tgt_w", params_[p.src_w].value, kDecoderGroup);
    const Real diag = Real(1) / std::sqrt(static_cast<Real>(hidden));
    for (std::size_t h = 0; h < hidden; ++h)
      for (std::size_t c = 0; c < k; ++c) u.data[(h * k + c) * hidden + h] = diag;
  } else {
    p.tgt_w = weight("tgt_w", d_tgt, hidden);
  }
  p.tgt_b = params_.add(prefix + ".tgt_b", Tensor<Real>({hidden}), kDecoderGroup);
  p.u = params_.add(prefix + ".u", std::move(u), kDecoderGroup);
  p.w = weight("w", 2 * hidden, k);
  p.b = params_.add(prefix + ".b", Tensor<Real>({k}), kDecoderGroup);
  return p;
}

template <typename Real>
void EventGraphParser<Real>::build() {
  std::mt19937_64 rng(config_.init_seed);
  const std::size_t d = static_cast<std::size_t>(config_.d_model);
  const std::size_t n = static_cast<std::size_t>(config_.n_queries_per_token);

  if (config_.encoder == EncoderKind::kToy) {
    Tensor<Real> table({static_cast<std::size_t>(config_.n_hash_buckets), d});
    // Unit variance after averaging three subwords, on par with the
    // positional encoding.
    init_uniform(table, 3.0, rng);
    embedding_ = params_.add("encoder.embedding", std::move(table), kEncoderGroup);
    subword_score_ = params_.add("encoder.subword_score", Tensor<Real>({d}), kEncoderGroup);
    for (int l = 0; l < config_.n_encoder_layers; ++l)
      encoder_blocks_.push_back(
          register_block(params_, "encoder.layer" + std::to_string(l), d, kEncoderGroup, rng,
                         residual_scale(config_.n_encoder_layers)));
    encoder_ln_gain_ = params_.add("encoder.ln.gain", Tensor<Real>({d}, Real(1)), kEncoderGroup);
    encoder_ln_bias_ = params_.add("encoder.ln.bias", Tensor<Real>({d}), kEncoderGroup);
  } else {
    const std::size_t e = static_cast<std::size_t>(config_.external_dim);
    Tensor<Real> w({e, d});
    init_uniform(w, xavier_bound(e, d), rng);
    external_w_ = params_.add("encoder.external.w", std::move(w), kEncoderGroup);
    external_b_ = params_.add("encoder.external.b", Tensor<Real>({d}), kEncoderGroup);
  }

  // Every query starts near its token's embedding.
  Tensor<Real> qw({d, n * d});
  init_uniform(qw, 0.5 * xavier_bound(d, d), rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r) qw.data[r * n * d + i * d + r] += Real(1);
  query_w_ = params_.add("query.w", std::move(qw), kDecoderGroup);
  query_b_ = params_.add("query.b", Tensor<Real>({n * d}), kDecoderGroup);
  for (int l = 0; l < config_.n_decoder_layers; ++l)
    decoder_blocks_.push_back(
        register_block(params_, "decoder.layer" + std::to_string(l), d, kDecoderGroup, rng,
                         residual_scale(config_.n_decoder_layers)));

  Tensor<Real> pw({d, 1});
  init_uniform(pw, xavier_bound(d, 1), rng);
  presence_w_ = params_.add("node.w", std::move(pw), kDecoderGroup);
  presence_b_ = params_.add("node.b", Tensor<Real>({1}), kDecoderGroup);

  Tensor<Real> top({1, d});
  init_uniform(top, 0.5, rng);
  top_ = params_.add("top", std::move(top), kDecoderGroup);

  anchor_ = add_biaffine("anchor", d, d, static_cast<std::size_t>(config_.hidden_size_anchor), 1,
                         true, rng);
  edge_presence_ = add_biaffine("edge_presence", d, d,
                                static_cast<std::size_t>(config_.hidden_size_edge_presence), 1,
                                false, rng);
  edge_label_ = add_biaffine("edge_label", d, d,
                             static_cast<std::size_t>(config_.hidden_size_edge_label),
                             config_.n_labels(), false, rng);
}

template <typename Real>
void EventGraphParser<Real>::set_external_embeddings(
    std::shared_ptr<const ExternalEmbeddings> table) {
  external_ = std::move(table);
}

template <typename Real>
std::vector<std::size_t> EventGraphParser<Real>::subword_buckets(const std::string& token) const {
  const std::uint64_t buckets = static_cast<std::uint64_t>(config_.n_hash_buckets);
  const std::string prefix = token.substr(0, 3);
  const std::string suffix = token.size() > 3 ? token.substr(token.size() - 3) : token;
  return {static_cast<std::size_t>(fnv1a("w:" + token) % buckets),
          static_cast<std::size_t>(fnv1a("p:" + prefix) % buckets),
          static_cast<std::size_t>(fnv1a("s:" + suffix) % buckets)};
}

template <typename Real>
Var EventGraphParser<Real>::pool_subwords(Tape<Real>& t, Var subwords) const {
  if (t.value(subwords).rank() != 2 || t.value(subwords).shape[0] == 0)
    throw ShapeError("pool_subwords: needs at least one subword vector");
  return ops::attention_pool(t, subwords, t.param(subword_score_));
}

template <typename Real>
Var EventGraphParser<Real>::embed_sentence(Tape<Real>& t, const Sentence& sentence,
                                           const ForwardContext& ctx) const {
  if (sentence.tokens.empty())
    throw ShapeError("sentence '" + sentence.id + "' has no tokens");
  const std::size_t T = sentence.tokens.size();
  const std::size_t d = static_cast<std::size_t>(config_.d_model);

  if (config_.encoder == EncoderKind::kExternal) {
    if (!external_) throw ConfigError("external encoder has no embedding table attached");
    auto it = external_->by_sentence.find(sentence.id);
    if (it == external_->by_sentence.end())
      throw ConfigError("no external vectors for sentence '" + sentence.id + "'");
    const Tensor<float>& vecs = it->second;
    if (vecs.shape[1] != static_cast<std::size_t>(config_.external_dim))
      throw ShapeError("external vectors of sentence '" + sentence.id + "' have width " +
                       std::to_string(vecs.shape[1]) + ", expected " +
                       std::to_string(config_.external_dim));
    if (vecs.shape[0] != T)
      throw ShapeError("sentence '" + sentence.id + "' has " + std::to_string(T) +
                       " tokens but " + std::to_string(vecs.shape[0]) + " vectors");
    return ops::linear(t, t.constant(vecs.template cast<Real>()), t.param(external_w_),
                       t.param(external_b_));
  }

  std::vector<Var> rows;
  rows.reserve(T);
  for (const std::string& token : sentence.tokens)
    rows.push_back(pool_subwords(t, ops::gather_rows(t, embedding_, subword_buckets(token))));
  Var x = ops::concat_rows(t, rows);

  const BlockOptions options{static_cast<std::size_t>(config_.n_heads),
                             config_.dropout_transformer, config_.dropout_attention};
  if (encoder_blocks_.empty())
    x = ops::add(t, x, t.constant(positional_encoding<Real>(T, d)));
  for (std::size_t l = 0; l < encoder_blocks_.size(); ++l)
    x = self_attention_block(t, x, encoder_blocks_[l], l == 0, options, ctx.dropout,
                             kEncoderSite + 10 * l);
  return ops::layer_norm(t, x, t.param(encoder_ln_gain_), t.param(encoder_ln_bias_));
}

template <typename Real>
Var EventGraphParser<Real>::generate_queries(Tape<Real>& t, Var token_embeddings) const {
  const Tensor<Real>& E = t.value(token_embeddings);
  const std::size_t d = static_cast<std::size_t>(config_.d_model);
  if (E.rank() != 2 || E.shape[1] != d)
    throw ShapeError("generate_queries: embeddings " + shape_str(E.shape) + ", d_model " +
                     std::to_string(d));
  const std::size_t rows = E.shape[0] * static_cast<std::size_t>(config_.n_queries_per_token);
  Var q = ops::linear(t, token_embeddings, t.param(query_w_), t.param(query_b_));
  return ops::reshape(t, q, {rows, d});
}

template <typename Real>
Var EventGraphParser<Real>::run_decoder(Tape<Real>& t, Var queries,
                                        const ForwardContext& ctx) const {
  const Tensor<Real>& Q = t.value(queries);
  if (Q.rank() != 2 || Q.shape[1] != static_cast<std::size_t>(config_.d_model))
    throw ShapeError("run_decoder: queries " + shape_str(Q.shape));
  const BlockOptions options{static_cast<std::size_t>(config_.n_heads),
                             config_.dropout_transformer, config_.dropout_attention};
  Var x = queries;
  for (std::size_t l = 0; l < decoder_blocks_.size(); ++l)
    x = self_attention_block(t, x, decoder_blocks_[l], false, options, ctx.dropout,
                             kDecoderSite + 10 * l);
  return x;
}

template <typename Real>
Var EventGraphParser<Real>::apply_biaffine(Tape<Real>& t, const DeepBiaffine& p, Var src,
                                           Var tgt) const {
  Var hs = ops::gelu(t, ops::linear(t, src, t.param(p.src_w), t.param(p.src_b)));
  Var ht = ops::gelu(t, ops::linear(t, tgt, t.param(p.tgt_w), t.param(p.tgt_b)));
  return ops::biaffine(t, hs, ht, t.param(p.u), t.param(p.w), t.param(p.b));
}

template <typename Real>
ParseVars EventGraphParser<Real>::score_heads(Tape<Real>& t, Var augmented_queries,
                                              Var token_embeddings) const {
  const Tensor<Real>& Q = t.value(augmented_queries);
  const Tensor<Real>& E = t.value(token_embeddings);
  const std::size_t d = static_cast<std::size_t>(config_.d_model);
  if (Q.rank() != 2 || E.rank() != 2 || Q.shape[1] != d || E.shape[1] != d)
    throw ShapeError("score_heads: queries " + shape_str(Q.shape) + " embeddings " +
                     shape_str(E.shape));
  const std::size_t nq = Q.shape[0], T = E.shape[0];

  ParseVars out;
  out.node_presence = ops::reshape(
      t, ops::linear(t, augmented_queries, t.param(presence_w_), t.param(presence_b_)), {nq});
  out.anchors =
      ops::reshape(t, apply_biaffine(t, anchor_, augmented_queries, token_embeddings), {nq, T});
  Var sources = ops::concat_rows(t, t.param(top_), augmented_queries);
  out.edge_presence = ops::reshape(
      t, apply_biaffine(t, edge_presence_, sources, augmented_queries), {nq + 1, nq});
  out.edge_labels = apply_biaffine(t, edge_label_, sources, augmented_queries);
  return out;
}

template <typename Real>
ParseVars EventGraphParser<Real>::forward(Tape<Real>& t, const Sentence& sentence,
                                          const ForwardContext& ctx) const {
  Var emb = embed_sentence(t, sentence, ctx);
  Var queries = run_decoder(t, generate_queries(t, emb), ctx);
  return score_heads(t, queries, emb);
}

template <typename Real>
ParseOutput<Real> EventGraphParser<Real>::parse(const Sentence& sentence) const {
  Tape<Real> t(&params_, false);
  return values_of(t, forward(t, sentence, ForwardContext{}));
}

template <typename Real>
EventGraph EventGraphParser<Real>::predict_graph(const Sentence& sentence) const {
  return decode_output(parse(sentence), sentence, config_);
}

GoldNodes gold_nodes(const EventGraph& gold, std::size_t n_tokens) {
  // Nodes sharing anchors tie in the matching cost, so order them by
  // (anchors, incoming labels) to keep the assignment independent of the
  // order nodes and edges appear in.
  std::map<int, std::vector<std::string>> incoming;
  for (const Edge& e : gold.edges)
    incoming[e.target].push_back((e.source == gold.top ? "T:" : "R:") + e.label);
  std::vector<std::tuple<std::vector<Span>, std::vector<std::string>, const Node*>> order;
  for (const Node& n : gold.nodes) {
    if (n.id == gold.top) continue;
    std::vector<std::string> labels = incoming[n.id];
    std::sort(labels.begin(), labels.end());
    order.emplace_back(n.anchors, std::move(labels), &n);
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  GoldNodes g;
  for (const auto& entry : order) {
    const Node& n = *std::get<2>(entry);
    std::vector<char> mask(n_tokens, 0);
    for (const Span& s : n.anchors)
      for (int i = std::max(0, s.start); i < s.end && i < static_cast<int>(n_tokens); ++i)
        mask[static_cast<std::size_t>(i)] = 1;
    g.ids.push_back(n.id);
    g.masks.push_back(std::move(mask));
  }
  return g;
}

template <typename Real>
std::vector<std::vector<double>> matching_costs(const ParseOutput<Real>& out,
                                                const GoldNodes& gold) {
  const std::size_t Q = out.n_queries(), T = out.n_tokens();
  // Anchor bce of every (query, token) against both targets.
  std::vector<double> neg(Q * T), pos(Q * T);
  for (std::size_t i = 0; i < Q * T; ++i) {
    const double z = static_cast<double>(out.anchors.data[i]);
    neg[i] = ops::bce_value(z, 0.0);
    pos[i] = ops::bce_value(z, 1.0);
  }
  std::vector<std::vector<double>> cost(gold.ids.size(), std::vector<double>(Q));
  for (std::size_t g = 0; g < gold.ids.size(); ++g) {
    for (std::size_t q = 0; q < Q; ++q) {
      double anchor = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        anchor += gold.masks[g][t] ? pos[q * T + t] : neg[q * T + t];
      cost[g][q] = ops::bce_value(static_cast<double>(out.node_presence.data[q]), 1.0) +
                   (T ? anchor / static_cast<double>(T) : 0.0);
    }
  }
  return cost;
}

template <typename Real>
Assignment match_targets(const ParseOutput<Real>& out, const EventGraph& gold) {
  const GoldNodes nodes = gold_nodes(gold, out.n_tokens());
  if (nodes.ids.size() > out.n_queries())
    throw CapacityError("graph '" + gold.sentence_id + "' has " +
                        std::to_string(nodes.ids.size()) + " nodes but only " +
                        std::to_string(out.n_queries()) + " queries");
  return hungarian(matching_costs(out, nodes));
}

template <typename Real>
LossTerms training_loss(Tape<Real>& t, const ParseVars& vars, const EventGraph& gold,
                        const Assignment& assignment, const ModelConfig& config) {
  const std::size_t Q = t.value(vars.node_presence).size();
  const std::size_t T = t.value(vars.anchors).shape.at(1);
  const std::size_t L = config.n_labels();
  const GoldNodes nodes = gold_nodes(gold, T);
  if (assignment.column_of_row.size() != nodes.ids.size())
    throw ShapeError("training_loss: assignment covers " +
                     std::to_string(assignment.column_of_row.size()) + " of " +
                     std::to_string(nodes.ids.size()) + " gold nodes");

  std::map<int, std::size_t> query_of;  // gold node id -> query
  for (std::size_t g = 0; g < nodes.ids.size(); ++g)
    query_of[nodes.ids[g]] = assignment.column_of_row[g];

  Tensor<Real> node_target({Q}), node_mask({Q}, Real(1));
  Tensor<Real> anchor_target({Q, T}), anchor_mask({Q, T});
  for (std::size_t g = 0; g < nodes.ids.size(); ++g) {
    const std::size_t q = assignment.column_of_row[g];
    node_target.data[q] = Real(1);
    for (std::size_t k = 0; k < T; ++k) {
      anchor_mask.data[q * T + k] = Real(1);
      anchor_target.data[q * T + k] = nodes.masks[g][k] ? Real(1) : Real(0);
    }
  }

  std::map<std::string, std::size_t> type_index, role_index;
  for (std::size_t i = 0; i < config.event_types.size(); ++i) type_index[config.event_types[i]] = i;
  for (std::size_t i = 0; i < config.roles.size(); ++i)
    role_index[config.roles[i]] = config.event_types.size() + i;

  auto source_row = [&](int id) { return id == gold.top ? 0 : 1 + query_of.at(id); };
  Tensor<Real> edge_target({Q + 1, Q}), edge_mask({Q + 1, Q});
  std::vector<std::size_t> source_rows = {0};
  for (std::size_t g = 0; g < nodes.ids.size(); ++g)
    source_rows.push_back(1 + assignment.column_of_row[g]);
  for (std::size_t r : source_rows)
    for (std::size_t g = 0; g < nodes.ids.size(); ++g)
      edge_mask.data[r * Q + assignment.column_of_row[g]] = Real(1);

  std::vector<std::pair<std::size_t, std::size_t>> label_pairs;
  for (const Edge& e : gold.edges) {
    const std::size_t row = source_row(e.source);
    const std::size_t col = query_of.at(e.target);
    edge_target.data[row * Q + col] = Real(1);
    const auto& index = e.source == gold.top ? type_index : role_index;
    auto it = index.find(e.label);
    if (it == index.end())
      throw VocabularyError("label '" + e.label + "' of graph '" + gold.sentence_id +
                            "' is not in the model vocabulary");
    label_pairs.emplace_back(row * Q + col, it->second);
  }

  LossTerms terms;
  Var l_node = ops::bce_with_logits(t, vars.node_presence, node_target, node_mask);
  Var l_anchor = ops::bce_with_logits(t, vars.anchors, anchor_target, anchor_mask);
  Var l_edge = ops::bce_with_logits(t, vars.edge_presence, edge_target, edge_mask);
  Var flat_labels = ops::reshape(t, vars.edge_labels, {(Q + 1) * Q, L});
  Var l_label = ops::softmax_ce(t, flat_labels, label_pairs);
  terms.total = ops::weighted_sum<Real>(
      t, {l_node, l_anchor, l_edge, l_label},
      {static_cast<Real>(config.w_node), static_cast<Real>(config.w_anchor),
       static_cast<Real>(config.w_edge_presence), static_cast<Real>(config.w_edge_label)});
  terms.node = static_cast<double>(t.value(l_node).data[0]);
  terms.anchor = static_cast<double>(t.value(l_anchor).data[0]);
  terms.edge_presence = static_cast<double>(t.value(l_edge).data[0]);
  terms.edge_label = static_cast<double>(t.value(l_label).data[0]);
  terms.value = static_cast<double>(t.value(terms.total).data[0]);
  return terms;
}

Span longest_run(const std::vector<char>& mask) {
  Span best{0, 0};
  int start = -1;
  const int n = static_cast<int>(mask.size());
  for (int i = 0; i <= n; ++i) {
    const bool on = i < n && mask[static_cast<std::size_t>(i)];
    if (on && start < 0) start = i;
    if (!on && start >= 0) {
      if (i - start > best.length()) best = Span{start, i};
      start = -1;
    }
  }
  return best;
}

template <typename Real>
EventGraph decode_output(const ParseOutput<Real>& out, const Sentence& sentence,
                         const ModelConfig& config) {
  const std::size_t Q = out.n_queries(), T = out.n_tokens();
  const std::size_t L = config.n_labels();
  const std::size_t n_types = config.event_types.size();
  const Real thr = static_cast<Real>(config.threshold);
  if (out.anchors.shape != Shape{Q, T} || out.edge_presence.shape != Shape{Q + 1, Q} ||
      out.edge_labels.shape != Shape{Q + 1, Q, L} || T != sentence.tokens.size())
    throw ShapeError("decode_output: scores do not match the sentence and label vocabulary");

  auto argmax = [&](std::size_t row, std::size_t col, std::size_t lo, std::size_t hi) {
    const Real* z = out.edge_labels.ptr() + (row * Q + col) * L;
    std::size_t best = lo;
    for (std::size_t c = lo + 1; c < hi; ++c)
      if (z[c] > z[best]) best = c;
    return best;
  };
  auto edge_on = [&](std::size_t row, std::size_t col) {
    return ops::sigmoid(out.edge_presence.data[row * Q + col]) > thr;
  };

  // Nodes: present queries with a non-empty anchor.
  std::vector<Span> anchor(Q);
  std::vector<char> kept(Q, 0);
  for (std::size_t q = 0; q < Q; ++q) {
    if (!(ops::sigmoid(out.node_presence.data[q]) > thr)) continue;
    std::vector<char> mask(T);
    for (std::size_t t = 0; t < T; ++t)
      mask[t] = ops::sigmoid(out.anchors.data[q * T + t]) > thr;
    anchor[q] = longest_run(mask);
    kept[q] = anchor[q].length() > 0;
  }

  // Triggers: kept nodes with a top edge, unique per (span, event type).
  std::vector<std::size_t> triggers;
  std::vector<std::size_t> trigger_type;
  std::vector<char> is_trigger(Q, 0);
  std::set<std::pair<Span, std::size_t>> trigger_keys;
  for (std::size_t q = 0; q < Q; ++q) {
    if (!kept[q] || !edge_on(0, q)) continue;
    is_trigger[q] = 1;
    const std::size_t type = argmax(0, q, 0, n_types);
    if (!trigger_keys.emplace(anchor[q], type).second) continue;
    triggers.push_back(q);
    trigger_type.push_back(type);
  }

  // Argument candidates merged by span; first query wins.
  std::map<Span, std::size_t> argument_of_span;
  std::vector<std::size_t> arguments;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> incoming;  // (trigger, role)
  for (std::size_t q = 0; q < Q; ++q) {
    if (!kept[q] || is_trigger[q] || argument_of_span.contains(anchor[q])) continue;
    argument_of_span.emplace(anchor[q], arguments.size());
    arguments.push_back(q);
  }
  incoming.resize(arguments.size());
  std::vector<std::set<std::pair<std::size_t, std::size_t>>> edge_seen(arguments.size());
  if (L > n_types) {
    for (std::size_t k = 0; k < triggers.size(); ++k) {
      for (std::size_t q = 0; q < Q; ++q) {
        if (!kept[q] || is_trigger[q] || q == triggers[k]) continue;
        if (!edge_on(1 + triggers[k], q)) continue;
        const std::size_t a = argument_of_span.at(anchor[q]);
        const std::size_t role = argmax(1 + triggers[k], q, n_types, L);
        if (edge_seen[a].emplace(k, role).second) incoming[a].emplace_back(k, role);
      }
    }
  }

  EventGraph g;
  g.sentence_id = sentence.id;
  g.top = 0;
  g.nodes.push_back(Node{0, {}});
  int next_id = 1;
  for (std::size_t k = 0; k < triggers.size(); ++k) {
    g.nodes.push_back(Node{next_id, {anchor[triggers[k]]}});
    g.edges.push_back(Edge{0, next_id, config.event_types[trigger_type[k]]});
    ++next_id;
  }
  std::vector<std::vector<Edge>> by_trigger(triggers.size());
  for (std::size_t a = 0; a < arguments.size(); ++a) {
    if (incoming[a].empty()) continue;
    const int id = next_id++;
    g.nodes.push_back(Node{id, {anchor[arguments[a]]}});
    for (const auto& [k, role] : incoming[a])
      by_trigger[k].push_back(Edge{static_cast<int>(k) + 1, id, config.roles[role - n_types]});
  }
  for (const auto& edges : by_trigger) g.edges.insert(g.edges.end(), edges.begin(), edges.end());
  return g;
}

template class EventGraphParser<float>;
template class EventGraphParser<double>;
template ParseOutput<float> values_of(const Tape<float>&, const ParseVars&);
template ParseOutput<double> values_of(const Tape<double>&, const ParseVars&);
template std::vector<std::vector<double>> matching_costs(const ParseOutput<float>&,
                                                         const GoldNodes&);
template std::vector<std::vector<double>> matching_costs(const ParseOutput<double>&,
                                                         const GoldNodes&);
template Assignment match_targets(const ParseOutput<float>&, const EventGraph&);
template Assignment match_targets(const ParseOutput<double>&, const EventGraph&);
template LossTerms training_loss(Tape<float>&, const ParseVars&, const EventGraph&,
                                 const Assignment&, const ModelConfig&);
template LossTerms training_loss(Tape<double>&, const ParseVars&, const EventGraph&,
                                 const Assignment&, const ModelConfig&);
template EventGraph decode_output(const ParseOutput<float>&, const Sentence&,
                                  const ModelConfig&);
template EventGraph decode_output(const ParseOutput<double>&, const Sentence&,
                                  const ModelConfig&);

}  // namespace evgraph
