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

#include "evgraph/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <ostream>
#include <random>

#include "evgraph/checkpoint.hpp"
#include "evgraph/errors.hpp"
#include "evgraph/optim.hpp"

namespace evgraph {

using nlohmann::json;
using nlohmann::ordered_json;

double TrainConfig::effective_encoder_lr(EncoderKind kind) const {
  if (encoder_lr) return *encoder_lr;
  return kind == EncoderKind::kToy ? 1.0e-4 : 4.0e-6;
}

std::int64_t TrainConfig::total_steps(std::size_t n_train) const {
  const std::int64_t b = batch_size;
  const std::int64_t per_epoch = (static_cast<std::int64_t>(n_train) + b - 1) / b;
  return per_epoch * epochs;
}

void TrainConfig::validate(std::size_t n_train) const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("train config: " + what);
  };
  need(batch_size >= 1, "batch_size must be >= 1");
  need(epochs >= 1, "epochs must be >= 1");
  need(eval_every >= 1, "eval_every must be >= 1");
  need(decoder_lr > 0.0 && (!encoder_lr || *encoder_lr > 0.0), "learning rates must be > 0");
  need(encoder_weight_decay >= 0.0 && decoder_weight_decay >= 0.0,
       "weight decays must be >= 0");
  need(warmup_steps >= 0, "warmup_steps must be >= 0");
  if (n_train > 0)
    need(warmup_steps < total_steps(n_train),
         "warmup_steps (" + std::to_string(warmup_steps) + ") must be below the " +
             std::to_string(total_steps(n_train)) + " total optimizer steps");
}

ordered_json TrainConfig::to_json() const {
  ordered_json j;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["encoder_lr"] = encoder_lr ? ordered_json(*encoder_lr) : ordered_json(nullptr);
  j["decoder_lr"] = decoder_lr;
  j["encoder_weight_decay"] = encoder_weight_decay;
  j["decoder_weight_decay"] = decoder_weight_decay;
  j["warmup_steps"] = warmup_steps;
  j["seed"] = seed;
  j["eval_every"] = eval_every;
  return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  if (j.contains("encoder_lr") && !j.at("encoder_lr").is_null())
    c.encoder_lr = j.at("encoder_lr").get<double>();
  get("decoder_lr", c.decoder_lr);
  get("encoder_weight_decay", c.encoder_weight_decay);
  get("decoder_weight_decay", c.decoder_weight_decay);
  get("warmup_steps", c.warmup_steps);
  get("seed", c.seed);
  get("eval_every", c.eval_every);
  if (j.contains("checkpoint_dir"))
    c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
  return c;
}

ordered_json epoch_to_json(const EpochRecord& r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["loss_node"] = r.node;
  j["loss_anchor"] = r.anchor;
  j["loss_edge_presence"] = r.edge_presence;
  j["loss_edge_label"] = r.edge_label;
  j["rejected"] = r.n_rejected;
  j["lr"] = r.lr_decoder;
  j["dev"] = r.dev ? report_to_json(*r.dev) : ordered_json(nullptr);
  return j;
}

void check_vocabulary(const ModelConfig& model, const Corpus& corpus) {
  Ontology used = infer_ontology(corpus.sentences);
  for (const auto& t : corpus.ontology.event_types) used.add_event_type(t);
  for (const auto& r : corpus.ontology.roles) used.add_role(r);
  std::string missing;
  auto note = [&](const char* kind, const std::string& label) {
    missing += (missing.empty() ? "" : ", ") + std::string(kind) + " '" + label + "'";
  };
  for (const auto& t : used.event_types)
    if (std::find(model.event_types.begin(), model.event_types.end(), t) ==
        model.event_types.end())
      note("event type", t);
  for (const auto& r : used.roles)
    if (std::find(model.roles.begin(), model.roles.end(), r) == model.roles.end())
      note("role", r);
  if (!missing.empty())
    throw VocabularyError("corpus labels missing from the model vocabulary: " + missing);
}

ModelConfig resolve_vocabulary(ModelConfig model, const Corpus& train, const Corpus& dev) {
  if (model.event_types.empty() && model.roles.empty()) {
    Ontology all = train.ontology;
    for (const Corpus* c : {&train, &dev}) {
      const Ontology used = infer_ontology(c->sentences);
      for (const auto& t : c->ontology.event_types) all.add_event_type(t);
      for (const auto& r : c->ontology.roles) all.add_role(r);
      for (const auto& t : used.event_types) all.add_event_type(t);
      for (const auto& r : used.roles) all.add_role(r);
    }
    model.event_types = all.event_types;
    model.roles = all.roles;
  }
  check_vocabulary(model, train);
  check_vocabulary(model, dev);
  return model;
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  for (std::size_t i = n; i > 1; --i) {
    // Multiply-shift keeps the draw independent of the standard library.
    const auto j = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng()) * i) >> 64);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Corpus predict_corpus(const EventGraphParser<float>& parser, const Corpus& corpus) {
  Corpus pred;
  pred.ontology.event_types = parser.config().event_types;
  pred.ontology.roles = parser.config().roles;
  pred.sentences.resize(corpus.sentences.size());
  std::vector<std::exception_ptr> errors(corpus.sentences.size());
  const long n = static_cast<long>(corpus.sentences.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const Sentence& s = corpus.sentences[i].sentence;
      pred.sentences[i].sentence = s;
      pred.sentences[i].events = decode_graph(parser.predict_graph(s), s);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return pred;
}

ScoreReport evaluate_model(const EventGraphParser<float>& parser, const Corpus& corpus) {
  check_vocabulary(parser.config(), corpus);
  return score_report(predict_corpus(parser, corpus), corpus);
}

ScoreReport evaluate_model(const std::filesystem::path& checkpoint, const Corpus& corpus) {
  return evaluate_model(load_model(checkpoint), corpus);
}

void save_model(const std::filesystem::path& path, const ModelConfig& model,
                const TrainConfig& train, const ordered_json& meta,
                const ParamStore<float>& params) {
  ordered_json config;
  config["model"] = model.to_json();
  config["train"] = train.to_json();
  save_checkpoint(path, config, meta, params);
}

EventGraphParser<float> load_model(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!ckpt.config.contains("model"))
    throw CheckpointError("checkpoint '" + path.string() + "' has no model config");
  return EventGraphParser<float>(ModelConfig::from_json(ckpt.config.at("model")),
                                 std::move(ckpt.params));
}

namespace {

struct SentenceStep {
  bool rejected = false;
  GradientSet<float> grads;
  double loss = 0.0, node = 0.0, anchor = 0.0, edge_presence = 0.0, edge_label = 0.0;
};

bool better(const ScoreReport& a, const ScoreReport& b) {
  if (a.arg_c_perfect.f1 != b.arg_c_perfect.f1) return a.arg_c_perfect.f1 > b.arg_c_perfect.f1;
  return a.trg_c.f1 > b.trg_c.f1;
}

}  // namespace

TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus, ModelConfig model,
                  const TrainConfig& train, std::ostream* log,
                  std::shared_ptr<const ExternalEmbeddings> external) {
  if (train_corpus.sentences.empty()) throw ConfigError("training corpus is empty");
  model = resolve_vocabulary(std::move(model), train_corpus, dev_corpus);
  model.validate();
  const std::size_t n = train_corpus.sentences.size();
  train.validate(n);

  EventGraphParser<float> parser(model);
  if (external) parser.set_external_embeddings(external);
  ParamStore<float>& params = parser.params();

  std::vector<EventGraph> gold;
  gold.reserve(n);
  for (const auto& s : train_corpus.sentences)
    gold.push_back(encode_graph(s.sentence, s.events));

  const double encoder_peak = train.effective_encoder_lr(model.encoder);
  const double decoder_peak = train.decoder_lr;
  OptimState<float> state = make_optim_state(
      params, {AdamWHyper{encoder_peak, 0.9, 0.98, 1e-8, train.encoder_weight_decay},
               AdamWHyper{decoder_peak, 0.9, 0.98, 1e-8, train.decoder_weight_decay}});
  const std::int64_t total = train.total_steps(n);
  const std::size_t batch = static_cast<std::size_t>(train.batch_size);

  std::ofstream history_out;
  if (!train.checkpoint_dir.empty()) {
    std::filesystem::create_directories(train.checkpoint_dir);
    history_out.open(train.checkpoint_dir / "history.jsonl", std::ios::trunc);
    if (!history_out) throw Error("cannot write history in '" + train.checkpoint_dir.string() + "'");
  }

  TrainResult result;
  result.model = model;
  std::optional<ScoreReport> best;
  std::vector<Tensor<float>> grads;
  for (const auto& p : params) grads.emplace_back(p.value.shape);

  std::int64_t step = 0;
  for (int epoch = 1; epoch <= train.epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(train.seed, epoch, n);
    EpochRecord record;
    record.epoch = epoch;
    std::size_t accepted_total = 0;

    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(n, begin + batch);
      std::vector<SentenceStep> steps(end - begin);
      std::vector<std::exception_ptr> errors(end - begin);
      const long m = static_cast<long>(end - begin);
#pragma omp parallel for schedule(dynamic)
      for (long i = 0; i < m; ++i) {
        try {
          const std::size_t idx = order[begin + static_cast<std::size_t>(i)];
          Tape<float> t(&params, true);
          ForwardContext ctx;
          ctx.dropout = ops::DropoutContext{true, train.seed, static_cast<std::uint64_t>(step),
                                            static_cast<std::uint64_t>(idx)};
          const ParseVars vars = parser.forward(t, train_corpus.sentences[idx].sentence, ctx);
          Assignment assignment;
          try {
            assignment = match_targets(values_of(t, vars), gold[idx]);
          } catch (const CapacityError&) {
            steps[i].rejected = true;
            continue;
          }
          const LossTerms terms = training_loss(t, vars, gold[idx], assignment, model);
          t.backward(terms.total);
          steps[i].grads = t.gradients();
          steps[i].loss = terms.value;
          steps[i].node = terms.node;
          steps[i].anchor = terms.anchor;
          steps[i].edge_presence = terms.edge_presence;
          steps[i].edge_label = terms.edge_label;
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
      for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

      std::size_t accepted = 0;
      for (const auto& s : steps) accepted += s.rejected ? 0 : 1;
      record.n_rejected += steps.size() - accepted;

      const double lr_enc = lr_at_step(step, train.warmup_steps, total, encoder_peak);
      const double lr_dec = lr_at_step(step, train.warmup_steps, total, decoder_peak);
      state.groups[kEncoderGroup].lr = lr_enc;
      state.groups[kDecoderGroup].lr = lr_dec;
      result.lr_trace.push_back(lr_dec);
      record.lr_decoder = lr_dec;

      if (accepted > 0) {
        for (auto& g : grads) g.fill(0.0f);
        const float scale = 1.0f / static_cast<float>(accepted);
        for (const auto& s : steps) {
          if (s.rejected) continue;
          s.grads.add_to(grads, scale);
          record.loss += s.loss;
          record.node += s.node;
          record.anchor += s.anchor;
          record.edge_presence += s.edge_presence;
          record.edge_label += s.edge_label;
        }
        adamw_step(params, grads, state);
        accepted_total += accepted;
      }
      ++step;
    }

    if (accepted_total > 0) {
      const double k = static_cast<double>(accepted_total);
      record.loss /= k;
      record.node /= k;
      record.anchor /= k;
      record.edge_presence /= k;
      record.edge_label /= k;
    }

    const bool last = epoch == train.epochs;
    if (!dev_corpus.sentences.empty() && (epoch % train.eval_every == 0 || last)) {
      record.dev = evaluate_model(parser, dev_corpus);
      if (!best || better(*record.dev, *best)) {
        best = record.dev;
        result.best_epoch = epoch;
        result.best_params = params;
        if (!train.checkpoint_dir.empty()) {
          ordered_json meta;
          meta["epoch"] = epoch;
          meta["dev"] = report_to_json(*record.dev);
          save_model(train.checkpoint_dir / "best.ckpt", model, train, meta, params);
        }
      }
    }
    if (dev_corpus.sentences.empty() && last) {
      result.best_epoch = epoch;
      result.best_params = params;
      if (!train.checkpoint_dir.empty()) {
        ordered_json meta;
        meta["epoch"] = epoch;
        meta["dev"] = nullptr;
        save_model(train.checkpoint_dir / "best.ckpt", model, train, meta, params);
      }
    }

    if (history_out) history_out << epoch_to_json(record).dump() << '\n' << std::flush;
    if (log) {
      *log << "epoch " << epoch << " loss " << record.loss;
      if (record.n_rejected) *log << " rejected " << record.n_rejected;
      if (record.dev)
        *log << " dev Trg-C F1 " << record.dev->trg_c.f1 << " Arg-C F1 "
             << record.dev->arg_c_perfect.f1;
      *log << '\n' << std::flush;
    }
    result.history.push_back(std::move(record));
  }
  return result;
}

AggregateReport aggregate_reports(const std::vector<ScoreReport>& reports) {
  AggregateReport a;
  a.n_runs = reports.size();
  auto stat = [&](auto field) {
    MeanStd s;
    if (reports.empty()) return s;
    for (const auto& r : reports) s.mean += field(r);
    s.mean /= static_cast<double>(reports.size());
    if (reports.size() > 1) {
      double ss = 0.0;
      for (const auto& r : reports) ss += (field(r) - s.mean) * (field(r) - s.mean);
      s.std = std::sqrt(ss / static_cast<double>(reports.size() - 1));
    }
    return s;
  };
  a.trg_c_f1 = stat([](const ScoreReport& r) { return r.trg_c.f1; });
  a.arg_c_perfect_f1 = stat([](const ScoreReport& r) { return r.arg_c_perfect.f1; });
  a.arg_c_overlap_f1 = stat([](const ScoreReport& r) { return r.arg_c_overlap.f1; });
  a.presence_accuracy = stat([](const ScoreReport& r) { return r.presence_accuracy; });
  return a;
}

ordered_json aggregate_to_json(const AggregateReport& a) {
  auto ms = [](const MeanStd& s) { return ordered_json{{"mean", s.mean}, {"std", s.std}}; };
  ordered_json j;
  j["runs"] = a.n_runs;
  j["trg_c_f1"] = ms(a.trg_c_f1);
  j["arg_c_perfect_f1"] = ms(a.arg_c_perfect_f1);
  j["arg_c_overlap_f1"] = ms(a.arg_c_overlap_f1);
  j["presence_accuracy"] = ms(a.presence_accuracy);
  return j;
}

}  // namespace evgraph
