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

// Deterministic training loop: seeded epoch shuffles, per-sentence gradients
// reduced in sentence order, AdamW with a warmed-up cosine schedule per
// parameter group, and best-checkpoint selection on dev scores.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evgraph/corpus_io.hpp"
#include "evgraph/model.hpp"
#include "evgraph/scoring.hpp"

namespace evgraph {

struct TrainConfig {
  int batch_size = 16;
  int epochs = 180;
  // Unset means 4e-6 for an external encoder and 1e-4 for the toy encoder.
  std::optional<double> encoder_lr;
  double decoder_lr = 1.0e-4;
  double encoder_weight_decay = 0.1;
  double decoder_weight_decay = 1.2e-6;
  std::int64_t warmup_steps = 1000;
  std::uint64_t seed = 1;
  int eval_every = 1;
  std::filesystem::path checkpoint_dir;

  double effective_encoder_lr(EncoderKind kind) const;
  // Throws ConfigError.
  void validate(std::size_t n_train) const;
  std::int64_t total_steps(std::size_t n_train) const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double node = 0.0;
  double anchor = 0.0;
  double edge_presence = 0.0;
  double edge_label = 0.0;
  std::size_t n_rejected = 0;
  double lr_decoder = 0.0;  // rate of the last update in the epoch
  std::optional<ScoreReport> dev;
};

nlohmann::ordered_json epoch_to_json(const EpochRecord& r);

struct TrainResult {
  ModelConfig model;
  ParamStore<float> best_params;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  // Decoder-group learning rate used for every optimizer step.
  std::vector<double> lr_trace;
};

// Fills empty label vocabularies of the model from the corpora and checks
// that every corpus label is known otherwise.
ModelConfig resolve_vocabulary(ModelConfig model, const Corpus& train, const Corpus& dev);

// Position of every sentence in the batch order of one epoch.
std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n);

// Writes best.ckpt and history.jsonl into train.checkpoint_dir when set.
// Progress lines go to log when given.
TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus, ModelConfig model,
                  const TrainConfig& train, std::ostream* log = nullptr,
                  std::shared_ptr<const ExternalEmbeddings> external = nullptr);

// Predicted mentions for every sentence of the corpus.
Corpus predict_corpus(const EventGraphParser<float>& parser, const Corpus& corpus);

ScoreReport evaluate_model(const EventGraphParser<float>& parser, const Corpus& corpus);
ScoreReport evaluate_model(const std::filesystem::path& checkpoint, const Corpus& corpus);

void save_model(const std::filesystem::path& path, const ModelConfig& model,
                const TrainConfig& train, const nlohmann::ordered_json& meta,
                const ParamStore<float>& params);
EventGraphParser<float> load_model(const std::filesystem::path& path);

// Throws VocabularyError naming every corpus label the model does not know.
void check_vocabulary(const ModelConfig& model, const Corpus& corpus);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
};

struct AggregateReport {
  std::size_t n_runs = 0;
  MeanStd trg_c_f1;
  MeanStd arg_c_perfect_f1;
  MeanStd arg_c_overlap_f1;
  MeanStd presence_accuracy;
};

AggregateReport aggregate_reports(const std::vector<ScoreReport>& reports);
nlohmann::ordered_json aggregate_to_json(const AggregateReport& a);

}  // namespace evgraph
